#pragma once

#include <charconv>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace s3tm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown for malformed inputs, shape mismatches and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when an iterative numeric routine produces non-finite values or fails
// to converge where convergence is mandatory.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Thrown by fit_whitener / fastica when the data cannot support k components.
class RankError : public Error {
 public:
  RankError(const std::string& what, std::size_t effective_rank)
      : Error(what), effective_rank_(effective_rank) {}
  std::size_t effective_rank() const noexcept { return effective_rank_; }

 private:
  std::size_t effective_rank_;
};

// Seed for every stochastic routine in the library.
struct RngSeed {
  std::uint64_t value = 0;

  constexpr RngSeed() = default;
  constexpr explicit RngSeed(std::uint64_t v) : value(v) {}
  friend constexpr bool operator==(RngSeed, RngSeed) = default;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  throw Error(detail::concat(std::forward<Args>(args)...));
}

// Shortest decimal text that parses back to the same value.
inline std::string format_shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_shortest(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
  return std::string(buf, res.ptr);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace s3tm
