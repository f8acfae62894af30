#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unistd.h>

#include "s3tm/common.hpp"

namespace s3tm::binary {

namespace detail {

template <typename U>
constexpr U byteswap(U v) {
  U out = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out = static_cast<U>((out << 8) | (v & 0xFF));
    v = static_cast<U>(v >> 8);
  }
  return out;
}

template <typename U>
constexpr U to_le(U v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return byteswap(v);
}

}  // namespace detail

// Append-only little-endian encoder.
class Writer {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(detail::to_le(v)); }
  void u64(std::uint64_t v) { put(detail::to_le(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  const std::string& data() const { return buf_; }
  std::string& data() { return buf_; }

 private:
  template <typename U>
  void put(U v) {
    char tmp[sizeof(U)];
    std::memcpy(tmp, &v, sizeof(U));
    buf_.append(tmp, sizeof(U));
  }
  std::string buf_;
};

// Bounds-checked little-endian decoder; errors name the byte offset.
class Reader {
 public:
  Reader(std::string_view data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  [[noreturn]] void error(const std::string& what) const {
    fail(context_, ": ", what, " at byte offset ", pos_);
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n)
      fail(context_, ": truncated data at byte offset ", pos_, " (need ", n, " bytes, have ",
           remaining(), ")");
  }
  template <typename U>
  U get() {
    auto raw = bytes(sizeof(U));
    U v;
    std::memcpy(&v, raw.data(), sizeof(U));
    return detail::to_le(v);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string context_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Writes to a sibling temporary file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write ", tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail("write failed for ", tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail("cannot rename ", tmp.string(), " to ", path.string(), ": ", ec.message());
  }
}

}  // namespace s3tm::binary
