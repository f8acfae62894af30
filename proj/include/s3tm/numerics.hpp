#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include "s3tm/common.hpp"
#include "s3tm/random.hpp"

namespace s3tm {

struct SvdResult {
  Matrix U;   // n x r, orthonormal columns (empty when not requested)
  Vector s;   // r, nonincreasing, nonnegative
  Matrix Vt;  // r x d, orthonormal rows
};

// Thin SVD backed by Eigen's divide-and-conquer solver (BDCSVD), which
// falls back to one-sided Jacobi sweeps on small blocks. Convergence failure
// is reported through Eigen's info() and rethrown as NumericError.
inline SvdResult svd(const Matrix& m, bool compute_u = true) {
  if (!m.allFinite()) throw NumericError("svd: input contains non-finite values");
  SvdResult out;
  if (m.rows() == 0 || m.cols() == 0) {
    out.U = Matrix(m.rows(), 0);
    out.s = Vector(0);
    out.Vt = Matrix(0, m.cols());
    return out;
  }
  const unsigned opts = static_cast<unsigned>(Eigen::ComputeThinV) | (compute_u ? static_cast<unsigned>(Eigen::ComputeThinU) : 0u);
  Eigen::BDCSVD<Matrix> solver(m, opts);
  if (solver.info() != Eigen::Success) throw NumericError("svd: solver did not converge");
  out.s = solver.singularValues();
  out.Vt = solver.matrixV().transpose();
  if (compute_u) out.U = solver.matrixU();
  return out;
}

// Number of singular values above the usual max(n, d) * eps * s_max threshold.
inline std::size_t effective_rank(const Vector& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) *
                     std::numeric_limits<double>::epsilon() * s(0);
  return static_cast<std::size_t>((s.array() > tol).count());
}

inline Matrix pseudo_inverse(const Matrix& a) {
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;
  const SvdResult f = svd(a);
  const std::size_t r = effective_rank(f.s, a.rows(), a.cols());
  for (std::size_t i = 0; i < r; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.noalias() += (f.Vt.row(idx).transpose() / f.s(idx)) * f.U.col(idx).transpose();
  }
  return out;
}

// Centering + projection onto the top-k principal directions, scaled so the
// projected training rows have identity covariance (n - 1 normalisation).
struct Whitener {
  Vector mean;                // d
  Matrix transform;           // k x d
  Matrix inverse_transform;   // d x k

  Eigen::Index components() const { return transform.rows(); }
  Eigen::Index dims() const { return transform.cols(); }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - mean.transpose()) * transform.transpose();
  }
};

inline Whitener fit_whitener(const Matrix& x, Eigen::Index k) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) fail("whitening needs at least 2 samples, got ", n);
  if (k < 1) fail("whitening needs k >= 1, got ", k);
  if (k > n) fail("whitening needs k <= n_samples (k=", k, ", n=", n, ")");
  if (k > d) throw RankError(detail::concat("requested ", k, " components but data has only ", d,
                                            " dimensions"),
                             static_cast<std::size_t>(std::min(n, d)));
  Whitener w;
  w.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - w.mean.transpose();
  const double scale = std::sqrt(static_cast<double>(n - 1));

  // Tall data: eigendecomposition of the d x d scatter matrix is far cheaper
  // than an SVD of the data. It is only trusted when the k-th component is
  // well above rounding level; a final k x k re-whitening removes the error
  // introduced by squaring.
  if (n >= 2 * d) {
    Matrix scatter = Matrix::Zero(d, d);
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    scatter = scatter.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
    if (eig.info() == Eigen::Success) {
      const Vector& lambda = eig.eigenvalues();  // ascending
      const double top = lambda(d - 1);
      const double kth = lambda(d - k);
      if (top > 0.0 && kth > 1e-8 * top) {
        Matrix v(d, k);
        Vector sv(k);
        for (Eigen::Index i = 0; i < k; ++i) {
          v.col(i) = eig.eigenvectors().col(d - 1 - i);
          sv(i) = std::sqrt(lambda(d - 1 - i));
        }
        const Matrix t0 = (scale * sv.cwiseInverse()).asDiagonal() * v.transpose();
        const Matrix z = centered * t0.transpose();
        const Matrix cz = z.transpose() * z / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Matrix> ez(cz);
        const Vector root = ez.eigenvalues().cwiseSqrt();
        const Matrix cz_inv_sqrt = ez.eigenvectors() * root.cwiseInverse().asDiagonal() * ez.eigenvectors().transpose();
        const Matrix cz_sqrt = ez.eigenvectors() * root.asDiagonal() * ez.eigenvectors().transpose();
        w.transform = cz_inv_sqrt * t0;
        w.inverse_transform = v * (sv / scale).asDiagonal() * cz_sqrt;
        return w;
      }
    }
  }

  const SvdResult f = svd(centered, /*compute_u=*/false);
  const std::size_t rank = effective_rank(f.s, n, d);
  if (rank < static_cast<std::size_t>(k))
    throw RankError(detail::concat("centered data has effective rank ", rank, " < ", k,
                                   " requested components"),
                    rank);
  const Vector inv_sd = scale * f.s.head(k).cwiseInverse();
  w.transform = inv_sd.asDiagonal() * f.Vt.topRows(k);
  w.inverse_transform = f.Vt.topRows(k).transpose() * (f.s.head(k) / scale).asDiagonal();
  return w;
}

enum class Nonlinearity { logcosh, exp, cube };

inline Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "logcosh") return Nonlinearity::logcosh;
  if (name == "exp") return Nonlinearity::exp;
  if (name == "cube") return Nonlinearity::cube;
  fail("unknown nonlinearity '", name, "' (expected logcosh, exp or cube)");
}

struct IcaOptions {
  Nonlinearity nonlinearity = Nonlinearity::logcosh;
  int max_iter = 200;
  double tol = 1e-4;
};

struct IcaResult {
  Whitener whitener;
  Matrix mixing;     // d x k, maps source strengths to centered embedding space
  Matrix unmixing;   // k x d, applies to centered raw-space vectors
  Matrix sources;    // n x k
  int n_iter = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

namespace detail {

// (W W^T)^{-1/2} W, which is the closest orthogonal matrix to W.
inline Matrix symmetric_decorrelation(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
  if (eig.info() != Eigen::Success) throw NumericError("symmetric decorrelation: eigensolver failed");
  const Vector vals = eig.eigenvalues();
  if (vals.minCoeff() <= 0.0) throw NumericError("symmetric decorrelation: singular unmixing estimate");
  const Matrix& vecs = eig.eigenvectors();
  return vecs * vals.cwiseSqrt().cwiseInverse().asDiagonal() * vecs.transpose() * w;
}

// Applies g elementwise in place and returns the column means of g'.
inline Vector apply_nonlinearity(Matrix& y, Nonlinearity f) {
  Vector mean_deriv(y.cols());
  const double n = static_cast<double>(y.rows());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double& u = y(i, j);
      switch (f) {
        case Nonlinearity::logcosh: {
          // tanh via exp: same result to within 2.3e-16, several times faster.
          const double t = 1.0 - 2.0 / (std::exp(2.0 * u) + 1.0);
          u = t;
          acc += 1.0 - t * t;
          break;
        }
        case Nonlinearity::exp: {
          const double u2 = u * u;
          const double e = std::exp(-0.5 * u2);
          u = u * e;
          acc += (1.0 - u2) * e;
          break;
        }
        case Nonlinearity::cube: {
          const double u2 = u * u;
          u = u2 * u;
          acc += 3.0 * u2;
          break;
        }
      }
    }
    mean_deriv(j) = acc / n;
  }
  return mean_deriv;
}

}  // namespace detail

// FastICA with symmetric (parallel) fixed-point updates on SVD-whitened data.
// The initial unmixing is a standard-normal k x k draw from Rng(seed).
inline IcaResult fastica(const Matrix& x, Eigen::Index k, RngSeed seed, const IcaOptions& opts = {}) {
  if (x.rows() < k) fail("fastica needs n_samples >= k (n=", x.rows(), ", k=", k, ")");
  if (!x.allFinite()) throw NumericError("fastica: input contains non-finite values");
  IcaResult res;
  res.whitener = fit_whitener(x, k);
  const Matrix z = res.whitener.apply(x);  // n x k, identity covariance
  const double n = static_cast<double>(z.rows());

  Rng rng(seed);
  Matrix w = detail::symmetric_decorrelation(rng.normal_matrix(k, k));
  for (int it = 1; it <= opts.max_iter; ++it) {
    Matrix g = z * w.transpose();
    const Vector mean_deriv = detail::apply_nonlinearity(g, opts.nonlinearity);
    Matrix w_next = (g.transpose() * z) / n - mean_deriv.asDiagonal() * w;
    if (!w_next.allFinite())
      throw NumericError(detail::concat("fastica: non-finite update at iteration ", it));
    w_next = detail::symmetric_decorrelation(w_next);
    const double lim = ((w_next * w.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    w = std::move(w_next);
    res.n_iter = it;
    if (lim < opts.tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged)
    res.warnings.push_back(detail::concat("fastica did not converge in ", opts.max_iter,
                                          " iterations (tol=", opts.tol, ")"));

  res.unmixing = w * res.whitener.transform;
  res.mixing = pseudo_inverse(res.unmixing);
  res.sources = (x.rowwise() - res.whitener.mean.transpose()) * res.unmixing.transpose();
  return res;
}

// Normalised Amari index of P = W A, in [0, 1]. Zero iff P is a scaled
// signed permutation. All-zero rows/columns contribute the maximum penalty.
inline double amari_index(const Matrix& w, const Matrix& a) {
  if (w.rows() != w.cols() || a.rows() != a.cols() || w.cols() != a.rows())
    fail("amari_index needs two square matrices of the same size");
  const Eigen::Index k = w.rows();
  if (k < 2) return 0.0;
  const Matrix p = (w * a).cwiseAbs();
  const double kd = static_cast<double>(k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double mx = p.row(i).maxCoeff();
    total += mx > 0.0 ? p.row(i).sum() / mx - 1.0 : kd - 1.0;
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mx = p.col(j).maxCoeff();
    total += mx > 0.0 ? p.col(j).sum() / mx - 1.0 : kd - 1.0;
  }
  return total / (2.0 * kd * (kd - 1.0));
}

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct TruncatedSvdResult {
  Matrix U;    // n x k
  Vector s;    // k
  Matrix Vt;   // k x m
  bool converged = true;
};

namespace detail {

inline Matrix orthonormal_basis(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

}  // namespace detail

// Top-k singular triplets of a sparse matrix. Small problems go through the
// dense solver; large ones use block subspace iteration with Rayleigh-Ritz
// extraction until the leading residuals fall below 1e-8 * s_max.
inline TruncatedSvdResult truncated_svd(const SparseRowMatrix& b, Eigen::Index k, RngSeed seed,
                                        int max_iter = 300) {
  const Eigen::Index n = b.rows();
  const Eigen::Index m = b.cols();
  const Eigen::Index full = std::min(n, m);
  if (k < 1 || k > full) fail("truncated_svd: k=", k, " outside [1, ", full, "]");
  TruncatedSvdResult out;
  if (full <= 600 || n * m <= 2'000'000) {
    const SvdResult f = svd(Matrix(b));
    out.U = f.U.leftCols(k);
    out.s = f.s.head(k);
    out.Vt = f.Vt.topRows(k);
    return out;
  }
  const Eigen::Index block = std::min(full, k + 10);
  Rng rng(seed);
  Matrix q = detail::orthonormal_basis(b * rng.normal_matrix(m, block));
  const SparseRowMatrix bt = b.transpose();
  out.converged = false;
  SvdResult ritz;
  Matrix z;
  for (int it = 0; it < max_iter; ++it) {
    z = bt * q;                            // m x block
    ritz = svd(z.transpose());             // q^T B = U_r S V_r^T
    const Matrix u = q * ritz.U.leftCols(k);
    const Matrix v = ritz.Vt.topRows(k).transpose();
    const Matrix resid = b * v - u * ritz.s.head(k).asDiagonal();
    if (resid.colwise().norm().maxCoeff() <= 1e-8 * ritz.s(0)) {
      out.converged = true;
      break;
    }
    q = detail::orthonormal_basis(b * detail::orthonormal_basis(z));
  }
  out.U = q * ritz.U.leftCols(k);
  out.s = ritz.s.head(k);
  out.Vt = ritz.Vt.topRows(k);
  return out;
}

}  // namespace s3tm
