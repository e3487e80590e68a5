#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "errors.hpp"

namespace sml {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;  // columns
  double residual = 0.0;  // max_j ||A v_j - lambda_j v_j||_2
};

struct SubspacePair {
  Matrix U;
  Matrix U_hat;
};

struct ProcrustesResult {
  double distance = 0.0;
  Matrix rotation;  // O minimizing ||A - B O||_F
};

namespace detail {

inline void require_symmetric(const Matrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("matrix must be square");
  const double norm = A.norm();
  if ((A - A.transpose()).norm() > 1e-12 * std::max(norm, 1e-300)) {
    throw std::invalid_argument("matrix is not symmetric");
  }
}

// Largest-magnitude entry of each column made positive.
inline void fix_signs(Matrix& V) {
  for (Eigen::Index k = 0; k < V.cols(); ++k) {
    Eigen::Index arg = 0;
    V.col(k).cwiseAbs().maxCoeff(&arg);
    if (V(arg, k) < 0.0) V.col(k) *= -1.0;
  }
}

inline double residual(const Matrix& A, const Vector& w, const Matrix& V) {
  if (V.cols() == 0) return 0.0;
  return ((A * V) - V * w.asDiagonal()).colwise().norm().maxCoeff();
}

inline void certify(const Matrix& A, SpectralDecomposition& out) {
  out.residual = residual(A, out.eigenvalues, out.eigenvectors);
  // Frobenius norm dominates the operator norm, so this is the looser reading.
  const double bound = 1e-8 * std::max(A.norm(), 1e-300);
  if (!(out.residual <= bound)) {
    throw EigensolverFailure("eigen residual " + std::to_string(out.residual) +
                             " exceeds " + std::to_string(bound));
  }
}

}  // namespace detail

/// Full symmetric eigendecomposition (LAPACK divide and conquer).
inline SpectralDecomposition eigh(const Matrix& A) {
  detail::require_symmetric(A);
  const auto n = static_cast<lapack_int>(A.rows());
  SpectralDecomposition out;
  out.eigenvectors = A;
  out.eigenvalues.resize(n);
  if (n > 0) {
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.eigenvectors.data(),
                                           n, out.eigenvalues.data());
    if (info != 0) throw EigensolverFailure("dsyevd failed, info=" + std::to_string(info));
  }
  detail::fix_signs(out.eigenvectors);
  detail::certify(A, out);
  return out;
}

/// Eigenvalues only, ascending.
inline Vector eigvalsh(const Matrix& A) {
  detail::require_symmetric(A);
  const auto n = static_cast<lapack_int>(A.rows());
  Matrix work = A;
  Vector w(n);
  if (n > 0) {
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n, w.data());
    if (info != 0) throw EigensolverFailure("dsyevd failed, info=" + std::to_string(info));
  }
  return w;
}

/// The k smallest eigenpairs via an index-range dense solve (MRRR).
inline SpectralDecomposition eigh_lowest(const Matrix& A, Eigen::Index k) {
  detail::require_symmetric(A);
  const auto n = static_cast<lapack_int>(A.rows());
  k = std::clamp<Eigen::Index>(k, 0, n);
  SpectralDecomposition out;
  if (k == 0) {
    out.eigenvalues.resize(0);
    out.eigenvectors.resize(n, 0);
    return out;
  }
  Matrix work = A;
  Vector w(n);
  Matrix Z(n, k);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0,
                                         0.0, 1, static_cast<lapack_int>(k), 0.0, &found, w.data(),
                                         Z.data(), n, support.data());
  if (info != 0 || found != k) {
    throw EigensolverFailure("dsyevr failed, info=" + std::to_string(info));
  }
  out.eigenvalues = w.head(k);
  out.eigenvectors = std::move(Z);
  detail::fix_signs(out.eigenvectors);
  detail::certify(A, out);
  return out;
}

/// Largest singular value.
inline double operator_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() == A.cols() && (A - A.transpose()).norm() <= 1e-14 * A.norm()) {
    const Vector w = eigvalsh(0.5 * (A + A.transpose()));
    return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
  }
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

inline Matrix projector(const Matrix& V) { return V * V.transpose(); }

/// ||U_hat U_hat^T - U U^T||_F for orthonormal U, U_hat of equal width.
///
/// Equals sqrt(2j - 2 ||U_hat^T U||_F^2); the square is evaluated as
/// 2 ||U_hat - U U^T U_hat||_F^2, which avoids the cancellation of the
/// overlap form when the subspaces nearly coincide.
inline double projector_hs_distance(const Matrix& U, const Matrix& U_hat) {
  if (U.rows() != U_hat.rows() || U.cols() != U_hat.cols()) {
    throw std::invalid_argument("subspace shapes differ");
  }
  if (U.cols() == 0) return 0.0;
  const Matrix residual = U_hat - U * (U.transpose() * U_hat);
  return std::numbers::sqrt2 * residual.norm();
}

/// The overlap form sqrt(max(0, 2j - 2 ||U_hat^T U||_F^2)).
inline double projector_hs_distance_overlap(const Matrix& U, const Matrix& U_hat) {
  const double j = static_cast<double>(U.cols());
  const double overlap = (U_hat.transpose() * U).squaredNorm();
  return std::sqrt(std::max(0.0, 2.0 * j - 2.0 * overlap));
}

inline double projector_hs_distance(const SubspacePair& pair) {
  return projector_hs_distance(pair.U, pair.U_hat);
}

/// Orthogonal Procrustes: min over O in O(j) of ||A - B O||_F.
inline ProcrustesResult procrustes(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw std::invalid_argument("procrustes shapes differ");
  }
  ProcrustesResult out;
  if (A.cols() == 0) {
    out.rotation.resize(0, 0);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(B.transpose() * A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  // Same value as sqrt(||A||^2 + ||B||^2 - 2 sum sigma), without the cancellation.
  out.distance = (A - B * out.rotation).norm();
  return out;
}

inline double procrustes_distance(const Matrix& A, const Matrix& B) { return procrustes(A, B).distance; }

}  // namespace sml
