#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "report.hpp"
#include "spectral.hpp"

namespace sml {

/// Ascending for Laplacian-type matrices (bottom eigenspaces), descending for
/// covariance-type matrices (top eigenspaces).
enum class Order { Ascending, Descending };

inline constexpr double kGapThreshold = 1e-12;

namespace detail {

/// Eigenpairs listed leading-first in the requested convention, expressed as
/// the descending decomposition of sign * A (sign = -1 for Ascending).
struct Leading {
  Vector lambda;  // descending eigenvalues of sign * A
  Matrix V;
  double sign = 1.0;
  double norm = 0.0;
};

inline Leading leading(const Matrix& A, Order order) {
  const double sign = order == Order::Descending ? 1.0 : -1.0;
  SpectralDecomposition dec = eigh(sign * A);
  const Index n = A.rows();
  Leading out;
  out.sign = sign;
  out.lambda = dec.eigenvalues.reverse();
  out.V = dec.eigenvectors.rowwise().reverse();
  out.norm = n > 0 ? std::max(std::abs(out.lambda(0)), std::abs(out.lambda(n - 1))) : 0.0;
  return out;
}

inline double checked_gap(const Leading& L, Index j) {
  if (j < 1 || j >= L.lambda.size()) throw std::invalid_argument("block size must lie in [1, n-1]");
  const double gap = L.lambda(j - 1) - L.lambda(j);
  if (!(gap > kGapThreshold * std::max(L.norm, 1e-300))) {
    throw GapTooSmall("spectral gap " + std::to_string(gap) + " at j=" + std::to_string(j));
  }
  return gap;
}

inline Vector delta_weights(const Leading& L, Index j, double gap) {
  const Index n = L.lambda.size();
  Vector w(n);
  for (Index k = 0; k < n; ++k) w(k) = k < j ? 1.0 / gap : 1.0 / (L.lambda(j - 1) - L.lambda(k));
  return w;
}

inline double delta_from(const Leading& L, const Matrix& E, Index j) {
  const double gap = checked_gap(L, j);
  const Vector s = delta_weights(L, j, gap).cwiseSqrt();
  const Matrix Et = L.V.transpose() * (L.sign * E) * L.V;
  Matrix M = s.asDiagonal() * Et * s.asDiagonal();
  M = 0.5 * (M + M.transpose());
  return operator_norm(M);
}

inline std::map<std::string, double> fingerprint(Index n, Index j) {
  return {{"n", static_cast<double>(n)}, {"j", static_cast<double>(j)}};
}

inline Matrix inverse_sqrt_pd(const Matrix& A) {
  const SpectralDecomposition dec = eigh(A);
  const double top = dec.eigenvalues.size() ? dec.eigenvalues.maxCoeff() : 0.0;
  if (dec.eigenvalues.size() == 0 || !(dec.eigenvalues.minCoeff() > 1e-14 * top)) {
    throw NotPositiveDefinite("matrix is not positive definite");
  }
  return dec.eigenvectors * dec.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
         dec.eigenvectors.transpose();
}

}  // namespace detail

/// Gap-weighted perturbation size
///   || (P_{<=j}/gap + R_{>j})^{1/2} E (P_{<=j}/gap + R_{>j})^{1/2} ||_op
/// computed in the eigenbasis of A.
inline double delta_leq_j(const Matrix& A, const Matrix& E, Index j, Order order) {
  return detail::delta_from(detail::leading(A, order), E, j);
}

/// |lambda_j(B) - lambda_j(A)| <= ||B - A||_op for every j.
inline std::vector<BoundReport> check_absolute_weyl(const Matrix& A, const Matrix& B) {
  const Vector a = eigvalsh(A);
  const Vector b = eigvalsh(B);
  const double bound = operator_norm(B - A);
  std::vector<BoundReport> out;
  for (Index j = 0; j < a.size(); ++j) {
    out.push_back(BoundReport::make("absolute_weyl", std::abs(b(j) - a(j)), bound,
                                    detail::fingerprint(A.rows(), j + 1)));
  }
  return out;
}

/// ||P_hat_{<=j} - P_{<=j}||_HS <= sqrt(32 j) ||B - A||_op / gap_j(A).
inline BoundReport check_absolute_dk(const Matrix& A, const Matrix& B, Index j, Order order) {
  const auto LA = detail::leading(A, order);
  const auto LB = detail::leading(B, order);
  const double gap = detail::checked_gap(LA, j);
  const double observed = projector_hs_distance(LA.V.leftCols(j), LB.V.leftCols(j));
  const double bound = std::sqrt(32.0 * static_cast<double>(j)) * operator_norm(B - A) / gap;
  auto ctx = detail::fingerprint(A.rows(), j);
  ctx["gap"] = gap;
  return BoundReport::make("absolute_dk", observed, bound, ctx);
}

/// ||P_hat_{<=j} - P_{<=j}||_HS <= sqrt(32 j) delta_{<=j}(B - A).
inline BoundReport check_relative_dk(const Matrix& A, const Matrix& B, Index j, Order order) {
  const auto LA = detail::leading(A, order);
  const auto LB = detail::leading(B, order);
  const double delta = detail::delta_from(LA, B - A, j);
  const double observed = projector_hs_distance(LA.V.leftCols(j), LB.V.leftCols(j));
  auto ctx = detail::fingerprint(A.rows(), j);
  ctx["delta"] = delta;
  return BoundReport::make("relative_dk", observed, std::sqrt(32.0 * static_cast<double>(j)) * delta, ctx);
}

/// Two-term bound for a leading eigenvalue of multiplicity m, when delta <= 1/4:
///   ||P_hat - P||_HS <= sqrt(2) ||P E R_{>m}||_HS + 20 sqrt(2) m delta^2.
inline BoundReport check_refined_relative_dk(const Matrix& A, const Matrix& B, Index m, Order order) {
  const auto LA = detail::leading(A, order);
  const auto LB = detail::leading(B, order);
  const Matrix E = B - A;
  const double delta = detail::delta_from(LA, E, m);
  auto ctx = detail::fingerprint(A.rows(), m);
  ctx["delta"] = delta;
  if (delta > 0.25) return BoundReport::skip("refined_relative_dk", ctx);
  const Index n = A.rows();
  const Matrix Et = LA.V.transpose() * (LA.sign * E) * LA.V;
  Vector r = Vector::Zero(n);
  for (Index k = m; k < n; ++k) r(k) = 1.0 / (LA.lambda(m - 1) - LA.lambda(k));
  const double first = (Et.topRows(m) * r.asDiagonal()).norm();
  const double observed = projector_hs_distance(LA.V.leftCols(m), LB.V.leftCols(m));
  const double md = static_cast<double>(m);
  const double bound = std::numbers::sqrt2 * first + 20.0 * std::numbers::sqrt2 * md * delta * delta;
  return BoundReport::make("refined_relative_dk", observed, bound, ctx);
}

/// |lambda_j(B) - lambda_j(A)| <= lambda_j(A) ||A^{-1/2}(B - A)A^{-1/2}||_op for A > 0,
/// eigenvalues in ascending order.
inline std::vector<BoundReport> check_relative_weyl_pd(const Matrix& A, const Matrix& B) {
  const Matrix S = detail::inverse_sqrt_pd(A);
  Matrix M = S * (B - A) * S;
  M = 0.5 * (M + M.transpose());
  const double rel = operator_norm(M);
  const Vector a = eigvalsh(A);
  const Vector b = eigvalsh(B);
  std::vector<BoundReport> out;
  for (Index j = 0; j < a.size(); ++j) {
    out.push_back(BoundReport::make("relative_weyl_pd", std::abs(b(j) - a(j)), a(j) * rel,
                                    detail::fingerprint(A.rows(), j + 1)));
  }
  return out;
}

inline BoundReport check_relative_weyl_pd(const Matrix& A, const Matrix& B, Index j) {
  if (j < 1 || j > A.rows()) throw std::invalid_argument("index must lie in [1, n]");
  return check_relative_weyl_pd(A, B)[static_cast<std::size_t>(j - 1)];
}

struct NullspaceWeylReport {
  BoundReport first;   // (lambda_1 - lambda_{m+1}) delta
  BoundReport second;  // ||P E P||_HS + C (lambda_1 - lambda_{m+1}) m delta^2
  double constant_needed = 0.0;  // smallest C for which `second` holds
};

/// Relative Weyl bound for the leading block of multiplicity m (descending
/// convention) under delta_{<=m} <= 1/4; skipped otherwise.
inline NullspaceWeylReport check_nullspace_relative_weyl(const Matrix& Sigma, const Matrix& Sigma_hat,
                                                         Index m, double constant = 40.0) {
  const auto L = detail::leading(Sigma, Order::Descending);
  const Matrix E = Sigma_hat - Sigma;
  const double delta = detail::delta_from(L, E, m);
  auto ctx = detail::fingerprint(Sigma.rows(), m);
  ctx["delta"] = delta;
  ctx["C"] = constant;
  NullspaceWeylReport out;
  if (delta > 0.25) {
    out.first = BoundReport::skip("nullspace_relative_weyl", ctx);
    out.second = BoundReport::skip("nullspace_relative_weyl_second", ctx);
    return out;
  }
  const double top = L.lambda.head(m).mean();
  const double spread = top - L.lambda(m);
  const Vector hat = eigvalsh(Sigma_hat).reverse();
  double observed = 0.0;
  for (Index j = 0; j < m; ++j) observed = std::max(observed, std::abs(hat(j) - top));
  const Matrix Et = L.V.transpose() * E * L.V;
  const double pep = Et.topLeftCorner(m, m).norm();
  const double quad = spread * static_cast<double>(m) * delta * delta;
  out.first = BoundReport::make("nullspace_relative_weyl", observed, spread * delta, ctx);
  out.second = BoundReport::make("nullspace_relative_weyl_second", observed, pep + constant * quad, ctx);
  out.constant_needed = quad > 0.0 ? std::max(0.0, (observed - pep) / quad) : 0.0;
  out.second.context["C_needed"] = out.constant_needed;
  return out;
}

/// delta <= ||E||_op / gap and, for A > 0 in ascending order,
/// delta <= lambda_{j+1}/gap ||A^{-1/2} E A^{-1/2}||_op.
inline std::vector<BoundReport> check_delta_bounds(const Matrix& A, const Matrix& E, Index j, Order order) {
  const auto L = detail::leading(A, order);
  const double gap = detail::checked_gap(L, j);
  const double delta = detail::delta_from(L, E, j);
  auto ctx = detail::fingerprint(A.rows(), j);
  std::vector<BoundReport> out;
  out.push_back(BoundReport::make("delta_norm_bound", delta, operator_norm(E) / gap, ctx));
  if (order == Order::Ascending && eigvalsh(A)(0) > 0.0) {
    const Matrix S = detail::inverse_sqrt_pd(A);
    Matrix M = S * E * S;
    M = 0.5 * (M + M.transpose());
    const double next = -L.lambda(j);  // lambda_{j+1}(A) in ascending order
    out.push_back(BoundReport::make("delta_pd_bound", delta, next / gap * operator_norm(M), ctx));
  }
  return out;
}

/// inf_O ||U - U_hat O||_F <= ||U_hat U_hat^T - U U^T||_F.
inline BoundReport check_procrustes_projector(const Matrix& U, const Matrix& U_hat) {
  return BoundReport::make("procrustes_vs_projector", procrustes_distance(U, U_hat),
                           projector_hs_distance(U, U_hat),
                           detail::fingerprint(U.rows(), U.cols()));
}

// ---- random instances --------------------------------------------------------

inline Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix G(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) G(i, j) = normal(rng);
  return G;
}

/// Haar-distributed orthogonal matrix (QR with sign correction).
inline Matrix haar_orthogonal(Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(standard_normal(n, n, rng));
  Matrix Q = qr.householderQ();
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < n; ++k) {
    if (R(k, k) < 0.0) Q.col(k) *= -1.0;
  }
  return Q;
}

/// Random matrix with orthonormal columns.
inline Matrix random_orthonormal(Index n, Index j, std::mt19937_64& rng) {
  return haar_orthogonal(n, rng).leftCols(j);
}

/// Gaussian orthogonal ensemble, scaled to operator norm about 1.
inline Matrix goe(Index n, std::mt19937_64& rng) {
  const Matrix G = standard_normal(n, n, rng);
  return (G + G.transpose()) / std::sqrt(8.0 * static_cast<double>(std::max<Index>(n, 1)));
}

/// Symmetric perturbation with operator norm exactly `scale`.
inline Matrix random_perturbation(Index n, double scale, std::mt19937_64& rng) {
  Matrix E = goe(n, rng);
  const double norm = operator_norm(E);
  return norm > 0.0 ? Matrix(E * (scale / norm)) : E;
}

/// Q diag(values) Q^T with Haar Q.
inline Matrix with_spectrum(const Vector& values, std::mt19937_64& rng) {
  const Matrix Q = haar_orthogonal(values.size(), rng);
  Matrix A = Q * values.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

/// Spectrum with a few repeated levels in [-1, 1].
inline Vector engineered_spectrum(Index n, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> levels_dist(1, std::max<Index>(1, std::min<Index>(n, 6)));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Index levels = levels_dist(rng);
  std::vector<double> level(static_cast<std::size_t>(levels));
  for (auto& v : level) v = unit(rng);
  std::uniform_int_distribution<Index> pick(0, levels - 1);
  Vector out(n);
  for (Index k = 0; k < n; ++k) out(k) = level[static_cast<std::size_t>(pick(rng))];
  return out;
}

// ---- property suites -----------------------------------------------------------

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double max_ratio = 0.0;          // max observed / bound
  double constant_needed = 0.0;    // suite-specific fitted constant, if any
  std::vector<BoundReport> failures;  // first few violating reports

  bool pass() const { return violations == 0; }
};

struct SuiteOptions {
  std::size_t instances = 10000;
  std::uint64_t seed = 20240601;
  Index min_dim = 2;
  Index max_dim = 40;
  double min_scale = 1e-6;
  double max_scale = 1.0;
  unsigned threads = 1;
};

namespace detail {

struct InstanceOutcome {
  std::vector<BoundReport> reports;
  double constant_needed = 0.0;
};

inline std::uint64_t instance_seed(std::uint64_t base, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

template <class Instance>
SuiteResult run_suite(const std::string& name, const SuiteOptions& opts, Instance&& instance) {
  std::vector<InstanceOutcome> outcomes(opts.instances);
  parallel_for(opts.instances, opts.threads, [&](std::size_t i) {
    std::mt19937_64 rng(instance_seed(opts.seed, i));
    outcomes[i] = instance(rng, i);
  });
  SuiteResult result;
  result.name = name;
  result.instances = opts.instances;
  for (const auto& outcome : outcomes) {
    result.constant_needed = std::max(result.constant_needed, outcome.constant_needed);
    for (const auto& r : outcome.reports) {
      if (r.skipped) {
        ++result.skipped;
        continue;
      }
      ++result.checks;
      if (r.bound_value > 1e-12) result.max_ratio = std::max(result.max_ratio, r.observed / r.bound_value);
      if (!r.pass) {
        ++result.violations;
        if (result.failures.size() < 5) result.failures.push_back(r);
      }
    }
  }
  return result;
}

inline Index random_dim(const SuiteOptions& opts, std::mt19937_64& rng, Index lo = 0) {
  std::uniform_int_distribution<Index> dist(std::max(opts.min_dim, lo), std::max(opts.max_dim, lo));
  return dist(rng);
}

inline double random_scale(const SuiteOptions& opts, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::log10(opts.min_scale), std::log10(opts.max_scale));
  return std::pow(10.0, u(rng));
}

/// Symmetric test matrix: GOE for even instances, engineered degenerate spectrum for odd.
inline Matrix random_symmetric(Index n, std::size_t index, std::mt19937_64& rng) {
  if (index % 2 == 0) return goe(n, rng);
  return with_spectrum(engineered_spectrum(n, rng), rng);
}

/// A block size j whose gap is usable, or 0 if the spectrum has none.
inline Index usable_block(const Matrix& A, Order order, std::mt19937_64& rng) {
  const auto L = leading(A, order);
  std::vector<Index> ok;
  for (Index j = 1; j < A.rows(); ++j) {
    if (L.lambda(j - 1) - L.lambda(j) > 1e-6 * std::max(L.norm, 1e-300)) ok.push_back(j);
  }
  if (ok.empty()) return 0;
  std::uniform_int_distribution<std::size_t> pick(0, ok.size() - 1);
  return ok[pick(rng)];
}

inline Order random_order(std::mt19937_64& rng) {
  return std::bernoulli_distribution(0.5)(rng) ? Order::Ascending : Order::Descending;
}

/// Leading block of multiplicity m at level 1, the rest spread in [-1, q].
inline Matrix degenerate_top(Index n, Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> q_dist(0.0, 0.95);
  const double q = q_dist(rng);
  std::uniform_real_distribution<double> rest(-1.0, q);
  Vector values(n);
  for (Index k = 0; k < n; ++k) values(k) = k < m ? 1.0 : rest(rng);
  values(std::min<Index>(m, n - 1)) = q;
  return with_spectrum(values, rng);
}

}  // namespace detail

inline SuiteResult suite_absolute_weyl(const SuiteOptions& opts) {
  return detail::run_suite("absolute_weyl", opts, [&](std::mt19937_64& rng, std::size_t i) {
    const Index n = detail::random_dim(opts, rng);
    const Matrix A = detail::random_symmetric(n, i, rng);
    const Matrix B = A + random_perturbation(n, detail::random_scale(opts, rng), rng);
    return detail::InstanceOutcome{check_absolute_weyl(A, B)};
  });
}

inline SuiteResult suite_absolute_dk(const SuiteOptions& opts) {
  return detail::run_suite("absolute_dk", opts, [&](std::mt19937_64& rng, std::size_t i) {
    const Index n = detail::random_dim(opts, rng);
    const Matrix A = detail::random_symmetric(n, i, rng);
    const Matrix B = A + random_perturbation(n, detail::random_scale(opts, rng), rng);
    const Order order = detail::random_order(rng);
    const Index j = detail::usable_block(A, order, rng);
    if (j == 0) return detail::InstanceOutcome{{BoundReport::skip("absolute_dk")}};
    return detail::InstanceOutcome{{check_absolute_dk(A, B, j, order)}};
  });
}

inline SuiteResult suite_relative_dk(const SuiteOptions& opts) {
  return detail::run_suite("relative_dk", opts, [&](std::mt19937_64& rng, std::size_t i) {
    const Index n = detail::random_dim(opts, rng);
    const Matrix A = detail::random_symmetric(n, i, rng);
    const Matrix B = A + random_perturbation(n, detail::random_scale(opts, rng), rng);
    const Order order = detail::random_order(rng);
    const Index j = detail::usable_block(A, order, rng);
    if (j == 0) return detail::InstanceOutcome{{BoundReport::skip("relative_dk")}};
    return detail::InstanceOutcome{{check_relative_dk(A, B, j, order)}};
  });
}

/// Refined two-term bound on instances whose leading eigenvalue is repeated.
inline SuiteResult suite_refined_relative_dk(const SuiteOptions& opts) {
  return detail::run_suite("refined_relative_dk", opts, [&](std::mt19937_64& rng, std::size_t) {
    const Index n = detail::random_dim(opts, rng, 3);
    std::uniform_int_distribution<Index> m_dist(1, std::min<Index>(n - 1, 5));
    const Index m = m_dist(rng);
    const Matrix A = detail::degenerate_top(n, m, rng);
    const Matrix B = A + random_perturbation(n, detail::random_scale(opts, rng), rng);
    return detail::InstanceOutcome{{check_refined_relative_dk(A, B, m, Order::Descending)}};
  });
}

inline SuiteResult suite_delta_bounds(const SuiteOptions& opts) {
  return detail::run_suite("delta_bounds", opts, [&](std::mt19937_64& rng, std::size_t i) {
    const Index n = detail::random_dim(opts, rng);
    Matrix A;
    Order order = detail::random_order(rng);
    if (i % 2 == 0) {
      // Positive definite instance so that the second inequality applies.
      std::uniform_real_distribution<double> lv(-3.0, 2.0);
      Vector values(n);
      for (Index k = 0; k < n; ++k) values(k) = std::pow(10.0, lv(rng));
      A = with_spectrum(values, rng);
      order = Order::Ascending;
    } else {
      A = detail::random_symmetric(n, i, rng);
    }
    const Matrix E = random_perturbation(n, detail::random_scale(opts, rng), rng);
    const Index j = detail::usable_block(A, order, rng);
    if (j == 0) return detail::InstanceOutcome{{BoundReport::skip("delta_bounds")}};
    return detail::InstanceOutcome{check_delta_bounds(A, E, j, order)};
  });
}

inline SuiteResult suite_relative_weyl_pd(const SuiteOptions& opts) {
  return detail::run_suite("relative_weyl_pd", opts, [&](std::mt19937_64& rng, std::size_t) {
    const Index n = detail::random_dim(opts, rng);
    std::uniform_real_distribution<double> lv(-3.0, 2.0);
    Vector values(n);
    for (Index k = 0; k < n; ++k) values(k) = std::pow(10.0, lv(rng));
    const Matrix A = with_spectrum(values, rng);
    // ||E|| <= lambda_min(A) keeps ||A^{-1/2} E A^{-1/2}|| <= 1, where the bound is valid.
    const double scale = detail::random_scale(opts, rng) * values.minCoeff();
    const Matrix B = A + random_perturbation(n, scale, rng);
    return detail::InstanceOutcome{check_relative_weyl_pd(A, B)};
  });
}

/// Both nullspace relative Weyl forms; constant_needed tracks the smallest C
/// that makes the second form hold on the instance.
inline SuiteResult suite_nullspace_relative_weyl(const SuiteOptions& opts, double constant = 40.0) {
  return detail::run_suite("nullspace_relative_weyl", opts, [&](std::mt19937_64& rng, std::size_t) {
    const Index n = detail::random_dim(opts, rng, 3);
    std::uniform_int_distribution<Index> m_dist(1, std::min<Index>(n - 1, 5));
    const Index m = m_dist(rng);
    const Matrix A = detail::degenerate_top(n, m, rng);
    const Matrix B = A + random_perturbation(n, detail::random_scale(opts, rng), rng);
    const auto r = check_nullspace_relative_weyl(A, B, m, constant);
    return detail::InstanceOutcome{{r.first, r.second}, r.constant_needed};
  });
}

inline SuiteResult suite_procrustes(const SuiteOptions& opts) {
  return detail::run_suite("procrustes_vs_projector", opts, [&](std::mt19937_64& rng, std::size_t i) {
    std::uniform_int_distribution<Index> j_dist(1, 8);
    const Index j = j_dist(rng);
    std::uniform_int_distribution<Index> n_dist(j, 64);
    const Index n = n_dist(rng);
    const Matrix U = random_orthonormal(n, j, rng);
    Matrix U_hat;
    if (i % 2 == 0) {
      U_hat = random_orthonormal(n, j, rng);
    } else {
      // Nearby subspace: orthonormalize a small perturbation of U.
      const Matrix P = U + detail::random_scale(opts, rng) * standard_normal(n, j, rng);
      Eigen::HouseholderQR<Matrix> qr(P);
      U_hat = Matrix(qr.householderQ()).leftCols(j);
    }
    return detail::InstanceOutcome{{check_procrustes_projector(U, U_hat)}};
  });
}

}  // namespace sml
