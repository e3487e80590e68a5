#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "kernels.hpp"
#include "manifolds.hpp"
#include "perturbation.hpp"
#include "report.hpp"
#include "spectral.hpp"

namespace sml {

/// F_ij = exp(-mu_j t / 2) phi_j(X_i) for the first N eigenpairs.
struct FeatureMatrix {
  Matrix F;  // n x N
  double t = 0.0;
  std::size_t N = 0;
  double tail_mass = 0.0;
  std::vector<Mode> modes;
  Vector mu;
  int components = 1;

  Index samples() const { return F.rows(); }
};

/// Population covariance in the u_{t,j} basis: diag(exp(-mu_j t)), descending.
struct PopulationSpectrum {
  Vector lambda;
  Vector mu;
  int multiplicity = 1;  // of the top eigenvalue 1

  /// True when j (1-based) closes a block, i.e. mu_{j+1} > mu_j.
  bool block_boundary(Index j) const { return j >= 1 && j < mu.size() && mu(j) > mu(j - 1); }
};

inline FeatureMatrix feature_matrix(const ManifoldModel& model, const PointCloud& cloud, double t,
                                    const HeatKernelOptions& opts = {}) {
  const Truncation trunc = model.truncation(t, opts);
  FeatureMatrix out;
  out.t = t;
  out.N = trunc.terms;
  out.tail_mass = trunc.tail_mass;
  out.modes = model.modes(trunc.terms);
  out.components = model.components();
  const Index n = cloud.size();
  const auto N = static_cast<Index>(trunc.terms);
  out.mu.resize(N);
  out.F.resize(n, N);
  for (Index j = 0; j < N; ++j) {
    const Mode& mode = out.modes[static_cast<std::size_t>(j)];
    out.mu(j) = mode.mu;
    const double damp = std::exp(-0.5 * mode.mu * t);
    for (Index i = 0; i < n; ++i) out.F(i, j) = damp * model.evaluate(mode, cloud.point(i));
  }
  return out;
}

inline PopulationSpectrum population_spectrum(const FeatureMatrix& F) {
  PopulationSpectrum out;
  out.mu = F.mu;
  out.lambda = (-F.t * F.mu).array().exp();
  out.multiplicity = F.components;
  return out;
}

/// Sigma_hat = F^T F / n.
inline Matrix empirical_covariance(const FeatureMatrix& F) {
  Matrix S = F.F.transpose() * F.F / static_cast<double>(F.samples());
  return 0.5 * (S + S.transpose());
}

/// K = F F^T / n (truncated heat Gram matrix).
inline Matrix feature_gram(const FeatureMatrix& F) {
  Matrix K = F.F * F.F.transpose() / static_cast<double>(F.samples());
  return 0.5 * (K + K.transpose());
}

struct KernelTrickResult {
  BoundReport eigenvalues;          // max |lambda(Sigma_hat) - lambda(K)| / lambda_max
  BoundReport principal_components; // max ||S_n u_hat - lambda^{1/2} v_hat||
  Index compared = 0;
  Index components_checked = 0;
};

/// The covariance F^T F / n and the Gram matrix F F^T / n share their nonzero
/// spectrum, and S_n u_hat_j = lambda_hat_j^{1/2} v_hat_j. Eigenvector
/// ambiguity inside clusters of close eigenvalues is removed by Procrustes.
inline KernelTrickResult kernel_trick_check(const FeatureMatrix& F, double eig_tol = 1e-9,
                                            double pc_tol = 1e-8, double pc_floor = 1e-6) {
  const Index n = F.samples();
  const auto N = static_cast<Index>(F.N);
  const SpectralDecomposition cov = eigh(empirical_covariance(F));
  const SpectralDecomposition gram = eigh(feature_gram(F));
  const Index r = std::min(n, N);
  const Vector lc = cov.eigenvalues.reverse();
  const Vector lg = gram.eigenvalues.reverse();
  const Matrix Uc = cov.eigenvectors.rowwise().reverse();
  const Matrix Vg = gram.eigenvectors.rowwise().reverse();
  const double top = std::max({lc.size() ? lc(0) : 0.0, lg.size() ? lg(0) : 0.0, 1e-300});

  double eig_err = 0.0;
  for (Index j = 0; j < r; ++j) eig_err = std::max(eig_err, std::abs(lc(j) - lg(j)) / top);

  // Principal-component identity over clusters of nearly equal eigenvalues.
  Index usable = 0;
  while (usable < r && lc(usable) >= pc_floor) ++usable;
  double pc_err = 0.0;
  const Matrix SnU = F.F * Uc.leftCols(usable) / std::sqrt(static_cast<double>(n));
  for (Index start = 0; start < usable;) {
    Index end = start + 1;
    while (end < usable && lc(end - 1) - lc(end) < 1e-4 * top) ++end;
    const Index w = end - start;
    const Matrix target = Vg.middleCols(start, w) * lc.segment(start, w).cwiseSqrt().asDiagonal();
    const Matrix lhs = SnU.middleCols(start, w);
    const ProcrustesResult pr = procrustes(lhs, target);
    for (Index k = 0; k < w; ++k) {
      pc_err = std::max(pc_err, (lhs.col(k) - (target * pr.rotation).col(k)).norm());
    }
    start = end;
  }

  KernelTrickResult out;
  out.compared = r;
  out.components_checked = usable;
  const std::map<std::string, double> ctx{{"n", static_cast<double>(n)},
                                          {"N", static_cast<double>(N)},
                                          {"t", F.t}};
  out.eigenvalues = BoundReport::make("kernel_trick_eigenvalues", eig_err, eig_tol, ctx);
  out.principal_components = BoundReport::make("kernel_trick_components", pc_err, pc_tol, ctx);
  return out;
}

/// Per-index comparison of Sigma_hat with its population counterpart.
struct SpectralRecord {
  Index j = 0;
  double mu = 0.0;
  double lambda_hat = 0.0;
  double scaled = 0.0;   // (1 - lambda_hat) / t
  double eig_gap = 0.0;  // scaled - mu
  double proj_dist = std::numeric_limits<double>::quiet_NaN();  // NaN inside a block
};

inline double projector_distance(const FeatureMatrix& F, const SpectralDecomposition& desc_cov, Index j) {
  const PopulationSpectrum pop = population_spectrum(F);
  if (!pop.block_boundary(j)) {
    throw GapTooSmall("index " + std::to_string(j) + " lies inside a multiplicity block");
  }
  // Population top-j space is spanned by the first j coordinate vectors.
  const Matrix top = desc_cov.eigenvectors.leftCols(j);
  const double overlap = top.topRows(j).squaredNorm();
  return std::sqrt(std::max(0.0, 2.0 * static_cast<double>(j) - 2.0 * overlap));
}

namespace detail {

inline SpectralDecomposition descending(const SpectralDecomposition& dec) {
  return {dec.eigenvalues.reverse(), dec.eigenvectors.rowwise().reverse(), dec.residual};
}

}  // namespace detail

/// Projector HS distance between the empirical and population top-j spaces.
inline double projector_distance(const FeatureMatrix& F, Index j) {
  return projector_distance(F, detail::descending(eigh(empirical_covariance(F))), j);
}

inline std::vector<SpectralRecord> empirical_vs_population(const FeatureMatrix& F, Index j_max) {
  const Index r = std::min<Index>(F.samples(), static_cast<Index>(F.N));
  if (j_max < 1 || j_max > r) throw std::invalid_argument("j_max must lie in [1, min(n, N)]");
  const SpectralDecomposition cov = detail::descending(eigh(empirical_covariance(F)));
  const PopulationSpectrum pop = population_spectrum(F);
  std::vector<SpectralRecord> out;
  for (Index j = 1; j <= j_max; ++j) {
    SpectralRecord rec;
    rec.j = j;
    rec.mu = pop.mu(j - 1);
    rec.lambda_hat = cov.eigenvalues(j - 1);
    rec.scaled = (1.0 - rec.lambda_hat) / F.t;
    rec.eig_gap = rec.scaled - rec.mu;
    if (pop.block_boundary(j)) rec.proj_dist = projector_distance(F, cov, j);
    out.push_back(rec);
  }
  return out;
}

/// delta_{<=m}(Sigma_hat - Sigma) in the truncated u_{t,j} coordinates.
inline double delta_nullspace(const FeatureMatrix& F, Index m) {
  const PopulationSpectrum pop = population_spectrum(F);
  const Matrix Sigma = pop.lambda.asDiagonal();
  return delta_leq_j(Sigma, empirical_covariance(F) - Sigma, m, Order::Descending);
}

}  // namespace sml
