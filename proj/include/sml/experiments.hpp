#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "graph_laplacian.hpp"
#include "heat_pca.hpp"
#include "kernels.hpp"
#include "manifolds.hpp"
#include "parallel.hpp"
#include "perturbation.hpp"
#include "spectral.hpp"

namespace sml {

// ---- configuration -------------------------------------------------------------

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::Circle;
  int d = 1;
  double separation = ManifoldModel::kDefaultSeparation;

  ManifoldModel build() const {
    switch (kind) {
      case ManifoldKind::Circle: return ManifoldModel::circle();
      case ManifoldKind::Torus: return ManifoldModel::torus(d);
      case ManifoldKind::TwoCircles: return ManifoldModel::two_circles(separation);
    }
    return ManifoldModel::circle();
  }
};

struct ExperimentConfig {
  ManifoldSpec manifold;
  std::vector<Index> n_grid{250, 500, 1000, 2000};
  std::vector<double> t_grid{5e-3};
  std::size_t replicates = 20;
  std::uint64_t seed = 1;
  std::vector<Index> j{2};
  std::vector<KernelKind> kernels{KernelKind::Gaussian};
  double epsilon = 1e-10;
  std::size_t max_terms = 1'000'000;
  int K = 4;
  unsigned threads = default_parallelism();
  std::string output = "out";
  nlohmann::json extra = nlohmann::json::object();  // subcommand-specific knobs

  HeatKernelOptions heat_options() const { return {epsilon, max_terms}; }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return extra.contains(key) ? extra.at(key).get<T>() : fallback;
  }

  void validate() const {
    if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      if (n_grid[k] < 1) throw ConfigError("n_grid entries must be >= 1");
      if (k && n_grid[k] < n_grid[k - 1]) throw ConfigError("n_grid must be sorted ascending");
    }
    for (double t : t_grid) {
      if (!(t > 0.0 && t <= 1.0)) throw ConfigError("t_grid entries must lie in (0, 1]");
    }
    if (replicates < 1) throw ConfigError("replicates must be >= 1");
    for (Index v : j) {
      if (v < 1) throw ConfigError("j entries must be >= 1");
    }
    if (kernels.empty()) throw ConfigError("kernels must not be empty");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (K < 1) throw ConfigError("K must be >= 1");
    if (manifold.kind == ManifoldKind::Torus && manifold.d < 1) throw ConfigError("torus dimension must be >= 1");
    if (manifold.kind == ManifoldKind::TwoCircles && !(manifold.separation > 0.0)) {
      throw ConfigError("separation must be positive");
    }
  }
};

inline KernelKind parse_kernel(const std::string& s) {
  if (s == "gaussian") return KernelKind::Gaussian;
  if (s == "geodesic") return KernelKind::Geodesic;
  if (s == "heat") return KernelKind::Heat;
  throw ConfigError("unknown kernel '" + s + "'");
}

inline ManifoldSpec parse_manifold(const nlohmann::json& j) {
  ManifoldSpec spec;
  const std::string kind = j.value("kind", std::string("circle"));
  if (kind == "circle") {
    spec.kind = ManifoldKind::Circle;
  } else if (kind == "torus") {
    spec.kind = ManifoldKind::Torus;
    spec.d = j.value("d", 2);
  } else if (kind == "two_circles") {
    spec.kind = ManifoldKind::TwoCircles;
    spec.separation = j.value("separation", ManifoldModel::kDefaultSeparation);
  } else {
    throw ConfigError("unknown manifold kind '" + kind + "'");
  }
  return spec;
}

inline nlohmann::json to_json(const ManifoldSpec& spec) {
  nlohmann::json j{{"kind", to_string(spec.kind)}};
  if (spec.kind == ManifoldKind::Torus) j["d"] = spec.d;
  if (spec.kind == ManifoldKind::TwoCircles) j["separation"] = spec.separation;
  return j;
}

inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{"manifold", "n_grid", "t_grid", "replicates", "seed", "j",
                                             "kernels", "epsilon", "max_terms", "K", "parallel",
                                             "output", "extra"};
  return keys;
}

/// Parses and validates a configuration object; unknown keys are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    const auto& keys = known_config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("manifold")) cfg.manifold = parse_manifold(j.at("manifold"));
    if (j.contains("n_grid")) cfg.n_grid = j.at("n_grid").get<std::vector<Index>>();
    if (j.contains("t_grid")) cfg.t_grid = j.at("t_grid").get<std::vector<double>>();
    if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("j")) cfg.j = j.at("j").get<std::vector<Index>>();
    if (j.contains("kernels")) {
      cfg.kernels.clear();
      for (const auto& k : j.at("kernels")) cfg.kernels.push_back(parse_kernel(k.get<std::string>()));
    }
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("max_terms")) cfg.max_terms = j.at("max_terms").get<std::size_t>();
    if (j.contains("K")) cfg.K = j.at("K").get<int>();
    if (j.contains("parallel")) cfg.threads = std::max(1u, j.at("parallel").get<unsigned>());
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("extra")) cfg.extra = j.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json kernels = nlohmann::json::array();
  for (auto k : cfg.kernels) kernels.push_back(to_string(k));
  return {{"manifold", to_json(cfg.manifold)}, {"n_grid", cfg.n_grid},     {"t_grid", cfg.t_grid},
          {"replicates", cfg.replicates},      {"seed", cfg.seed},         {"j", cfg.j},
          {"kernels", kernels},                {"epsilon", cfg.epsilon},   {"max_terms", cfg.max_terms},
          {"K", cfg.K},                        {"output", cfg.output},     {"extra", cfg.extra}};
}

// ---- statistics ------------------------------------------------------------------

/// Ordinary least squares of log(error) on log(x).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<double> residuals;
};

inline RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("rate fit needs at least 3 points");
  std::vector<double> x, y;
  for (const auto& [a, b] : points) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("rate fit needs positive values");
    x.push_back(std::log(a));
    y.push_back(std::log(b));
  }
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx <= 0.0) throw DegenerateFit("all abscissae are equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (fit.intercept + fit.slope * x[k]);
    fit.residuals.push_back(r);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

inline nlohmann::json to_json(const RateFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"residuals", f.residuals}};
}

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// Seed for one replicate, decorrelated across grid cells.
inline std::uint64_t replicate_seed(std::uint64_t base, Index n, std::size_t t_index, std::size_t r) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(t_index),
                    static_cast<std::uint32_t>(r)};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

/// One (n, t, replicate) cell of a sweep.
struct Cell {
  Index n = 0;
  std::size_t t_index = 0;
  double t = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
};

inline std::vector<Cell> sweep_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
    for (Index n : cfg.n_grid) {
      for (std::size_t r = 0; r < cfg.replicates; ++r) {
        cells.push_back({n, ti, cfg.t_grid[ti], r, replicate_seed(cfg.seed, n, ti, r)});
      }
    }
  }
  return cells;
}

/// Runs `body(cell)` over the sweep grid, returning results in grid order.
template <class Result, class Body>
std::vector<Result> run_cells(const ExperimentConfig& cfg, const std::vector<Cell>& cells, Body&& body) {
  std::vector<Result> out(cells.size());
  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) { out[i] = body(cells[i]); });
  return out;
}

inline KernelMatrix build_kernel(const ManifoldModel& model, const PointCloud& cloud, KernelKind kind,
                                 double t, const HeatKernelOptions& opts) {
  const KernelSpec spec{kind, t, model.dim()};
  switch (kind) {
    case KernelKind::Gaussian: return gaussian_matrix(cloud, spec);
    case KernelKind::Geodesic: return geodesic_matrix(model, cloud, spec);
    case KernelKind::Heat: return heat_matrix(model, cloud, spec, opts);
  }
  throw std::logic_error("unknown kernel kind");
}

/// Median of `value` per (t, n) group, fitted against n for each t.
struct GridFit {
  double t = 0.0;
  Index j = 0;
  std::vector<std::pair<double, double>> medians;  // (n or t, median)
  std::optional<RateFit> fit;
  std::string note;
};

inline nlohmann::json to_json(const GridFit& g) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& [x, y] : g.medians) pts.push_back({x, y});
  nlohmann::json j{{"t", g.t}, {"j", g.j}, {"medians", pts}};
  if (g.fit) j["fit"] = to_json(*g.fit);
  if (!g.note.empty()) j["note"] = g.note;
  return j;
}

inline GridFit fit_medians(double t, Index j, std::vector<std::pair<double, double>> medians) {
  GridFit g{t, j, std::move(medians), std::nullopt, {}};
  if (g.medians.size() < 3) {
    g.note = "fewer than 3 grid points";
    return g;
  }
  for (const auto& [x, y] : g.medians) {
    if (!(y > 0.0)) {
      g.note = "nonpositive median error";
      return g;
    }
  }
  try {
    g.fit = fit_rate(g.medians);
  } catch (const DegenerateFit& e) {
    g.note = e.what();
  }
  return g;
}

// ---- Corollary 1: eigenvalues -----------------------------------------------------

struct EigenRecord {
  Index n = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
  Index j = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double abs_err = 0.0;
};

struct Corollary1Result {
  KernelKind kernel = KernelKind::Gaussian;
  std::vector<EigenRecord> records;
  std::vector<GridFit> n_fits;  // per (t, j): median abs_err against n
  std::vector<GridFit> t_fits;  // per j at the largest n: median abs_err against t
};

inline std::vector<double> errors_at(const std::vector<EigenRecord>& recs, Index n, double t, Index j,
                                     bool relative = false, std::size_t limit = SIZE_MAX) {
  std::vector<double> out;
  for (const auto& r : recs) {
    if (r.n == n && r.t == t && r.j == j && out.size() < limit) {
      out.push_back(relative ? r.abs_err / r.mu : r.abs_err);
    }
  }
  return out;
}

inline Corollary1Result corollary1_sweep(const ExperimentConfig& cfg, KernelKind kernel) {
  cfg.validate();
  const ManifoldModel model = cfg.manifold.build();
  const Index j_max = *std::max_element(cfg.j.begin(), cfg.j.end());
  const auto mu = model.eigenvalues(static_cast<std::size_t>(j_max));
  const auto cells = sweep_cells(cfg);
  const auto per_cell = run_cells<std::vector<EigenRecord>>(cfg, cells, [&](const Cell& c) {
    const PointCloud cloud = model.sample_uniform(c.n, c.seed);
    const GraphLaplacian L = build_laplacian(build_kernel(model, cloud, kernel, c.t, cfg.heat_options()));
    const SpectralDecomposition dec = eigh_lowest(L.matrix, std::min(j_max, c.n));
    std::vector<EigenRecord> out;
    for (Index j : cfg.j) {
      if (j > c.n) continue;
      const double lam = dec.eigenvalues(j - 1);
      const double m = mu[static_cast<std::size_t>(j - 1)];
      out.push_back({c.n, c.t, c.seed, j, lam, m, std::abs(lam - m)});
    }
    return out;
  });
  Corollary1Result res;
  res.kernel = kernel;
  for (const auto& v : per_cell) res.records.insert(res.records.end(), v.begin(), v.end());
  for (double t : cfg.t_grid) {
    for (Index j : cfg.j) {
      std::vector<std::pair<double, double>> pts;
      for (Index n : cfg.n_grid) {
        if (j <= n) pts.emplace_back(static_cast<double>(n), median(errors_at(res.records, n, t, j)));
      }
      res.n_fits.push_back(fit_medians(t, j, pts));
    }
  }
  for (Index j : cfg.j) {
    std::vector<std::pair<double, double>> pts;
    const Index n = cfg.n_grid.back();
    for (double t : cfg.t_grid) pts.emplace_back(t, median(errors_at(res.records, n, t, j)));
    res.t_fits.push_back(fit_medians(0.0, j, pts));
  }
  return res;
}

// ---- Corollary 2: eigenvectors ----------------------------------------------------

struct DistanceRecord {
  Index n = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
  Index j = 0;
  double distance = 0.0;
};

struct Corollary2Result {
  KernelKind kernel = KernelKind::Gaussian;
  std::vector<DistanceRecord> records;
  std::vector<GridFit> n_fits;
};

/// (S_n phi_1, ..., S_n phi_j) with S_n f = n^{-1/2} (f(X_1), ..., f(X_n)).
inline Matrix sampled_eigenfunctions(const ManifoldModel& model, const PointCloud& cloud, Index j) {
  const auto modes = model.modes(static_cast<std::size_t>(j));
  const Index n = cloud.size();
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix out(n, j);
  for (Index k = 0; k < j; ++k) {
    for (Index i = 0; i < n; ++i) out(i, k) = s * model.evaluate(modes[static_cast<std::size_t>(k)], cloud.point(i));
  }
  return out;
}

inline Corollary2Result corollary2_sweep(const ExperimentConfig& cfg, KernelKind kernel) {
  cfg.validate();
  const ManifoldModel model = cfg.manifold.build();
  for (Index j : cfg.j) {
    if (!(model.eigenvalue(static_cast<std::size_t>(j) + 1) > model.eigenvalue(static_cast<std::size_t>(j)))) {
      throw GapTooSmall("j=" + std::to_string(j) + " is inside a multiplicity block");
    }
  }
  const Index j_max = *std::max_element(cfg.j.begin(), cfg.j.end());
  const auto cells = sweep_cells(cfg);
  const auto per_cell = run_cells<std::vector<DistanceRecord>>(cfg, cells, [&](const Cell& c) {
    const PointCloud cloud = model.sample_uniform(c.n, c.seed);
    const GraphLaplacian L = build_laplacian(build_kernel(model, cloud, kernel, c.t, cfg.heat_options()));
    const SpectralDecomposition dec = eigh_lowest(L.matrix, std::min(j_max, c.n));
    const Matrix phi = sampled_eigenfunctions(model, cloud, std::min(j_max, c.n));
    std::vector<DistanceRecord> out;
    for (Index j : cfg.j) {
      if (j > c.n) continue;
      out.push_back({c.n, c.t, c.seed, j, procrustes_distance(phi.leftCols(j), dec.eigenvectors.leftCols(j))});
    }
    return out;
  });
  Corollary2Result res;
  res.kernel = kernel;
  for (const auto& v : per_cell) res.records.insert(res.records.end(), v.begin(), v.end());
  for (double t : cfg.t_grid) {
    for (Index j : cfg.j) {
      std::vector<std::pair<double, double>> pts;
      for (Index n : cfg.n_grid) {
        std::vector<double> d;
        for (const auto& r : res.records)
          if (r.n == n && r.t == t && r.j == j) d.push_back(r.distance);
        if (!d.empty()) pts.emplace_back(static_cast<double>(n), median(d));
      }
      res.n_fits.push_back(fit_medians(t, j, pts));
    }
  }
  return res;
}

// ---- degree concentration -----------------------------------------------------------

struct DegreeRecord {
  Index n = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
  double max_deviation = 0.0;  // max_i |(1/n) sum_j k_t(X_i, X_j) - 1|
};

struct DegreeResult {
  std::vector<DegreeRecord> records;
  std::vector<GridFit> n_fits;
};

inline DegreeResult degree_concentration(const ExperimentConfig& cfg) {
  cfg.validate();
  const ManifoldModel model = cfg.manifold.build();
  const auto cells = sweep_cells(cfg);
  DegreeResult res;
  res.records = run_cells<DegreeRecord>(cfg, cells, [&](const Cell& c) {
    const PointCloud cloud = model.sample_uniform(c.n, c.seed);
    const KernelMatrix K = heat_matrix(model, cloud, {KernelKind::Heat, c.t, model.dim()}, cfg.heat_options());
    const Vector deg = degrees(K.entries);
    return DegreeRecord{c.n, c.t, c.seed, (deg.array() - 1.0).abs().maxCoeff()};
  });
  for (double t : cfg.t_grid) {
    std::vector<std::pair<double, double>> pts;
    for (Index n : cfg.n_grid) {
      std::vector<double> d;
      for (const auto& r : res.records)
        if (r.n == n && r.t == t) d.push_back(r.max_deviation);
      pts.emplace_back(static_cast<double>(n), median(d));
    }
    res.n_fits.push_back(fit_medians(t, 0, pts));
  }
  return res;
}

// ---- reduction chain ------------------------------------------------------------------

struct ReductionRecord {
  Index n = 0;
  double t = 0.0;
  std::uint64_t seed = 0;
  Index j = 0;
  double step1 = 0.0;        // |lambda_j((I - K)/t) - (1 - lambda_hat_j)/t|
  double step2 = 0.0;        // |lambda_j((I - K)/t) - lambda_j(L_k)|
  double step2_bound = 0.0;  // ||I - D_k||_op / t
  double step3 = 0.0;        // |lambda_j(L_k) - lambda_j(L_w)|
  double step3_bound = 0.0;  // lambda_j(L_k + t^K I) * rho
  double rho = 0.0;          // ||(L_k + t^K)^{-1/2} (L_w - L_k) (L_k + t^K)^{-1/2}||
  double c3 = 0.0;           // rho / (t log^2(e/t))
};

inline std::vector<ReductionRecord> reduction_chain(const ExperimentConfig& cfg) {
  cfg.validate();
  const ManifoldModel model = cfg.manifold.build();
  const Index j_max = *std::max_element(cfg.j.begin(), cfg.j.end());
  const auto cells = sweep_cells(cfg);
  const auto per_cell = run_cells<std::vector<ReductionRecord>>(cfg, cells, [&](const Cell& c) {
    const PointCloud cloud = model.sample_uniform(c.n, c.seed);
    const FeatureMatrix F = feature_matrix(model, cloud, c.t, cfg.heat_options());
    const Vector lam_hat = eigvalsh(empirical_covariance(F)).reverse();
    const KernelMatrix K = heat_matrix(model, cloud, {KernelKind::Heat, c.t, model.dim()}, cfg.heat_options());
    const Index n = c.n;
    Matrix A = -K.entries / c.t;
    A.diagonal().array() += 1.0 / c.t;
    const Vector a = eigvalsh(A);
    const GraphLaplacian Lk = build_laplacian(K);
    const GraphLaplacian Lw = build_laplacian(gaussian_matrix(cloud, {KernelKind::Gaussian, c.t, model.dim()}));
    const SpectralDecomposition dk = eigh(Lk.matrix);
    const Vector lw = eigvalsh(Lw.matrix);
    const double shift = std::pow(c.t, cfg.K);
    const Vector shifted = dk.eigenvalues.array() + shift;
    const Matrix S = dk.eigenvectors * shifted.cwiseSqrt().cwiseInverse().asDiagonal() * dk.eigenvectors.transpose();
    Matrix M = S * (Lw.matrix - Lk.matrix) * S;
    M = 0.5 * (M + M.transpose());
    const double rho = operator_norm(M);
    const double c3 = rho / (c.t * std::pow(std::log(std::numbers::e / c.t), 2));
    const double step2_bound = (Lk.degree.array() - 1.0).abs().maxCoeff() / c.t;
    const Index limit = std::min<Index>({j_max, n, static_cast<Index>(F.N)});
    std::vector<ReductionRecord> out;
    for (Index j : cfg.j) {
      if (j > limit) continue;
      ReductionRecord r;
      r.n = n;
      r.t = c.t;
      r.seed = c.seed;
      r.j = j;
      r.step1 = std::abs(a(j - 1) - (1.0 - lam_hat(j - 1)) / c.t);
      r.step2 = std::abs(a(j - 1) - dk.eigenvalues(j - 1));
      r.step2_bound = step2_bound;
      r.step3 = std::abs(dk.eigenvalues(j - 1) - lw(j - 1));
      r.step3_bound = shifted(j - 1) * rho;
      r.rho = rho;
      r.c3 = c3;
      out.push_back(r);
    }
    return out;
  });
  std::vector<ReductionRecord> out;
  for (const auto& v : per_cell) out.insert(out.end(), v.begin(), v.end());
  return out;
}

// ---- kernel approximation scan ---------------------------------------------------------

struct ApproxRecord {
  double t = 0.0;
  std::uint64_t seed = 0;
  Index n = 0;
  std::string kernel;
  double c_hat = 0.0;
  double additive = 0.0;
  double max_residual = 0.0;
  double max_cross_residual = 0.0;
  std::size_t pairs_above_floor = 0;
};

/// kernel_residual_scan (Gaussian) and the geodesic analogue over the t grid,
/// one cloud per t of size n_grid.back().
inline std::vector<ApproxRecord> approximation_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const ManifoldModel model = cfg.manifold.build();
  const Index n = cfg.n_grid.back();
  std::vector<ApproxRecord> out(2 * cfg.t_grid.size());
  parallel_for(cfg.t_grid.size(), cfg.threads, [&](std::size_t ti) {
    const double t = cfg.t_grid[ti];
    const std::uint64_t seed = replicate_seed(cfg.seed, n, ti, 0);
    const PointCloud cloud = model.sample_uniform(n, seed);
    const auto g = kernel_residual_scan(model, cloud, t, cfg.K, cfg.heat_options());
    const auto h = geodesic_residual_scan(model, cloud, t, cfg.K, cfg.heat_options());
    out[2 * ti] = {t, seed, n, "gaussian", g.c_hat, g.additive, g.max_residual, g.max_cross_residual, g.pairs_above_floor};
    out[2 * ti + 1] = {t, seed, n, "geodesic", h.c_hat, h.additive, h.max_residual, h.max_cross_residual, h.pairs_above_floor};
  });
  return out;
}

// ---- operator Bernstein Monte Carlo -------------------------------------------------------

struct BernsteinRecord {
  double u = 0.0;
  double empirical = 0.0;  // fraction of trials with ||mean xi||_op >= u
  double bound = 0.0;      // 4 D exp(-n u^2 / (2V + 2uR/3))
  bool vacuous = false;    // bound >= 1
  bool violation = false;
};

struct BernsteinResult {
  Index dimension = 10;
  Index n = 2000;
  std::size_t trials = 10000;
  double R = 0.0;
  double V = 0.0;
  std::vector<BernsteinRecord> records;
  std::size_t violations = 0;
};

/// xi = Z Z^T - I with Z uniform on the sphere of radius sqrt(D) in R^D, so that
/// ||xi|| = D - 1 = R, E xi^2 = (D - 1) I (V = D - 1) and tr E xi^2 = V D.
inline BernsteinResult operator_bernstein_mc(const ExperimentConfig& cfg) {
  BernsteinResult res;
  res.dimension = cfg.get<Index>("dimension", 10);
  res.n = cfg.get<Index>("bernstein_n", 2000);
  res.trials = cfg.get<std::size_t>("trials", 10000);
  const auto u_grid = cfg.get<std::vector<double>>(
      "u_grid", {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6, 0.8, 1.0, 2.0, 5.0, 10.0});
  const Index D = res.dimension;
  if (D < 2) throw ConfigError("dimension must be >= 2");
  res.R = static_cast<double>(D - 1);
  res.V = static_cast<double>(D - 1);
  std::vector<double> norms(res.trials);
  parallel_for(res.trials, cfg.threads, [&](std::size_t k) {
    std::mt19937_64 rng(replicate_seed(cfg.seed, res.n, 0, k));
    Matrix Z = standard_normal(res.n, D, rng);
    for (Index i = 0; i < res.n; ++i) Z.row(i) *= std::sqrt(static_cast<double>(D)) / Z.row(i).norm();
    Matrix M = Z.transpose() * Z / static_cast<double>(res.n);
    M.diagonal().array() -= 1.0;
    norms[k] = operator_norm(0.5 * (M + M.transpose()));
  });
  for (double u : u_grid) {
    BernsteinRecord r;
    r.u = u;
    const auto hits = std::count_if(norms.begin(), norms.end(), [&](double x) { return x >= u; });
    r.empirical = static_cast<double>(hits) / static_cast<double>(res.trials);
    r.bound = 4.0 * static_cast<double>(D) *
              std::exp(-static_cast<double>(res.n) * u * u / (2.0 * res.V + (2.0 / 3.0) * u * res.R));
    r.vacuous = r.bound >= 1.0;
    r.violation = r.empirical > r.bound;
    res.violations += r.violation;
    res.records.push_back(r);
  }
  return res;
}

// ---- Hilbert-norm concentration Monte Carlo -------------------------------------------------

struct HilbertRecord {
  Index n = 0;
  double level = 0.0;     // 1 - e^{-tau}
  double tau = 1.0;
  double quantile = 0.0;  // empirical quantile of sum_k a_k (mean_i Z_ik)^2
  double envelope = 0.0;  // ||a||_1 tau / n + ||k a||_1 tau^2 / n^2
  double c_fit = 0.0;     // quantile / envelope
};

struct HilbertResult {
  double ratio = 0.8;  // a_k = ratio^{k-1}
  std::size_t terms = 0;
  std::size_t trials = 0;
  double a_l1 = 0.0;
  double ka_l1 = 0.0;
  std::vector<HilbertRecord> records;
  double stability = 0.0;  // max c_fit / min c_fit over n at tau = 1
};

/// Rademacher Z_ik (so sum_{k<=N} Z_1k^2 = N) with geometric weights a_k.
inline HilbertResult hilbert_norm_mc(const ExperimentConfig& cfg) {
  HilbertResult res;
  res.ratio = cfg.get<double>("ratio", 0.8);
  res.trials = cfg.get<std::size_t>("trials", 10000);
  const auto taus = cfg.get<std::vector<double>>("tau", {1.0, 2.0});
  if (!(res.ratio > 0.0 && res.ratio < 1.0)) throw ConfigError("ratio must lie in (0, 1)");
  std::vector<double> a;
  for (double v = 1.0; v > 1e-14; v *= res.ratio) a.push_back(v);
  res.terms = a.size();
  for (std::size_t k = 0; k < a.size(); ++k) {
    res.a_l1 += a[k];
    res.ka_l1 += static_cast<double>(k + 1) * a[k];
  }
  const auto n_grid = cfg.get<std::vector<Index>>("hilbert_n_grid", {100, 200, 400, 800});
  double c_min = INFINITY, c_max = 0.0;
  for (Index n : n_grid) {
    if (n < 1) throw ConfigError("hilbert_n_grid entries must be >= 1");
    std::vector<double> stat(res.trials);
    parallel_for(res.trials, cfg.threads, [&](std::size_t trial) {
      std::mt19937_64 rng(replicate_seed(cfg.seed, n, 1, trial));
      std::binomial_distribution<long long> heads(n, 0.5);
      double s = 0.0;
      for (double ak : a) {
        const double mean = (2.0 * static_cast<double>(heads(rng)) - static_cast<double>(n)) / static_cast<double>(n);
        s += ak * mean * mean;
      }
      stat[trial] = s;
    });
    for (double tau : taus) {
      HilbertRecord r;
      r.n = n;
      r.tau = tau;
      r.level = 1.0 - std::exp(-tau);
      r.quantile = quantile(stat, r.level);
      const double dn = static_cast<double>(n);
      r.envelope = res.a_l1 * tau / dn + res.ka_l1 * tau * tau / (dn * dn);
      r.c_fit = r.quantile / r.envelope;
      if (tau == 1.0) {
        c_min = std::min(c_min, r.c_fit);
        c_max = std::max(c_max, r.c_fit);
      }
      res.records.push_back(r);
    }
  }
  res.stability = c_max / c_min;
  return res;
}

// ---- eigenvalue sums ---------------------------------------------------------------------

struct EigenSumRecord {
  double t = 0.0;
  double s1 = 0.0;  // sum_{j>m} e^{-mu t} / (1 - e^{-mu t})
  double s2 = 0.0;  // sum_{j>m} e^{-mu t} / (1 - e^{-mu t})^2
  double s3 = 0.0;  // sum_{j>m} j e^{-mu t} / (1 - e^{-mu t})^2
  double scaled1 = 0.0;  // t^{d/2} s1
  double scaled2 = 0.0;  // t^{d/2} s2
  double scaled3 = 0.0;  // t^d s3
  std::size_t terms = 0;
};

/// The three sums over the analytic spectrum, summed shell by shell until the
/// remainder is below `rel_tol` relative to the partial sums.
inline EigenSumRecord eigenvalue_sums(const ManifoldModel& model, double t, double rel_tol = 1e-13,
                                      std::size_t max_terms = 1'000'000'000) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  const double rate = model.shell_rate() * t;
  const int d = model.dim();
  const double m = model.components();
  LatticeShells shells(d);
  EigenSumRecord rec;
  rec.t = t;
  double before = static_cast<double>(m * shells.next());  // shell 0: the nullspace
  for (std::int64_t s = 1;; ++s) {
    const double r = m * static_cast<double>(shells.next());
    if (r > 0) {
      const double x = std::exp(-rate * static_cast<double>(s));
      const double one = x / (1.0 - x);
      const double two = x / ((1.0 - x) * (1.0 - x));
      rec.s1 += r * one;
      rec.s2 += r * two;
      rec.s3 += (r * before + r * (r + 1.0) / 2.0) * two;
      before += r;
    }
    rec.terms = static_cast<std::size_t>(before);
    if (rec.terms > max_terms) throw TruncationBudgetExceeded("eigenvalue sums need more terms than the cap");
    // Remainder: summands are at most P(s') e^{-rate s'} / (1 - e^{-rate s})^2 with
    // P(s') <= m (2 sqrt(s') + 1)^d counts and indices j <= m (2 sqrt(s') + 1)^d.
    const double root = std::sqrt(static_cast<double>(s));
    const double p = 2.0 * d;
    if (p / (root * (2.0 * root + 1.0)) <= rate / 2.0) {
      const double x = std::exp(-rate * static_cast<double>(s));
      const double q = std::exp(-rate / 2.0);
      const double base = m * std::pow(2.0 * root + 1.0, d) * x * q / (1.0 - q) / ((1.0 - x) * (1.0 - x));
      const double tail1 = base;
      const double tail3 = base * m * std::pow(2.0 * root + 1.0, d);
      if (tail1 <= rel_tol * rec.s1 && tail3 <= rel_tol * rec.s3) break;
    }
  }
  rec.scaled1 = std::pow(t, 0.5 * d) * rec.s1;
  rec.scaled2 = std::pow(t, 0.5 * d) * rec.s2;
  rec.scaled3 = std::pow(t, d) * rec.s3;
  return rec;
}

struct EigenSumResult {
  std::vector<EigenSumRecord> records;
  double ratio1 = 0.0;  // max / min of scaled1 over the grid
  double ratio2 = 0.0;
  double ratio3 = 0.0;
  bool s1_decreasing = true;
};

inline EigenSumResult eigenvalue_sum_check(const ManifoldModel& model, const std::vector<double>& t_grid) {
  EigenSumResult res;
  for (double t : t_grid) res.records.push_back(eigenvalue_sums(model, t));
  auto ratio = [&](auto member) {
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : res.records) {
      lo = std::min(lo, r.*member);
      hi = std::max(hi, r.*member);
    }
    return hi / lo;
  };
  res.ratio1 = ratio(&EigenSumRecord::scaled1);
  res.ratio2 = ratio(&EigenSumRecord::scaled2);
  res.ratio3 = ratio(&EigenSumRecord::scaled3);
  std::vector<EigenSumRecord> sorted = res.records;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  for (std::size_t k = 1; k < sorted.size(); ++k) res.s1_decreasing &= sorted[k].s1 < sorted[k - 1].s1;
  return res;
}

}  // namespace sml
