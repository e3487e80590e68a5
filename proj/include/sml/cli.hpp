#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "experiments.hpp"
#include "graph_laplacian.hpp"
#include "heat_pca.hpp"
#include "io.hpp"
#include "perturbation.hpp"

namespace sml::cli {

using nlohmann::json;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"sample",        "spectrum",   "laplacian",     "pca",
                                              "corollary1",    "corollary2", "approx-error",  "concentration",
                                              "bounds-suite",  "eig-sums"};
  return names;
}

struct CommandSpec {
  std::string subcommand;
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;      // empty: config "output"
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> parallel;
  bool reproducible = false;
  bool schema = false;
  bool defaults = false;
  int verbosity = 0;
};

enum ExitCode : int { kSuccess = 0, kConfigError = 1, kPropertyFailure = 2 };

// ---- defaults and schema ----------------------------------------------------------

inline json default_config(const std::string& sub) {
  const json circle{{"kind", "circle"}};
  if (sub == "sample") return {{"manifold", circle}, {"n_grid", {500}}, {"seed", 1}, {"output", "out/sample"}};
  if (sub == "spectrum") return {{"manifold", circle}, {"extra", {{"count", 20}}}, {"output", "out/spectrum"}};
  if (sub == "laplacian") {
    return {{"manifold", circle},  {"n_grid", {500}},           {"t_grid", {0.01}},
            {"kernels", {"gaussian"}}, {"seed", 1},             {"output", "out/laplacian"},
            {"extra", {{"eigen_count", 10}, {"dirichlet_trials", 20}, {"export_matrix", false}}}};
  }
  if (sub == "pca") {
    return {{"manifold", circle}, {"n_grid", {300}}, {"t_grid", {0.05}}, {"seed", 1},
            {"output", "out/pca"}, {"extra", {{"j_max", 9}, {"nullspace_m", 1}}}};
  }
  if (sub == "corollary1") {
    return {{"manifold", circle}, {"n_grid", {250, 500, 1000, 2000}}, {"t_grid", {0.005}}, {"replicates", 20},
            {"seed", 1}, {"j", {1, 2, 3}}, {"kernels", {"gaussian"}}, {"output", "out/corollary1"}};
  }
  if (sub == "corollary2") {
    return {{"manifold", circle}, {"n_grid", {250, 500, 1000, 2000}}, {"t_grid", {0.005}}, {"replicates", 20},
            {"seed", 1}, {"j", {1, 3}}, {"kernels", {"gaussian"}}, {"output", "out/corollary2"}};
  }
  if (sub == "approx-error") {
    return {{"manifold", circle}, {"n_grid", {400}}, {"t_grid", {0.08, 0.04, 0.02, 0.01, 0.005}},
            {"seed", 1},          {"K", 4},          {"output", "out/approx-error"}};
  }
  if (sub == "concentration") {
    return {{"manifold", circle}, {"n_grid", {250, 500, 1000, 2000}}, {"t_grid", {0.05}}, {"replicates", 10},
            {"seed", 1}, {"j", {2, 3}}, {"K", 4}, {"output", "out/concentration"},
            {"extra",
             {{"reduction_n_max", 500}, {"monte_carlo", true}, {"trials", 10000}, {"dimension", 10},
              {"bernstein_n", 2000}, {"hilbert_n_grid", {100, 200, 400, 800}}, {"ratio", 0.8}, {"tau", {1.0, 2.0}}}}};
  }
  if (sub == "bounds-suite") {
    return {{"seed", 20240601}, {"output", "out/bounds-suite"},
            {"extra", {{"instances", 10000}, {"min_dim", 2}, {"max_dim", 40}, {"constant", 40.0}}}};
  }
  if (sub == "eig-sums") {
    return {{"manifold", {{"kind", "torus"}, {"d", 3}}}, {"t_grid", {0.5, 0.1, 0.05, 0.02}}, {"output", "out/eig-sums"}};
  }
  throw ConfigError("unknown subcommand '" + sub + "'");
}

inline json extra_schema(const std::string& sub) {
  auto integer = [](const std::string& d) { return json{{"type", "integer"}, {"minimum", 1}, {"description", d}}; };
  auto number = [](const std::string& d) { return json{{"type", "number"}, {"description", d}}; };
  json props = json::object();
  if (sub == "spectrum") props["count"] = integer("number of eigenpairs to list");
  if (sub == "laplacian") {
    props["eigen_count"] = integer("number of lowest eigenvalues to report");
    props["dirichlet_trials"] = integer("random vectors for the Dirichlet-form identity");
    props["export_matrix"] = {{"type", "boolean"}, {"description", "also write the dense Laplacian as CSV"}};
  }
  if (sub == "pca") {
    props["j_max"] = integer("largest index compared with the population spectrum");
    props["nullspace_m"] = integer("m used for delta_{<=m}(Sigma_hat - Sigma)");
  }
  if (sub == "concentration") {
    props["reduction_n_max"] = integer("largest n used by the reduction chain");
    props["monte_carlo"] = {{"type", "boolean"}, {"description", "run the Bernstein and Hilbert-norm Monte Carlo"}};
    props["trials"] = integer("Monte Carlo trials");
    props["dimension"] = integer("matrix dimension D for the Bernstein ensemble");
    props["bernstein_n"] = integer("samples per Bernstein trial");
    props["u_grid"] = {{"type", "array"}, {"items", {{"type", "number"}}}, {"description", "Bernstein thresholds"}};
    props["hilbert_n_grid"] = {{"type", "array"}, {"items", {{"type", "integer"}}}, {"description", "sample sizes"}};
    props["ratio"] = number("geometric ratio of a_k");
    props["tau"] = {{"type", "array"}, {"items", {{"type", "number"}}}, {"description", "quantile parameters"}};
  }
  if (sub == "bounds-suite") {
    props["instances"] = integer("random instances per suite");
    props["min_dim"] = integer("smallest matrix dimension");
    props["max_dim"] = integer("largest matrix dimension");
    props["constant"] = number("constant in the second nullspace relative Weyl form");
  }
  return {{"type", "object"}, {"additionalProperties", false}, {"properties", props}};
}

/// JSON schema (draft-07) for a subcommand's configuration.
inline json config_schema(const std::string& sub) {
  const json defaults = default_config(sub);
  json props{
      {"manifold",
       {{"type", "object"},
        {"additionalProperties", false},
        {"properties",
         {{"kind", {{"enum", {"circle", "torus", "two_circles"}}}},
          {"d", {{"type", "integer"}, {"minimum", 1}}},
          {"separation", {{"type", "number"}, {"exclusiveMinimum", 0}}}}}}},
      {"n_grid", {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 1}}}, {"minItems", 1}}},
      {"t_grid",
       {{"type", "array"}, {"items", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}}}}},
      {"replicates", {{"type", "integer"}, {"minimum", 1}}},
      {"seed", {{"type", "integer"}, {"minimum", 0}}},
      {"j", {{"type", "array"}, {"items", {{"type", "integer"}, {"minimum", 1}}}}},
      {"kernels", {{"type", "array"}, {"items", {{"enum", {"gaussian", "geodesic", "heat"}}}}, {"minItems", 1}}},
      {"epsilon", {{"type", "number"}, {"exclusiveMinimum", 0}}},
      {"max_terms", {{"type", "integer"}, {"minimum", 1}}},
      {"K", {{"type", "integer"}, {"minimum", 1}}},
      {"parallel", {{"type", "integer"}, {"minimum", 1}}},
      {"output", {{"type", "string"}}},
      {"extra", extra_schema(sub)}};
  for (const auto& [key, value] : defaults.items()) {
    if (key != "extra") props[key]["default"] = value;
  }
  if (defaults.contains("extra")) {
    for (const auto& [key, value] : defaults["extra"].items()) props["extra"]["properties"][key]["default"] = value;
  }
  return {{"$schema", "http://json-schema.org/draft-07/schema#"},
          {"title", "sml " + sub + " configuration"},
          {"type", "object"},
          {"additionalProperties", false},
          {"properties", props}};
}

// ---- run context ---------------------------------------------------------------------

struct Check {
  std::string name;
  bool pass = true;
  bool asserted = true;  // false: envelope reported but not part of the exit code
  json detail = json::object();
};

inline json to_json(const Check& c) {
  return {{"name", c.name}, {"pass", c.pass}, {"asserted", c.asserted}, {"detail", c.detail}};
}

class Context {
 public:
  Context(const CommandSpec& spec, ExperimentConfig cfg, std::filesystem::path out, std::ostream& log)
      : spec_(spec), cfg_(std::move(cfg)), out_(std::move(out)), log_(log) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  const std::filesystem::path& out() const { return out_; }
  json& results() { return results_; }
  const std::vector<Check>& checks() const { return checks_; }

  void info(const std::string& msg) const {
    if (spec_.verbosity > 0) log_ << "[sml] " << msg << '\n';
  }

  io::CsvWriter csv(const std::string& file, std::vector<std::string> header) const {
    info("writing " + (out_ / file).string());
    return io::CsvWriter(out_ / file, std::move(header), spec_.reproducible);
  }

  io::JsonLines& bounds() {
    if (!bounds_) bounds_ = std::make_unique<io::JsonLines>(out_ / "bounds.jsonl");
    return *bounds_;
  }

  void check(std::string name, bool pass, json detail = json::object(), bool asserted = true) {
    checks_.push_back({std::move(name), pass, asserted, std::move(detail)});
  }

  void check(const BoundReport& r) {
    bounds().write(sml::to_json(r));
    check(r.name, r.pass, sml::to_json(r));
  }

  bool failed() const {
    return std::any_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.asserted && !c.pass; });
  }

 private:
  const CommandSpec& spec_;
  ExperimentConfig cfg_;
  std::filesystem::path out_;
  std::ostream& log_;
  json results_ = json::object();
  std::vector<Check> checks_;
  std::unique_ptr<io::JsonLines> bounds_;
};

inline std::string join(const std::vector<int>& v, char sep = ' ') {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? std::string(1, sep) : "") + std::to_string(v[k]);
  return s;
}

inline std::string trig_name(Trig t) {
  switch (t) {
    case Trig::Constant: return "const";
    case Trig::Cos: return "cos";
    case Trig::Sin: return "sin";
  }
  return "?";
}

/// Consecutive ratios y(t/2) / y(t) along a t grid sorted descending.
inline std::vector<double> halving_ratios(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> r;
  for (std::size_t k = 1; k < pts.size(); ++k) r.push_back(pts[k].second / pts[k - 1].second);
  return r;
}

inline json fits_json(const std::vector<GridFit>& fits) {
  json a = json::array();
  for (const auto& f : fits) a.push_back(to_json(f));
  return a;
}

/// Slope band for n^{-1/2}-type rates.
inline bool slope_in_band(const GridFit& f) { return f.fit && f.fit->slope >= -0.65 && f.fit->slope <= -0.35; }

// ---- subcommands -------------------------------------------------------------------------

inline void cmd_sample(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const ManifoldModel model = cfg.manifold.build();
  const Index n = cfg.n_grid.back();
  const PointCloud cloud = model.sample_uniform(n, cfg.seed);
  std::vector<std::string> header{"index", "component"};
  for (int k = 0; k < model.dim(); ++k) header.push_back("s" + std::to_string(k + 1));
  for (int k = 0; k < model.ambient_dim(); ++k) header.push_back("x" + std::to_string(k + 1));
  auto out = ctx.csv("points.csv", header);
  double embed_err = 0.0;
  for (Index i = 0; i < n; ++i) {
    std::vector<io::Cell> row{static_cast<long long>(i), cloud.component[static_cast<std::size_t>(i)]};
    for (Index k = 0; k < cloud.intrinsic.cols(); ++k) row.emplace_back(cloud.intrinsic(i, k));
    for (Index k = 0; k < cloud.ambient.cols(); ++k) row.emplace_back(cloud.ambient(i, k));
    out.row(row);
    Eigen::VectorXd x(model.ambient_dim());
    model.embed(cloud.point(i), std::span<double>(x.data(), static_cast<std::size_t>(x.size())));
    embed_err = std::max(embed_err, (x.transpose() - cloud.ambient.row(i)).cwiseAbs().maxCoeff());
  }
  ctx.results()["n"] = n;
  ctx.results()["manifold"] = model.name();
  ctx.check("ambient_matches_embedding", embed_err <= 1e-12, {{"max_abs_error", embed_err}});
}

inline void cmd_spectrum(Context& ctx) {
  const ManifoldModel model = ctx.cfg().manifold.build();
  const auto count = ctx.cfg().get<std::size_t>("count", 20);
  const auto modes = model.modes(count);
  auto out = ctx.csv("spectrum.csv", {"j", "mu", "shell", "component", "trig", "frequency"});
  bool sorted = true;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const Mode& m = modes[k];
    out.row({static_cast<long long>(k + 1), m.mu, static_cast<long long>(m.shell), m.component, trig_name(m.trig),
             join(m.frequency)});
    if (k && m.mu < modes[k - 1].mu) sorted = false;
  }
  bool nullspace = true;
  for (int k = 0; k < model.components() && k < static_cast<int>(modes.size()); ++k) nullspace &= modes[static_cast<std::size_t>(k)].mu == 0.0;
  ctx.results()["count"] = modes.size();
  ctx.check("eigenvalues_nondecreasing", sorted);
  ctx.check("nullspace_multiplicity", nullspace, {{"components", model.components()}});
}

inline void cmd_laplacian(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const ManifoldModel model = cfg.manifold.build();
  const Index n = cfg.n_grid.back();
  const double t = cfg.t_grid.front();
  const PointCloud cloud = model.sample_uniform(n, cfg.seed);
  const KernelMatrix W = build_kernel(model, cloud, cfg.kernels.front(), t, cfg.heat_options());
  const GraphLaplacian L = build_laplacian(W);
  const Index count = std::min<Index>(cfg.get<Index>("eigen_count", 10), n);
  const SpectralDecomposition dec = eigh_lowest(L.matrix, count);
  const auto mu = model.eigenvalues(static_cast<std::size_t>(count));
  auto out = ctx.csv("laplacian_eigenvalues.csv", {"j", "lambda", "mu"});
  for (Index j = 0; j < count; ++j) out.row({static_cast<long long>(j + 1), dec.eigenvalues(j), mu[static_cast<std::size_t>(j)]});
  if (cfg.get<bool>("export_matrix", false)) {
    std::vector<std::string> header;
    for (Index k = 0; k < n; ++k) header.push_back("c" + std::to_string(k + 1));
    auto mat = ctx.csv("laplacian.csv", header);
    for (Index i = 0; i < n; ++i) {
      std::vector<io::Cell> row;
      for (Index k = 0; k < n; ++k) row.emplace_back(L.matrix(i, k));
      mat.row(row);
    }
  }
  const double norm = operator_norm(L.matrix);
  ctx.check("lambda1_zero", std::abs(dec.eigenvalues(0)) <= 1e-10 * norm,
            {{"lambda1", dec.eigenvalues(0)}, {"norm", norm}});
  if (model.components() == 1) {
    const double align = std::abs(dec.eigenvectors.col(0).sum()) / std::sqrt(static_cast<double>(n));
    ctx.check("u1_constant", align >= 1.0 - 1e-8, {{"alignment", align}});
    if (count > 1) ctx.check("lambda2_positive", dec.eigenvalues(1) > 0.0, {{"lambda2", dec.eigenvalues(1)}});
  }
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  double worst = 0.0;
  const auto trials = cfg.get<int>("dirichlet_trials", 20);
  for (int k = 0; k < trials; ++k) {
    const Vector u = standard_normal(n, 1, rng).col(0);
    const double a = dirichlet_form(L, u);
    const double b = dirichlet_form_pairwise(W, u);
    worst = std::max(worst, std::abs(a - b) / (1e-10 * std::abs(a) + 1e-12));
  }
  ctx.check("dirichlet_identity", worst <= 1.0, {{"worst_ratio_to_tolerance", worst}});
  ctx.results()["norm"] = norm;
  ctx.results()["kernel"] = to_string(cfg.kernels.front());
}

inline void cmd_pca(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const ManifoldModel model = cfg.manifold.build();
  const Index n = cfg.n_grid.back();
  const double t = cfg.t_grid.front();
  const PointCloud cloud = model.sample_uniform(n, cfg.seed);
  const FeatureMatrix F = feature_matrix(model, cloud, t, cfg.heat_options());
  const Index r = std::min<Index>(n, static_cast<Index>(F.N));
  const Index j_max = std::min<Index>(cfg.get<Index>("j_max", 9), r);
  const auto recs = empirical_vs_population(F, j_max);
  auto out = ctx.csv("pca.csv", {"j", "mu", "lambda_hat", "scaled", "eig_gap", "proj_dist"});
  for (const auto& rec : recs) {
    out.row({static_cast<long long>(rec.j), rec.mu, rec.lambda_hat, rec.scaled, rec.eig_gap, rec.proj_dist});
  }
  const KernelTrickResult kt = kernel_trick_check(F);
  ctx.check(kt.eigenvalues);
  ctx.check(kt.principal_components);
  const auto m = std::min<Index>(cfg.get<Index>("nullspace_m", model.components()), static_cast<Index>(F.N) - 1);
  ctx.results()["N"] = F.N;
  ctx.results()["tail_mass"] = F.tail_mass;
  ctx.results()["delta_nullspace"] = delta_nullspace(F, m);
}

inline void cmd_corollary1(Context& ctx) {
  const auto& cfg = ctx.cfg();
  json per_kernel = json::object();
  for (KernelKind kind : cfg.kernels) {
    ctx.info("corollary1 sweep, kernel " + to_string(kind));
    const Corollary1Result res = corollary1_sweep(cfg, kind);
    auto out = ctx.csv("corollary1_" + to_string(kind) + ".csv", {"n", "t", "seed", "j", "lambda", "mu", "abs_err"});
    for (const auto& r : res.records) {
      out.row({static_cast<long long>(r.n), r.t, static_cast<unsigned long long>(r.seed), static_cast<long long>(r.j),
               r.lambda, r.mu, r.abs_err});
    }
    per_kernel[to_string(kind)] = {{"n_fits", fits_json(res.n_fits)}, {"t_fits", fits_json(res.t_fits)}};
    for (const auto& f : res.n_fits) {
      if (f.medians.empty() || !(f.medians.front().second > 1e-9)) continue;
      const std::string tag = to_string(kind) + "_j" + std::to_string(f.j) + "_t" + io::format_double(f.t);
      ctx.check("n_slope_" + tag, slope_in_band(f), to_json(f), false);
      if (cfg.replicates >= 50) {
        int inversions = 0;
        for (std::size_t k = 1; k < f.medians.size(); ++k) inversions += f.medians[k].second > f.medians[k - 1].second;
        ctx.check("median_nonincreasing_" + tag, inversions <= 1, {{"inversions", inversions}});
      }
    }
  }
  ctx.results()["kernels"] = per_kernel;
}

inline void cmd_corollary2(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const ManifoldModel model = cfg.manifold.build();
  json per_kernel = json::object();
  for (KernelKind kind : cfg.kernels) {
    const Corollary2Result res = corollary2_sweep(cfg, kind);
    auto out = ctx.csv("corollary2_" + to_string(kind) + ".csv", {"n", "t", "seed", "j", "distance"});
    double j1 = 0.0;
    for (const auto& r : res.records) {
      out.row({static_cast<long long>(r.n), r.t, static_cast<unsigned long long>(r.seed), static_cast<long long>(r.j),
               r.distance});
      if (r.j == 1) j1 = std::max(j1, r.distance);
    }
    per_kernel[to_string(kind)] = {{"n_fits", fits_json(res.n_fits)}};
    if (model.components() == 1 && std::find(cfg.j.begin(), cfg.j.end(), 1) != cfg.j.end()) {
      ctx.check("j1_constant_vector_" + to_string(kind), j1 <= 1e-8, {{"max_distance", j1}});
    }
  }
  ctx.results()["kernels"] = per_kernel;
}

inline void cmd_approx_error(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const ManifoldModel model = cfg.manifold.build();
  const auto recs = approximation_sweep(cfg);
  auto out = ctx.csv("approx_error.csv", {"kernel", "t", "n", "seed", "c_hat", "additive", "max_residual",
                                          "max_cross_residual", "pairs_above_floor"});
  std::map<std::string, std::vector<std::pair<double, double>>> c_hat;
  for (const auto& r : recs) {
    out.row({r.kernel, r.t, static_cast<long long>(r.n), static_cast<unsigned long long>(r.seed), r.c_hat, r.additive,
             r.max_residual, r.max_cross_residual, static_cast<unsigned long long>(r.pairs_above_floor)});
    c_hat[r.kernel].emplace_back(r.t, r.c_hat);
  }
  for (const auto& [kernel, pts] : c_hat) {
    const auto ratios = halving_ratios(pts);
    const double worst = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
    ctx.results()[kernel + "_c_hat_ratios"] = ratios;
    ctx.check(kernel + "_c_hat_stable", worst <= 1.5, {{"max_ratio", worst}}, false);
  }
  if (model.components() > 1) {
    for (const auto& r : recs) {
      if (r.kernel != "gaussian" || r.t > 0.05) continue;
      const double floor = std::pow(r.t, 4);
      ctx.check("cross_residual_t" + io::format_double(r.t), r.max_cross_residual <= floor,
                {{"max_cross_residual", r.max_cross_residual}, {"t4", floor}}, false);
    }
  }
}

inline void cmd_concentration(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const DegreeResult deg = degree_concentration(cfg);
  {
    auto out = ctx.csv("degree.csv", {"n", "t", "seed", "max_deviation"});
    for (const auto& r : deg.records) {
      out.row({static_cast<long long>(r.n), r.t, static_cast<unsigned long long>(r.seed), r.max_deviation});
    }
  }
  ctx.results()["degree_fits"] = fits_json(deg.n_fits);
  for (const auto& f : deg.n_fits) {
    ctx.check("degree_slope_t" + io::format_double(f.t), slope_in_band(f), to_json(f), false);
  }

  ExperimentConfig rc = cfg;
  const auto n_max = cfg.get<Index>("reduction_n_max", 500);
  rc.n_grid.erase(std::remove_if(rc.n_grid.begin(), rc.n_grid.end(), [&](Index n) { return n > n_max; }),
                  rc.n_grid.end());
  if (!rc.n_grid.empty()) {
    const auto recs = reduction_chain(rc);
    auto out = ctx.csv("reduction.csv", {"n", "t", "seed", "j", "step1", "step2", "step2_bound", "step3",
                                         "step3_bound", "rho", "c3"});
    double step1 = 0.0, step2_ratio = 0.0;
    std::map<double, std::vector<double>> c3;
    for (const auto& r : recs) {
      out.row({static_cast<long long>(r.n), r.t, static_cast<unsigned long long>(r.seed), static_cast<long long>(r.j),
               r.step1, r.step2, r.step2_bound, r.step3, r.step3_bound, r.rho, r.c3});
      step1 = std::max(step1, r.step1);
      step2_ratio = std::max(step2_ratio, r.step2 / r.step2_bound);
      c3[r.t].push_back(r.c3);
    }
    ctx.check("reduction_step1", step1 <= 1e-9, {{"max_discrepancy", step1}});
    ctx.check("reduction_step2_weyl", step2_ratio <= 1.0 + 1e-9, {{"max_ratio", step2_ratio}});
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, v] : c3) pts.emplace_back(t, median(v));
    const auto ratios = halving_ratios(pts);
    ctx.results()["step3_c_ratios"] = ratios;
    if (!ratios.empty()) {
      const double worst = *std::max_element(ratios.begin(), ratios.end());
      ctx.check("reduction_step3_stable", worst <= 1.5, {{"max_ratio", worst}}, false);
    }
  }

  if (cfg.get<bool>("monte_carlo", true)) {
    ctx.info("operator Bernstein Monte Carlo");
    const BernsteinResult b = operator_bernstein_mc(cfg);
    auto out = ctx.csv("bernstein.csv", {"u", "empirical", "bound", "vacuous", "violation"});
    for (const auto& r : b.records) out.row({r.u, r.empirical, r.bound, static_cast<int>(r.vacuous), static_cast<int>(r.violation)});
    ctx.check("bernstein_no_violations", b.violations == 0,
              {{"violations", b.violations}, {"trials", b.trials}, {"n", b.n}, {"D", b.dimension}});
    ctx.info("Hilbert-norm Monte Carlo");
    const HilbertResult h = hilbert_norm_mc(cfg);
    auto hout = ctx.csv("hilbert.csv", {"n", "tau", "level", "quantile", "envelope", "c_fit"});
    for (const auto& r : h.records) hout.row({static_cast<long long>(r.n), r.tau, r.level, r.quantile, r.envelope, r.c_fit});
    ctx.check("hilbert_c_stable", h.stability <= 2.0, {{"stability", h.stability}, {"trials", h.trials}}, false);
  }
}

inline void cmd_bounds_suite(Context& ctx) {
  const auto& cfg = ctx.cfg();
  SuiteOptions opts;
  opts.instances = cfg.get<std::size_t>("instances", 10000);
  opts.seed = cfg.seed;
  opts.min_dim = cfg.get<Index>("min_dim", 2);
  opts.max_dim = cfg.get<Index>("max_dim", 40);
  opts.threads = cfg.threads;
  if (opts.min_dim < 1 || opts.max_dim < opts.min_dim) throw ConfigError("need 1 <= min_dim <= max_dim");
  const double constant = cfg.get<double>("constant", 40.0);
  const std::vector<std::function<SuiteResult()>> suites{
      [&] { return suite_absolute_weyl(opts); },
      [&] { return suite_absolute_dk(opts); },
      [&] { return suite_relative_dk(opts); },
      [&] { return suite_refined_relative_dk(opts); },
      [&] { return suite_delta_bounds(opts); },
      [&] { return suite_relative_weyl_pd(opts); },
      [&] { return suite_nullspace_relative_weyl(opts, constant); },
      [&] { return suite_procrustes(opts); }};
  json summary = json::array();
  for (const auto& run : suites) {
    const SuiteResult s = run();
    ctx.info("suite " + s.name + ": " + std::to_string(s.violations) + " violations");
    const json line{{"suite", s.name},           {"instances", s.instances}, {"checks", s.checks},
                    {"violations", s.violations}, {"skipped", s.skipped},     {"max_ratio", s.max_ratio},
                    {"constant_needed", s.constant_needed}};
    ctx.bounds().write(line);
    for (const auto& f : s.failures) {
      json fj = sml::to_json(f);
      fj["suite"] = s.name;
      ctx.bounds().write(fj);
    }
    summary.push_back(line);
    ctx.check(s.name, s.pass(), line);
  }
  ctx.results()["suites"] = summary;
}

inline void cmd_eig_sums(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const ManifoldModel model = cfg.manifold.build();
  const EigenSumResult res = eigenvalue_sum_check(model, cfg.t_grid);
  auto out = ctx.csv("eig_sums.csv", {"t", "s1", "s2", "s3", "scaled1", "scaled2", "scaled3", "terms"});
  for (const auto& r : res.records) {
    out.row({r.t, r.s1, r.s2, r.s3, r.scaled1, r.scaled2, r.scaled3, static_cast<unsigned long long>(r.terms)});
  }
  ctx.results()["ratio1"] = res.ratio1;
  ctx.results()["ratio2"] = res.ratio2;
  ctx.results()["ratio3"] = res.ratio3;
  ctx.check("s1_decreasing_in_t", res.s1_decreasing);
  if (model.dim() >= 3) {
    ctx.check("scaled_s1_ratio", res.ratio1 <= 2.0, {{"ratio", res.ratio1}}, false);
    ctx.check("scaled_s2_ratio", res.ratio2 <= 2.0, {{"ratio", res.ratio2}}, false);
  }
  if (model.dim() >= 5) ctx.check("scaled_s3_ratio", res.ratio3 <= 2.0, {{"ratio", res.ratio3}}, false);
}

// ---- entry points ------------------------------------------------------------------------

inline std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("SML_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != std::string(s).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("SML_SEED is not an unsigned integer: ") + s);
  }
}

inline json load_config(const CommandSpec& spec) {
  if (spec.config_path.empty()) return default_config(spec.subcommand);
  std::ifstream in(spec.config_path);
  if (!in) throw ConfigError("cannot read config " + spec.config_path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + spec.config_path + ": " + e.what());
  }
}

/// Executes one subcommand; returns 0, 1 (configuration/IO) or 2 (property failure).
inline int run(const CommandSpec& spec, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), spec.subcommand) == names.end()) {
    err << "error: unknown subcommand '" << spec.subcommand << "'\n";
    return kConfigError;
  }
  if (spec.schema) {
    out << config_schema(spec.subcommand).dump(2) << '\n';
    return kSuccess;
  }
  if (spec.defaults) {
    out << default_config(spec.subcommand).dump(2) << '\n';
    return kSuccess;
  }
  try {
    const json raw = load_config(spec);
    ExperimentConfig cfg = parse_config(raw);
    if (spec.seed) {
      cfg.seed = *spec.seed;
    } else if (!raw.contains("seed")) {
      if (const auto s = env_seed()) cfg.seed = *s;
    }
    if (spec.parallel) cfg.threads = std::max(1u, *spec.parallel);
    const std::filesystem::path dir = std::filesystem::path(spec.out_dir.empty() ? cfg.output : spec.out_dir);
    std::filesystem::create_directories(dir);
    Context ctx(spec, cfg, dir, err);
    static const std::map<std::string, void (*)(Context&)> table{
        {"sample", cmd_sample},         {"spectrum", cmd_spectrum},       {"laplacian", cmd_laplacian},
        {"pca", cmd_pca},               {"corollary1", cmd_corollary1},   {"corollary2", cmd_corollary2},
        {"approx-error", cmd_approx_error}, {"concentration", cmd_concentration},
        {"bounds-suite", cmd_bounds_suite}, {"eig-sums", cmd_eig_sums}};
    table.at(spec.subcommand)(ctx);

    json checks = json::array();
    json failures = json::array();
    for (const auto& c : ctx.checks()) {
      checks.push_back(to_json(c));
      if (c.asserted && !c.pass) failures.push_back(to_json(c));
    }
    const bool failed = ctx.failed();
    json cfg_json = to_json(cfg);
    cfg_json.erase("output");
    json summary{{"subcommand", spec.subcommand}, {"config", cfg_json}, {"checks", checks},
                 {"failures", failures},          {"results", ctx.results()},
                 {"status", failed ? "fail" : "pass"}};
    if (!spec.reproducible) summary["generated"] = io::utc_timestamp();
    io::write_json(dir / "summary.json", summary);
    for (const auto& c : ctx.checks()) {
      if (!c.pass) err << (c.asserted ? "FAIL " : "note ") << c.name << ' ' << c.detail.dump() << '\n';
    }
    return failed ? kPropertyFailure : kSuccess;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return kConfigError;
  }
}

/// Parses argv into a CommandSpec and runs it.
inline int main(int argc, char** argv) {
  CLI::App app{"Spectral manifold learning experiments"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  CommandSpec spec;
  std::uint64_t seed = 0;
  unsigned parallel = 0;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", spec.config_path, "experiment configuration (JSON)");
    sub->add_option("--out", spec.out_dir, "output directory (created if absent)");
    sub->add_option("--seed", seed, "seed override (fallback: config, then SML_SEED)");
    sub->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--reproducible", spec.reproducible, "omit timestamps from outputs");
    sub->add_flag("--schema", spec.schema, "print the configuration JSON schema and exit");
    sub->add_flag("--defaults", spec.defaults, "print the default configuration and exit");
    sub->add_flag("-v,--verbose", spec.verbosity, "progress messages on stderr");
  };
  const std::map<std::string, std::string> help{
      {"sample", "sample a point cloud"},
      {"spectrum", "list analytic Laplace-Beltrami eigenpairs"},
      {"laplacian", "build a graph Laplacian and its lowest eigenvalues"},
      {"pca", "heat-kernel PCA against the population spectrum"},
      {"corollary1", "eigenvalue convergence sweep"},
      {"corollary2", "eigenvector convergence sweep"},
      {"approx-error", "heat kernel vs Gaussian kernel residual scan"},
      {"concentration", "degree concentration, reduction chain and Monte Carlo"},
      {"bounds-suite", "random perturbation-bound property suites"},
      {"eig-sums", "eigenvalue sums over the analytic spectrum"}};
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    add_flags(sub);
    sub->callback([&spec, name] { spec.subcommand = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed")) spec.seed = seed;
    if (sub->count("--parallel")) spec.parallel = parallel;
  }
  return run(spec);
}

}  // namespace sml::cli
