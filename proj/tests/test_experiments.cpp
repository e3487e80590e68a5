#include <gtest/gtest.h>

#include <random>

#include <sml/experiments.hpp>

#include "oracles.hpp"

using sml::ExperimentConfig;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.n_grid = {40, 80};
  c.t_grid = {0.05};
  c.replicates = 3;
  c.j = {1, 2};
  c.threads = 1;
  return c;
}

}  // namespace

TEST(FitRate, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double x : {10.0, 20.0, 40.0, 80.0}) pts.emplace_back(x, 3.0 / std::sqrt(x));
  const auto f = sml::fit_rate(pts);
  EXPECT_NEAR(f.slope, -0.5, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
}

TEST(FitRate, ConstantHasZeroSlope) {
  const auto f = sml::fit_rate({{1.0, 2.0}, {2.0, 2.0}, {4.0, 2.0}});
  EXPECT_NEAR(f.slope, 0.0, 1e-15);
}

TEST(FitRate, NoisySlopeMatchesNormalEquations) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<std::pair<double, double>> pts;
  std::vector<double> lx, ly;
  for (int k = 0; k < 50; ++k) {
    const double x = std::pow(2.0, 1.0 + 0.2 * k);
    const double y = std::pow(x, -0.5) * std::exp(noise(rng));
    pts.emplace_back(x, y);
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const auto f = sml::fit_rate(pts);
  const auto [slope, intercept] = oracle::ols(lx, ly);
  EXPECT_NEAR(f.slope, slope, 1e-10);
  EXPECT_NEAR(f.intercept, intercept, 1e-9);
  EXPECT_NEAR(f.slope, -0.5, 0.05);
}

TEST(FitRate, DegenerateInputs) {
  EXPECT_THROW(sml::fit_rate({{1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}}), sml::DegenerateFit);
  EXPECT_THROW(sml::fit_rate({{1.0, 1.0}, {2.0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(sml::fit_rate({{1.0, 1.0}, {2.0, 0.0}, {3.0, 1.0}}), std::invalid_argument);
}

TEST(Statistics, QuantileAndMedian) {
  EXPECT_DOUBLE_EQ(sml::median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(sml::median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_DOUBLE_EQ(sml::quantile({0.0, 10.0}, 0.3), 3.0);
  EXPECT_TRUE(std::isnan(sml::median({})));
}

TEST(Config, ParsesAndValidates) {
  const auto cfg = sml::parse_config(nlohmann::json::parse(R"({
    "manifold": {"kind": "two_circles", "separation": 1.5},
    "n_grid": [100, 200], "t_grid": [0.1], "replicates": 4, "seed": 9,
    "j": [2], "kernels": ["gaussian", "heat"], "parallel": 2})"));
  EXPECT_EQ(cfg.manifold.kind, sml::ManifoldKind::TwoCircles);
  EXPECT_DOUBLE_EQ(cfg.manifold.separation, 1.5);
  EXPECT_EQ(cfg.kernels.size(), 2u);
  EXPECT_EQ(cfg.threads, 2u);
  EXPECT_EQ(cfg.seed, 9u);
}

TEST(Config, RejectsBadInput) {
  auto bad = [](const char* text) { return sml::parse_config(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"n_grid": [200, 100]})"), sml::ConfigError);
  EXPECT_THROW(bad(R"({"t_grid": [0.0]})"), sml::ConfigError);
  EXPECT_THROW(bad(R"({"t_grid": [1.5]})"), sml::ConfigError);
  EXPECT_THROW(bad(R"({"replicates": 0})"), sml::ConfigError);
  EXPECT_THROW(bad(R"({"kernels": ["cauchy"]})"), sml::ConfigError);
  EXPECT_THROW(bad(R"({"manifold": {"kind": "sphere"}})"), sml::ConfigError);
  EXPECT_THROW(bad(R"({"unknown_key": 1})"), sml::ConfigError);
  EXPECT_THROW(bad(R"({"n_grid": "many"})"), sml::ConfigError);
  EXPECT_THROW(bad(R"([1, 2])"), sml::ConfigError);
}

TEST(Config, RoundTripsThroughJson) {
  ExperimentConfig c = tiny();
  c.manifold = {sml::ManifoldKind::Torus, 3, 0.0};
  const auto back = sml::parse_config(sml::to_json(c));
  EXPECT_EQ(back.n_grid, c.n_grid);
  EXPECT_EQ(back.manifold.d, 3);
}

TEST(Sweeps, Corollary1TrivialIndexAndReproducibility) {
  const auto cfg = tiny();
  const auto a = sml::corollary1_sweep(cfg, sml::KernelKind::Gaussian);
  ASSERT_EQ(a.records.size(), 2u * 3u * 2u);
  for (const auto& r : a.records) {
    if (r.j == 1) EXPECT_LE(r.abs_err, 1e-8);
    EXPECT_DOUBLE_EQ(r.abs_err, std::abs(r.lambda - r.mu));
  }
  auto par = cfg;
  par.threads = 3;
  const auto b = sml::corollary1_sweep(par, sml::KernelKind::Gaussian);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].lambda, b.records[k].lambda);
    EXPECT_EQ(a.records[k].seed, b.records[k].seed);
  }
}

TEST(Sweeps, Corollary2ConstantVectorAndBlockCheck) {
  auto cfg = tiny();
  cfg.j = {1};
  const auto res = sml::corollary2_sweep(cfg, sml::KernelKind::Gaussian);
  for (const auto& r : res.records) EXPECT_LE(r.distance, 1e-8);
  cfg.j = {2};
  EXPECT_THROW(sml::corollary2_sweep(cfg, sml::KernelKind::Gaussian), sml::GapTooSmall);
}

TEST(Sweeps, DegreeOfSinglePointIsDiagonalKernel) {
  auto cfg = tiny();
  cfg.n_grid = {1, 2, 4};
  cfg.replicates = 1;
  const auto res = sml::degree_concentration(cfg);
  const auto cloud = sml::ManifoldModel::circle().sample_uniform(1, res.records[0].seed);
  const double want = oracle::circle_heat_images(cloud.intrinsic(0, 0), cloud.intrinsic(0, 0), 0.05, 1.0) - 1.0;
  EXPECT_NEAR(res.records[0].max_deviation, want, 1e-9);
}

TEST(Sweeps, ReductionChainSteps) {
  auto cfg = tiny();
  cfg.j = {2, 3};
  const auto recs = sml::reduction_chain(cfg);
  ASSERT_FALSE(recs.empty());
  for (const auto& r : recs) {
    EXPECT_LE(r.step1, 1e-9);
    EXPECT_LE(r.step2, r.step2_bound * (1.0 + 1e-9));
    EXPECT_GE(r.rho, 0.0);
  }
}

TEST(Sweeps, ApproximationSweepCoversBothKernels) {
  auto cfg = tiny();
  cfg.t_grid = {0.04, 0.02};
  const auto recs = sml::approximation_sweep(cfg);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].kernel, "gaussian");
  EXPECT_EQ(recs[1].kernel, "geodesic");
}

TEST(MonteCarlo, BernsteinHasNoViolations) {
  auto cfg = tiny();
  cfg.extra = {{"trials", 300}, {"bernstein_n", 500}};
  const auto res = sml::operator_bernstein_mc(cfg);
  EXPECT_EQ(res.violations, 0u);
  EXPECT_DOUBLE_EQ(res.R, 9.0);
  for (const auto& r : res.records) {
    if (r.u > res.R) EXPECT_EQ(r.empirical, 0.0);  // beyond the almost-sure range
    EXPECT_EQ(r.vacuous, r.bound >= 1.0);
  }
}

TEST(MonteCarlo, HilbertNormFitIsStable) {
  auto cfg = tiny();
  cfg.extra = {{"trials", 2000}};
  const auto res = sml::hilbert_norm_mc(cfg);
  EXPECT_NEAR(res.a_l1, 1.0 / (1.0 - 0.8), 1e-9);
  EXPECT_NEAR(res.ka_l1, 1.0 / (0.2 * 0.2), 1e-8);
  EXPECT_LE(res.stability, 2.0);
}

TEST(EigenvalueSums, MatchBruteForceLattice) {
  const auto m = sml::ManifoldModel::torus(3);
  const auto mu = oracle::lattice_eigenvalues(3, 1, 1.0, 14);
  for (double t : {0.5, 0.1}) {
    const auto rec = sml::eigenvalue_sums(m, t);
    auto two = [t](double, double u) { return std::exp(-u * t) / std::pow(1.0 - std::exp(-u * t), 2); };
    const double s1 = oracle::spectral_sum(mu, [t](double, double u) { return std::exp(-u * t) / (1.0 - std::exp(-u * t)); });
    const double s2 = oracle::spectral_sum(mu, two);
    const double s3 = oracle::spectral_sum(mu, [&](double j, double u) { return j * two(j, u); });
    EXPECT_NEAR(rec.s1 / s1, 1.0, 1e-10) << "t=" << t;
    EXPECT_NEAR(rec.s2 / s2, 1.0, 1e-10) << "t=" << t;
    EXPECT_NEAR(rec.s3 / s3, 1.0, 1e-10) << "t=" << t;
  }
}

TEST(EigenvalueSums, FirstSumDecreasesInT) {
  const auto res = sml::eigenvalue_sum_check(sml::ManifoldModel::torus(3), {0.5, 0.1, 0.05, 0.02});
  EXPECT_TRUE(res.s1_decreasing);
}

TEST(Seeds, ReplicateSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (sml::Index n : {100, 200}) {
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t r = 0; r < 10; ++r) seen.insert(sml::replicate_seed(1, n, t, r));
    }
  }
  EXPECT_EQ(seen.size(), 60u);
}
