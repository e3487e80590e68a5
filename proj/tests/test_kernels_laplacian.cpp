#include <gtest/gtest.h>

#include <random>

#include <sml/graph_laplacian.hpp>
#include <sml/kernels.hpp>
#include <sml/perturbation.hpp>

#include "oracles.hpp"

using sml::KernelKind;
using sml::ManifoldModel;

TEST(Kernels, GaussianEntriesFollowClosedForm) {
  const auto m = ManifoldModel::torus(2);
  const auto cloud = m.sample_uniform(40, 2);
  const double t = 0.03;
  const auto W = sml::gaussian_matrix(cloud, {KernelKind::Gaussian, t, 2});
  for (sml::Index i = 0; i < 40; i += 7) {
    for (sml::Index j = 0; j < 40; j += 5) {
      const double d2 = (cloud.ambient.row(i) - cloud.ambient.row(j)).squaredNorm();
      const double want = std::exp(-d2 / (4.0 * t)) / (4.0 * oracle::kPi * t) / 40.0;
      EXPECT_NEAR(W.entries(i, j), want, 1e-15 * std::max(1.0, want));
    }
  }
  EXPECT_EQ(W.entries, W.entries.transpose());
}

TEST(Kernels, HeatMatrixMatchesImages) {
  const auto m = ManifoldModel::circle();
  const auto cloud = m.sample_uniform(30, 4);
  const double t = 0.02;
  const auto K = sml::heat_matrix(m, cloud, {KernelKind::Heat, t, 1});
  for (sml::Index i = 0; i < 30; ++i) {
    for (sml::Index j = 0; j < 30; ++j) {
      const double want = oracle::circle_heat_images(cloud.intrinsic(i, 0), cloud.intrinsic(j, 0), t, 1.0) / 30.0;
      EXPECT_NEAR(K.entries(i, j), want, 1e-10);
    }
  }
}

TEST(Kernels, GeodesicKernelVanishesAcrossComponents) {
  const auto m = ManifoldModel::two_circles();
  const auto cloud = m.sample_uniform(40, 6);
  const auto W = sml::geodesic_matrix(m, cloud, {KernelKind::Geodesic, 0.01, 1});
  for (sml::Index i = 0; i < 40; ++i) {
    for (sml::Index j = 0; j < 40; ++j) {
      if (cloud.component[static_cast<std::size_t>(i)] != cloud.component[static_cast<std::size_t>(j)]) {
        EXPECT_EQ(W.entries(i, j), 0.0);
      } else {
        const double a = oracle::arc(cloud.intrinsic(i, 0), cloud.intrinsic(j, 0), 0.5);
        EXPECT_NEAR(W.entries(i, j), std::exp(-a * a / 0.04) / std::sqrt(0.04 * oracle::kPi) / 40.0, 1e-14);
      }
    }
  }
  EXPECT_EQ(sml::support_components(W.entries), 2);
}

TEST(Kernels, InvalidTimeRejected) {
  const auto cloud = ManifoldModel::circle().sample_uniform(5, 1);
  EXPECT_THROW(sml::gaussian_matrix(cloud, {KernelKind::Gaussian, 0.0, 1}), std::invalid_argument);
  EXPECT_THROW(sml::gaussian_matrix(cloud, {KernelKind::Gaussian, 1.5, 1}), std::invalid_argument);
}

TEST(Kernels, ResidualScanIsConsistentWithDirectComparison) {
  const auto m = ManifoldModel::circle();
  const auto cloud = m.sample_uniform(80, 9);
  const double t = 0.02;
  const auto scan = sml::kernel_residual_scan(m, cloud, t, 4);
  double worst = 0.0;
  for (sml::Index i = 0; i < 80; ++i) {
    for (sml::Index j = 0; j <= i; ++j) {
      const double d2 = (cloud.ambient.row(i) - cloud.ambient.row(j)).squaredNorm();
      const double g = std::exp(-d2 / (4.0 * t)) / std::sqrt(4.0 * oracle::kPi * t);
      const double h = oracle::circle_heat_images(cloud.intrinsic(i, 0), cloud.intrinsic(j, 0), t, 1.0);
      worst = std::max(worst, std::abs(h - g));
    }
  }
  EXPECT_NEAR(scan.max_residual, worst, 1e-8 * std::max(1.0, worst));
  EXPECT_GT(scan.pairs_above_floor, 0u);
  EXPECT_GE(scan.c_hat, 0.0);
  EXPECT_TRUE(std::isfinite(scan.c_hat));
}

TEST(Kernels, CrossResidualIsGaussianTailAcrossGap) {
  const auto m = ManifoldModel::two_circles();
  const auto cloud = m.sample_uniform(60, 3);
  const double t = 0.05;
  const auto scan = sml::kernel_residual_scan(m, cloud, t, 4);
  // The heat kernel vanishes across components, so the cross residual is the
  // Gaussian value at distance at least the gap.
  const double ceiling = std::exp(-m.separation() * m.separation() / (4.0 * t)) / std::sqrt(4.0 * oracle::kPi * t);
  EXPECT_LE(scan.max_cross_residual, ceiling);
  EXPECT_GT(scan.max_cross_residual, 0.0);
}

TEST(GraphLaplacian, DirichletFormIdentity) {
  std::mt19937_64 rng(1);
  const auto m = ManifoldModel::circle();
  for (int trial = 0; trial < 10; ++trial) {
    const auto cloud = m.sample_uniform(50 + 10 * trial, 100 + trial);
    const auto W = sml::gaussian_matrix(cloud, {KernelKind::Gaussian, 0.01 + 0.01 * trial, 1});
    const auto L = sml::build_laplacian(W);
    const sml::Vector u = sml::standard_normal(cloud.size(), 1, rng).col(0);
    const double a = sml::dirichlet_form(L, u);
    const double b = sml::dirichlet_form_pairwise(W, u);
    EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a) + 1e-12);
  }
}

TEST(GraphLaplacian, ConstantsInKernelAndLeadingEigenpair) {
  const auto m = ManifoldModel::circle();
  const auto cloud = m.sample_uniform(200, 8);
  const auto L = sml::build_laplacian(sml::gaussian_matrix(cloud, {KernelKind::Gaussian, 0.01, 1}));
  const sml::Vector ones = sml::Vector::Ones(200);
  EXPECT_LE((L.matrix * ones).cwiseAbs().maxCoeff(), 1e-10 * sml::operator_norm(L.matrix));
  const auto dec = sml::eigh_lowest(L.matrix, 2);
  EXPECT_LE(std::abs(dec.eigenvalues(0)), 1e-10 * sml::operator_norm(L.matrix));
  EXPECT_NEAR(std::abs(dec.eigenvectors.col(0).dot(ones)) / std::sqrt(200.0), 1.0, 1e-8);
  EXPECT_GT(dec.eigenvalues(1), 0.0);
}

TEST(GraphLaplacian, PairwiseSumIsOrderIndependent) {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0, 3.0, 2.0, 1e-3, 7.0, 5.0, 4.0};
  const double s = sml::pairwise_sum(v);
  EXPECT_DOUBLE_EQ(s, sml::pairwise_sum(v));
  std::vector<double> small(1000, 0.1);
  EXPECT_NEAR(sml::pairwise_sum(small), 100.0, 1e-12);
}

TEST(GraphLaplacian, RandomWalkRowsSumToZero) {
  const auto cloud = ManifoldModel::circle().sample_uniform(30, 2);
  const auto P = sml::random_walk_laplacian(sml::gaussian_matrix(cloud, {KernelKind::Gaussian, 0.05, 1}));
  EXPECT_LE(P.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GraphLaplacian, DiffusionCoordinatesShapeAndWeighting) {
  const auto cloud = ManifoldModel::circle().sample_uniform(60, 2);
  const auto L = sml::build_laplacian(sml::gaussian_matrix(cloud, {KernelKind::Gaussian, 0.02, 1}));
  const auto plain = sml::diffusion_coordinates(L, 3);
  EXPECT_EQ(plain.coordinates.cols(), 3);
  const auto weighted = sml::diffusion_coordinates(L, 3, 1.0);
  EXPECT_NEAR(weighted.coordinates.col(2).norm(), plain.eigenvalues(2), 1e-10);
  EXPECT_THROW(sml::diffusion_coordinates(L, 0), std::invalid_argument);
}

TEST(GraphLaplacian, SupportComponentsOfBlockMatrix) {
  sml::Matrix W = sml::Matrix::Zero(5, 5);
  W(0, 1) = W(1, 0) = 1.0;
  W(2, 3) = W(3, 2) = 1.0;
  EXPECT_EQ(sml::support_components(W), 3);
}

TEST(Kernels, GaussianDiagonalIsPrefactor) {
  const auto cloud = ManifoldModel::torus(1).sample_uniform(1, 1);
  const auto W = sml::gaussian_matrix(cloud, {KernelKind::Gaussian, 1.0 / (4.0 * oracle::kPi), 2});
  EXPECT_NEAR(W.entries(0, 0), 1.0, 1e-15);
}
