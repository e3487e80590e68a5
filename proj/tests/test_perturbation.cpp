#include <gtest/gtest.h>

#include <random>

#include <sml/perturbation.hpp>

#include "oracles.hpp"

using sml::Matrix;
using sml::Order;
using sml::Vector;

namespace {

// Gap-weighted norm computed straight from the definition with Eigen's solver.
double delta_oracle(const Matrix& A, const Matrix& E, sml::Index j) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  const sml::Index n = A.rows();
  const Vector lam = es.eigenvalues().reverse();
  const Matrix V = es.eigenvectors().rowwise().reverse();
  const double gap = lam(j - 1) - lam(j);
  Vector w(n);
  for (sml::Index k = 0; k < n; ++k) w(k) = k < j ? 1.0 / gap : 1.0 / (lam(j - 1) - lam(k));
  const Matrix s = w.cwiseSqrt().asDiagonal();
  const Matrix M = s * V.transpose() * E * V * s;
  return oracle::eigen_eigenvalues(0.5 * (M + M.transpose())).cwiseAbs().maxCoeff();
}

Matrix sym(std::mt19937_64& rng, sml::Index n, double scale) { return sml::random_perturbation(n, scale, rng); }

sml::SuiteOptions small_suite(std::size_t instances = 300) {
  sml::SuiteOptions o;
  o.instances = instances;
  o.max_dim = 20;
  return o;
}

}  // namespace

TEST(Perturbation, DeltaForTwoByTwoIsNormOverGap) {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1.0;
  Matrix E(2, 2);
  E << 0.01, 0.02, 0.02, -0.03;
  const double norm = oracle::eigen_eigenvalues(E).cwiseAbs().maxCoeff();
  EXPECT_NEAR(sml::delta_leq_j(A, E, 1, Order::Descending), norm, 1e-15);
}

TEST(Perturbation, DeltaMatchesDefinition) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const Matrix A = sml::goe(12, rng);
    const Matrix E = sym(rng, 12, 0.1);
    for (sml::Index j : {1, 3, 6}) {
      EXPECT_NEAR(sml::delta_leq_j(A, E, j, Order::Descending), delta_oracle(A, E, j), 1e-10);
    }
  }
}

TEST(Perturbation, AscendingIsDescendingOfNegation) {
  std::mt19937_64 rng(6);
  const Matrix A = sml::goe(10, rng);
  const Matrix E = sym(rng, 10, 0.2);
  EXPECT_NEAR(sml::delta_leq_j(A, E, 3, Order::Ascending), sml::delta_leq_j(-A, -E, 3, Order::Descending), 1e-13);
}

TEST(Perturbation, DegenerateGapThrows) {
  Matrix A = Matrix::Identity(4, 4);
  EXPECT_THROW(sml::delta_leq_j(A, Matrix::Zero(4, 4), 2, Order::Descending), sml::GapTooSmall);
  EXPECT_THROW(sml::delta_leq_j(A, Matrix::Zero(4, 4), 0, Order::Descending), std::invalid_argument);
}

TEST(Perturbation, DavisKahanRotationExample) {
  // A = diag(1, 0), B = R diag(1, 0) R^T: the projector distance is sqrt(2) sin(theta).
  const double th = 0.05;
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1.0;
  Matrix R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Matrix B = R * A * R.transpose();
  const auto r = sml::check_absolute_dk(A, B, 1, Order::Descending);
  EXPECT_NEAR(r.observed, std::sqrt(2.0) * std::sin(th), 1e-14);
  EXPECT_TRUE(r.pass);
}

TEST(Perturbation, WeylOnDiagonalShift) {
  Matrix A = Matrix::Zero(3, 3);
  A.diagonal() << 1.0, 2.0, 3.0;
  const Matrix B = A + 0.5 * Matrix::Identity(3, 3);
  for (const auto& r : sml::check_absolute_weyl(A, B)) {
    EXPECT_NEAR(r.observed, 0.5, 1e-15);
    EXPECT_NEAR(r.bound_value, 0.5, 1e-15);
    EXPECT_TRUE(r.pass);
  }
}

TEST(Perturbation, RelativeWeylNeedsSmallRelativePerturbation) {
  // ||A^{-1/2} E A^{-1/2}|| = 10 here and the bound fails; the suite only
  // draws perturbations with ||E|| <= lambda_min(A).
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << 1e-4, 1.0;
  Matrix E(2, 2);
  E << 0.0, 0.1, 0.1, 0.0;
  const auto r = sml::check_relative_weyl_pd(A, A + E, 1);
  EXPECT_NEAR(r.bound_value, 1e-4 * 10.0, 1e-12);
  EXPECT_FALSE(r.pass);
  const auto ok = sml::check_relative_weyl_pd(A, A + 1e-5 * E, 1);
  EXPECT_TRUE(ok.pass);
}

TEST(Perturbation, RelativeWeylRequiresPositiveDefinite) {
  Matrix A = Matrix::Identity(2, 2);
  A(1, 1) = -1.0;
  EXPECT_THROW(sml::check_relative_weyl_pd(A, A), sml::NotPositiveDefinite);
}

TEST(Perturbation, RefinedBoundSkippedWhenDeltaLarge) {
  Matrix A = Matrix::Zero(3, 3);
  A.diagonal() << 1.0, 1.0, 0.0;
  const Matrix B = A + Matrix::Ones(3, 3);
  const auto r = sml::check_refined_relative_dk(A, B, 2, Order::Descending);
  EXPECT_TRUE(r.skipped);
}

TEST(Perturbation, ProcrustesBelowProjectorDistance) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const Matrix U = sml::random_orthonormal(15, 3, rng);
    const Matrix W = sml::random_orthonormal(15, 3, rng);
    EXPECT_TRUE(sml::check_procrustes_projector(U, W).pass);
  }
}

TEST(Perturbation, GeneratorsHaveStatedProperties) {
  std::mt19937_64 rng(10);
  const Matrix Q = sml::haar_orthogonal(8, rng);
  EXPECT_LE((Q.transpose() * Q - Matrix::Identity(8, 8)).norm(), 1e-13);
  const Matrix E = sml::random_perturbation(9, 0.37, rng);
  EXPECT_NEAR(oracle::eigen_eigenvalues(E).cwiseAbs().maxCoeff(), 0.37, 1e-13);
  Vector spec(4);
  spec << 4.0, 3.0, 2.0, 1.0;
  const Matrix A = sml::with_spectrum(spec, rng);
  EXPECT_NEAR(oracle::eigen_eigenvalues(A)(3), 4.0, 1e-13);
}

TEST(Perturbation, SmallSuitesHaveNoViolations) {
  const auto o = small_suite();
  for (const auto& s : {sml::suite_absolute_weyl(o), sml::suite_absolute_dk(o), sml::suite_relative_dk(o),
                        sml::suite_refined_relative_dk(o), sml::suite_delta_bounds(o), sml::suite_relative_weyl_pd(o),
                        sml::suite_nullspace_relative_weyl(o), sml::suite_procrustes(o)}) {
    EXPECT_EQ(s.violations, 0u) << s.name;
    EXPECT_GT(s.checks, 0u) << s.name;
  }
}

TEST(Perturbation, SuitesAreScheduleIndependent) {
  auto a = small_suite(120);
  auto b = a;
  b.threads = 3;
  const auto ra = sml::suite_relative_dk(a), rb = sml::suite_relative_dk(b);
  EXPECT_EQ(ra.checks, rb.checks);
  EXPECT_EQ(ra.max_ratio, rb.max_ratio);
}
