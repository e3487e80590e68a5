#pragma once

// Independent reference computations used by the unit tests. None of these
// call into the code under test beyond plain data types.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

/// Periodic heat kernel on a circle of length L by the method of images.
inline double circle_heat_images(double x, double y, double t, double L) {
  double s = 0.0;
  const double diff = x - y;
  for (int m = -60; m <= 60; ++m) {
    const double z = diff + m * L;
    s += std::exp(-z * z / (4.0 * t));
  }
  return s / std::sqrt(4.0 * kPi * t);
}

/// Heat kernel on the flat torus [0, L)^d as a product of circle kernels.
inline double torus_heat_images(const std::vector<double>& x, const std::vector<double>& y, double t, double L) {
  double p = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) p *= circle_heat_images(x[k], y[k], t, L);
  return p;
}

/// Shortest arc length between two points of a circle of length L.
inline double arc(double x, double y, double L) {
  double d = std::fmod(std::abs(x - y), L);
  return std::min(d, L - d);
}

/// Eigenvalues of -d^2/dx^2 on a periodic grid of M points over [0, L),
/// from a dense second-difference matrix (Eigen's own solver).
inline Eigen::VectorXd finite_difference_circle(int M, double L) {
  const double h = L / M;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    A(i, i) = 2.0 / (h * h);
    A(i, (i + 1) % M) = -1.0 / (h * h);
    A(i, (i + M - 1) % M) = -1.0 / (h * h);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Laplacian eigenvalues of m disjoint flat tori [0, L)^d by enumerating a
/// box of frequency vectors, sorted ascending.
inline std::vector<double> lattice_eigenvalues(int d, int m, double L, int radius) {
  std::vector<double> out;
  std::vector<int> k(static_cast<std::size_t>(d), -radius);
  const double rate = std::pow(2.0 * kPi / L, 2);
  for (;;) {
    long s = 0;
    for (int v : k) s += static_cast<long>(v) * v;
    if (s <= static_cast<long>(radius) * radius) {
      for (int c = 0; c < m; ++c) out.push_back(rate * static_cast<double>(s));
    }
    std::size_t pos = 0;
    while (pos < k.size() && ++k[pos] > radius) k[pos++] = -radius;
    if (pos == k.size()) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Direct summation of sum_{mu > 0} w(mu) over the lattice box, where the
/// caller supplies the ascending eigenvalue list (index = position + 1).
template <class F>
double spectral_sum(const std::vector<double>& mu, F&& term) {
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (mu[j] > 0.0) s += term(static_cast<double>(j + 1), mu[j]);
  }
  return s;
}

/// Least-squares slope and intercept by the normal equations.
inline std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
  Eigen::MatrixXd X(x.size(), 2);
  Eigen::VectorXd Y(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = x[i];
    Y(static_cast<Eigen::Index>(i)) = y[i];
  }
  const Eigen::Vector2d beta = (X.transpose() * X).ldlt().solve(X.transpose() * Y);
  return {beta(1), beta(0)};
}

/// Procrustes distance between two n x 2 frames by scanning rotations and
/// reflections on a fine angle grid, then refining with golden sections.
inline double procrustes_2col(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  auto cost = [&](double th, double refl) {
    Eigen::Matrix2d O;
    O << std::cos(th), -refl * std::sin(th), std::sin(th), refl * std::cos(th);
    return (A - B * O).norm();
  };
  double best = INFINITY;
  for (double refl : {1.0, -1.0}) {
    const int grid = 3600;
    int arg = 0;
    double val = INFINITY;
    for (int k = 0; k < grid; ++k) {
      const double c = cost(2.0 * kPi * k / grid, refl);
      if (c < val) {
        val = c;
        arg = k;
      }
    }
    double lo = 2.0 * kPi * (arg - 1) / grid, hi = 2.0 * kPi * (arg + 1) / grid;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
      const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
      if (cost(a, refl) < cost(b, refl)) hi = b; else lo = a;
    }
    best = std::min({best, val, cost(0.5 * (lo + hi), refl)});
  }
  return best;
}

/// Sorted eigenvalues from Eigen's solver: a second route next to LAPACK.
inline Eigen::VectorXd eigen_eigenvalues(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace oracle
