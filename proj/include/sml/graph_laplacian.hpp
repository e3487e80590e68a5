#pragma once

#include <cmath>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "kernels.hpp"
#include "spectral.hpp"

namespace sml {

/// Pairwise (cascade) summation; the result does not depend on how callers
/// partition the work.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// L = (D - W) / t for a kernel matrix that already carries the 1/n factor.
struct GraphLaplacian {
  Matrix matrix;
  KernelSpec spec;
  Vector degree;  // diagonal of D

  Index size() const { return matrix.rows(); }
};

inline Vector degrees(const Matrix& W) {
  Vector deg(W.rows());
  for (Index i = 0; i < W.rows(); ++i) {
    deg(i) = pairwise_sum(std::span<const double>(W.col(i).data(), static_cast<std::size_t>(W.rows())));
  }
  return deg;
}

inline GraphLaplacian build_laplacian(const KernelMatrix& W) {
  const Index n = W.size();
  if (W.entries.cols() != n) throw std::invalid_argument("kernel matrix must be square");
  GraphLaplacian L;
  L.spec = W.spec;
  L.degree = degrees(W.entries);
  L.matrix = -W.entries / W.spec.t;
  L.matrix.diagonal() += L.degree / W.spec.t;
  return L;
}

/// u^T L u
inline double dirichlet_form(const GraphLaplacian& L, const Vector& u) {
  if (u.size() != L.size()) throw std::invalid_argument("vector length must match the Laplacian");
  return u.dot(L.matrix * u);
}

/// (1 / 2t) sum_ij W_ij (u_i - u_j)^2, evaluated directly from the kernel.
inline double dirichlet_form_pairwise(const KernelMatrix& W, const Vector& u) {
  const Index n = W.size();
  if (u.size() != n) throw std::invalid_argument("vector length must match the kernel");
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n * n));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double diff = u(i) - u(j);
      terms.push_back(W.entries(i, j) * diff * diff);
    }
  }
  return pairwise_sum(terms) / (2.0 * W.spec.t);
}

struct DiffusionCoordinates {
  Matrix coordinates;  // n x j
  Vector eigenvalues;
};

/// First j eigenvectors of L in ascending eigenvalue order.
///
/// With `weight_power > 0`, column k is multiplied by lambda_k^weight_power;
/// that reweighting has no accompanying theory and is off by default.
inline DiffusionCoordinates diffusion_coordinates(const GraphLaplacian& L, Index j,
                                                  double weight_power = 0.0) {
  if (j < 1 || j > L.size()) throw std::invalid_argument("coordinate count must lie in [1, n]");
  const SpectralDecomposition dec = eigh_lowest(L.matrix, j);
  DiffusionCoordinates out{dec.eigenvectors, dec.eigenvalues};
  if (weight_power > 0.0) {
    for (Index k = 0; k < j; ++k) {
      out.coordinates.col(k) *= std::pow(std::max(0.0, out.eigenvalues(k)), weight_power);
    }
  }
  return out;
}

/// I - D^{-1} W (not symmetric).
inline Matrix random_walk_laplacian(const KernelMatrix& W) {
  const Vector deg = degrees(W.entries);
  Matrix out = -(deg.cwiseInverse().asDiagonal() * W.entries);
  out.diagonal().array() += 1.0;
  return out;
}

/// Connected components of the graph with an edge wherever W_ij > 0.
inline int support_components(const Matrix& W) {
  const Index n = W.rows();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int count = 0;
  for (Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    std::queue<Index> q;
    q.push(s);
    label[static_cast<std::size_t>(s)] = count;
    while (!q.empty()) {
      const Index i = q.front();
      q.pop();
      for (Index k = 0; k < n; ++k) {
        if (W(i, k) > 0.0 && label[static_cast<std::size_t>(k)] < 0) {
          label[static_cast<std::size_t>(k)] = count;
          q.push(k);
        }
      }
    }
    ++count;
  }
  return count;
}

}  // namespace sml
