#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace sml {

using Index = Eigen::Index;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ManifoldKind { Circle, Torus, TwoCircles };

inline std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Torus: return "torus";
    case ManifoldKind::TwoCircles: return "two_circles";
  }
  return "unknown";
}

/// Which member of a cosine/sine pair an eigenfunction is.
enum class Trig { Constant, Cos, Sin };

/// One Laplace-Beltrami eigenfunction of an analytic manifold.
///
/// The function is supported on `component` and equals
/// `vol^{-1/2}` (Constant) or `sqrt(2/vol) * cos|sin(2 pi <k, x> / L)` there,
/// where `L` is the side length of the component's flat coordinate cell and
/// `vol = L^d`.
struct Mode {
  int component = 0;
  std::vector<int> frequency;
  Trig trig = Trig::Constant;
  std::int64_t shell = 0;  // |k|^2
  double mu = 0.0;
};

/// Intrinsic coordinates of a point together with its component.
struct PointView {
  int component = 0;
  std::span<const double> coords;
};

/// Sampled points with ambient and intrinsic coordinates.
struct PointCloud {
  RowMatrix ambient;    // n x p
  RowMatrix intrinsic;  // n x d, flat cell coordinates in [0, L)
  std::vector<int> component;
  std::uint64_t seed = 0;

  Index size() const { return ambient.rows(); }

  PointView point(Index i) const {
    return {component[static_cast<std::size_t>(i)],
            std::span<const double>(intrinsic.row(i).data(),
                                    static_cast<std::size_t>(intrinsic.cols()))};
  }
};

/// Mercer truncation: the first `terms` eigenpairs (always whole multiplicity
/// shells) leave `tail_mass = sum_{j > terms} exp(-mu_j t)` below epsilon.
struct Truncation {
  std::size_t terms = 0;
  std::int64_t max_shell = 0;
  double tail_mass = 0.0;
};

struct HeatKernelOptions {
  double epsilon = 1e-10;
  std::size_t max_terms = 1'000'000;
};

/// Incremental generator of the lattice shell counts
/// r_d(s) = #{k in Z^d : |k|^2 = s}, s = 0, 1, 2, ...
class LatticeShells {
 public:
  explicit LatticeShells(int d) : tables_(static_cast<std::size_t>(d) + 1) {}

  /// Count for the next shell; the first call returns r_d(0) = 1.
  std::int64_t next() {
    const auto s = static_cast<std::int64_t>(tables_[0].size());
    tables_[0].push_back(s == 0 ? 1 : 0);
    for (std::size_t k = 1; k < tables_.size(); ++k) {
      std::int64_t count = 0;
      for (std::int64_t q = 0; q * q <= s; ++q) {
        count += (q == 0 ? 1 : 2) * tables_[k - 1][static_cast<std::size_t>(s - q * q)];
      }
      tables_[k].push_back(count);
    }
    return tables_.back().back();
  }

 private:
  std::vector<std::vector<std::int64_t>> tables_;
};

/// Truncated heat-kernel series for one (t, epsilon), reusable across pairs.
///
/// Stores the lattice ball |k|^2 <= max_shell folded onto nonnegative index
/// vectors with weight 2^{#nonzero} exp(-a |k|^2), so that
/// k_t(x, y) = vol^{-1} sum_k w_k prod_i cos(2 pi k_i (x_i - y_i) / L).
class HeatSeries {
 public:
  HeatSeries(int d, double side, double volume, double shell_rate, Truncation trunc)
      : d_(d), side_(side), inv_volume_(1.0 / volume), truncation_(trunc) {
    max_index_ = static_cast<int>(std::floor(std::sqrt(static_cast<double>(trunc.max_shell))));
    while (static_cast<std::int64_t>(max_index_ + 1) * (max_index_ + 1) <= trunc.max_shell) {
      ++max_index_;
    }
    std::vector<int> k(static_cast<std::size_t>(d_), 0);
    collect(0, 0, k, shell_rate);
  }

  const Truncation& truncation() const { return truncation_; }

  /// Series value for two points on the same component; the caller handles
  /// the cross-component zero.
  double same_component(std::span<const double> x, std::span<const double> y) const {
    thread_local std::vector<double> table;
    const auto stride = static_cast<std::size_t>(max_index_) + 1;
    table.assign(stride * static_cast<std::size_t>(d_), 0.0);
    for (int i = 0; i < d_; ++i) {
      double* c = table.data() + stride * static_cast<std::size_t>(i);
      const double theta = 2.0 * std::numbers::pi * (x[i] - y[i]) / side_;
      c[0] = 1.0;
      if (max_index_ >= 1) c[1] = std::cos(theta);
      for (int q = 2; q <= max_index_; ++q) {
        c[q] = 2.0 * c[1] * c[q - 1] - c[q - 2];
      }
    }
    double sum = 0.0;
    for (std::size_t e = 0; e < weights_.size(); ++e) {
      double term = weights_[e];
      const int* idx = indices_.data() + e * static_cast<std::size_t>(d_);
      for (int i = 0; i < d_; ++i) {
        term *= table[stride * static_cast<std::size_t>(i) + static_cast<std::size_t>(idx[i])];
      }
      sum += term;
    }
    return sum * inv_volume_;
  }

  double operator()(const PointView& x, const PointView& y) const {
    if (x.component != y.component) return 0.0;
    return same_component(x.coords, y.coords);
  }

 private:
  void collect(int dim, std::int64_t norm2, std::vector<int>& k, double rate) {
    if (dim == d_) {
      int nonzero = 0;
      for (int v : k) nonzero += v != 0;
      weights_.push_back(std::ldexp(std::exp(-rate * static_cast<double>(norm2)), nonzero));
      indices_.insert(indices_.end(), k.begin(), k.end());
      return;
    }
    for (int q = 0; norm2 + static_cast<std::int64_t>(q) * q <= truncation_.max_shell; ++q) {
      k[static_cast<std::size_t>(dim)] = q;
      collect(dim + 1, norm2 + static_cast<std::int64_t>(q) * q, k, rate);
    }
    k[static_cast<std::size_t>(dim)] = 0;
  }

  int d_;
  double side_;
  double inv_volume_;
  Truncation truncation_;
  int max_index_ = 0;
  std::vector<double> weights_;
  std::vector<int> indices_;
};

/// Closed manifold of unit volume with an exactly known Laplace-Beltrami
/// spectrum.
///
/// Every family is a disjoint union of flat tori (T^d with side L) embedded
/// isometrically as products of round circles of radius L / (2 pi):
///   - Circle: one circle of circumference 1 in R^2,
///   - Torus(d): the flat torus [0,1)^d embedded in R^{2d},
///   - TwoCircles: two circles of circumference 1/2 in R^2 whose closest
///     points are `separation` apart.
///
/// Eigenpairs are indexed from 1 and ordered by shell |k|^2. Inside a shell
/// the order is component first, then the frequency representatives (first
/// nonzero entry positive) in ascending lexicographic order, cosine before
/// sine.
class ManifoldModel {
 public:
  static constexpr double kDefaultSeparation = 2.0;

  static ManifoldModel circle() { return ManifoldModel(ManifoldKind::Circle, 1, 1, 0.0); }

  static ManifoldModel torus(int d) {
    if (d < 1) throw std::invalid_argument("torus dimension must be >= 1");
    return ManifoldModel(ManifoldKind::Torus, d, 1, 0.0);
  }

  static ManifoldModel two_circles(double separation = kDefaultSeparation) {
    if (!(separation > 0.0)) throw std::invalid_argument("separation must be positive");
    return ManifoldModel(ManifoldKind::TwoCircles, 1, 2, separation);
  }

  ManifoldKind kind() const { return kind_; }
  int dim() const { return d_; }
  int ambient_dim() const { return 2 * d_; }
  int components() const { return m_; }
  double separation() const { return separation_; }

  /// Side length L of each component's coordinate cell.
  double side() const { return 1.0 / static_cast<double>(m_); }
  double radius() const { return side() / (2.0 * std::numbers::pi); }
  double component_volume() const { return std::pow(side(), d_); }
  std::vector<double> component_volumes() const {
    return std::vector<double>(static_cast<std::size_t>(m_), component_volume());
  }

  /// mu = shell_rate() * |k|^2.
  double shell_rate() const {
    const double w = 2.0 * std::numbers::pi / side();
    return w * w;
  }

  std::string name() const {
    if (kind_ == ManifoldKind::Torus) return "torus" + std::to_string(d_);
    return to_string(kind_);
  }

  /// Center of component c in the ambient space.
  std::vector<double> center(int c) const {
    std::vector<double> out(static_cast<std::size_t>(ambient_dim()), 0.0);
    if (kind_ == ManifoldKind::TwoCircles && c == 1) out[0] = 2.0 * radius() + separation_;
    return out;
  }

  // ---- spectrum -----------------------------------------------------------

  /// j-th eigenvalue (1-based, multiplicities counted).
  double eigenvalue(std::size_t j) const { return shell_rate() * static_cast<double>(shell_of(j)); }

  /// First `count` eigenvalues in nondecreasing order.
  std::vector<double> eigenvalues(std::size_t count) const {
    std::vector<double> out;
    out.reserve(count);
    LatticeShells shells(d_);
    for (std::int64_t s = 0; out.size() < count; ++s) {
      const std::int64_t mult = static_cast<std::int64_t>(m_) * shells.next();
      for (std::int64_t i = 0; i < mult && out.size() < count; ++i) {
        out.push_back(shell_rate() * static_cast<double>(s));
      }
    }
    return out;
  }

  /// Descriptor of the j-th eigenfunction (1-based).
  Mode mode(std::size_t j) const {
    if (j == 0) throw std::invalid_argument("eigen index is 1-based");
    LatticeShells shells(d_);
    std::size_t before = 0;
    for (std::int64_t s = 0;; ++s) {
      const auto per_component = static_cast<std::size_t>(shells.next());
      const std::size_t mult = per_component * static_cast<std::size_t>(m_);
      if (j <= before + mult) {
        const std::size_t offset = j - before - 1;
        Mode mode;
        mode.shell = s;
        mode.mu = shell_rate() * static_cast<double>(s);
        mode.component = static_cast<int>(offset / per_component);
        const std::size_t within = offset % per_component;
        if (s == 0) {
          mode.frequency.assign(static_cast<std::size_t>(d_), 0);
          mode.trig = Trig::Constant;
        } else {
          mode.frequency = shell_representatives(s)[within / 2];
          mode.trig = within % 2 == 0 ? Trig::Cos : Trig::Sin;
        }
        return mode;
      }
      before += mult;
    }
  }

  /// First `count` eigenfunction descriptors.
  std::vector<Mode> modes(std::size_t count) const {
    std::vector<Mode> out;
    out.reserve(count);
    LatticeShells shells(d_);
    for (std::int64_t s = 0; out.size() < count; ++s) {
      shells.next();
      const double mu = shell_rate() * static_cast<double>(s);
      if (s == 0) {
        for (int c = 0; c < m_ && out.size() < count; ++c) {
          out.push_back({c, std::vector<int>(static_cast<std::size_t>(d_), 0), Trig::Constant, 0, 0.0});
        }
        continue;
      }
      const auto reps = shell_representatives(s);
      for (int c = 0; c < m_; ++c) {
        for (const auto& k : reps) {
          for (Trig trig : {Trig::Cos, Trig::Sin}) {
            if (out.size() == count) return out;
            out.push_back({c, k, trig, s, mu});
          }
        }
      }
    }
    return out;
  }

  /// Value of an eigenfunction at a point.
  double evaluate(const Mode& mode, const PointView& x) const {
    if (x.component != mode.component) return 0.0;
    const double norm = 1.0 / std::sqrt(component_volume());
    if (mode.trig == Trig::Constant) return norm;
    double phase = 0.0;
    for (int i = 0; i < d_; ++i) {
      phase += static_cast<double>(mode.frequency[static_cast<std::size_t>(i)]) * x.coords[static_cast<std::size_t>(i)];
    }
    phase *= 2.0 * std::numbers::pi / side();
    const double trig = mode.trig == Trig::Cos ? std::cos(phase) : std::sin(phase);
    return std::numbers::sqrt2 * norm * trig;
  }

  double eigenfunction(std::size_t j, const PointView& x) const { return evaluate(mode(j), x); }

  // ---- geometry -----------------------------------------------------------

  /// Intrinsic distance; +infinity across components.
  double geodesic_distance(const PointView& x, const PointView& y) const {
    if (x.component != y.component) return std::numeric_limits<double>::infinity();
    const double L = side();
    double sum = 0.0;
    for (int i = 0; i < d_; ++i) {
      double delta = std::fmod(std::abs(x.coords[static_cast<std::size_t>(i)] - y.coords[static_cast<std::size_t>(i)]), L);
      delta = std::min(delta, L - delta);
      sum += delta * delta;
    }
    return std::sqrt(sum);
  }

  /// Ambient coordinates of an intrinsic point.
  void embed(const PointView& x, std::span<double> out) const {
    const auto c = center(x.component);
    const double r = radius();
    for (int i = 0; i < d_; ++i) {
      const double theta = 2.0 * std::numbers::pi * x.coords[static_cast<std::size_t>(i)] / side();
      out[static_cast<std::size_t>(2 * i)] = c[static_cast<std::size_t>(2 * i)] + r * std::cos(theta);
      out[static_cast<std::size_t>(2 * i + 1)] = c[static_cast<std::size_t>(2 * i + 1)] + r * std::sin(theta);
    }
  }

  /// n i.i.d. points, uniform with respect to the volume measure.
  PointCloud sample_uniform(Index n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample size must be >= 1");
    PointCloud cloud;
    cloud.seed = seed;
    cloud.ambient.resize(n, ambient_dim());
    cloud.intrinsic.resize(n, d_);
    cloud.component.resize(static_cast<std::size_t>(n));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double L = side();
    for (Index i = 0; i < n; ++i) {
      int c = 0;
      if (m_ > 1) c = std::min(m_ - 1, static_cast<int>(unit(rng) * m_));
      cloud.component[static_cast<std::size_t>(i)] = c;
      for (int k = 0; k < d_; ++k) cloud.intrinsic(i, k) = L * unit(rng);
      embed(cloud.point(i), std::span<double>(cloud.ambient.row(i).data(),
                                              static_cast<std::size_t>(ambient_dim())));
    }
    return cloud;
  }

  // ---- heat kernel ----------------------------------------------------------

  /// Smallest whole-shell truncation whose Mercer tail is below epsilon.
  Truncation truncation(double t, const HeatKernelOptions& opts = {}) const {
    if (!(t > 0.0)) throw std::invalid_argument("heat time must be positive");
    const double rate = shell_rate() * t;
    LatticeShells shells(d_);
    std::vector<double> mass;         // per shell
    std::vector<std::int64_t> count;  // cumulative modes through shell
    std::int64_t total = 0;
    const auto hard_limit = static_cast<std::int64_t>(opts.max_terms) * 4 + 64;
    bool converged = false;
    for (std::int64_t s = 0;; ++s) {
      const std::int64_t mult = static_cast<std::int64_t>(m_) * shells.next();
      total += mult;
      mass.push_back(static_cast<double>(mult) * std::exp(-rate * static_cast<double>(s)));
      count.push_back(total);
      if (s > 0 && remainder_negligible(s, rate, opts.epsilon)) {
        converged = true;
        break;
      }
      if (total > hard_limit) break;
    }
    if (!converged) {
      // Fall back to the closed-form trace to decide whether the cap suffices.
      const double trace = total_mass(rate);
      double partial = 0.0;
      for (std::size_t s = 0; s < mass.size(); ++s) {
        partial += mass[s];
        if (count[s] > static_cast<std::int64_t>(opts.max_terms)) break;
        if (trace - partial < opts.epsilon) {
          return {static_cast<std::size_t>(count[s]), static_cast<std::int64_t>(s),
                  std::max(0.0, trace - partial)};
        }
      }
      throw TruncationBudgetExceeded("heat-kernel series needs more than " +
                                     std::to_string(opts.max_terms) + " terms at t=" +
                                     std::to_string(t));
    }
    std::vector<double> suffix(mass.size() + 1, 0.0);
    for (std::size_t s = mass.size(); s-- > 0;) suffix[s] = suffix[s + 1] + mass[s];
    for (std::size_t s = 0; s < mass.size(); ++s) {
      if (suffix[s + 1] < opts.epsilon) {
        if (count[s] > static_cast<std::int64_t>(opts.max_terms)) {
          throw TruncationBudgetExceeded("heat-kernel series needs " + std::to_string(count[s]) +
                                         " terms, cap is " + std::to_string(opts.max_terms));
        }
        return {static_cast<std::size_t>(count[s]), static_cast<std::int64_t>(s), suffix[s + 1]};
      }
    }
    throw TruncationBudgetExceeded("heat-kernel truncation did not converge");
  }

  HeatSeries heat_series(double t, const HeatKernelOptions& opts = {}) const {
    return HeatSeries(d_, side(), component_volume(), shell_rate() * t, truncation(t, opts));
  }

  /// Truncated Mercer sum sum_{j<=N} exp(-mu_j t) phi_j(x) phi_j(y).
  double heat_kernel(double t, const PointView& x, const PointView& y,
                     const HeatKernelOptions& opts = {}) const {
    if (x.component != y.component) return 0.0;
    return heat_series(t, opts)(x, y);
  }

  /// Closed-form trace sum_j exp(-mu_j t), via Poisson summation when the
  /// direct theta series converges slowly.
  double trace(double t) const { return total_mass(shell_rate() * t); }

  /// Frequency representatives of shell s (first nonzero entry positive),
  /// ascending lexicographic order.
  std::vector<std::vector<int>> shell_representatives(std::int64_t s) const {
    std::vector<std::vector<int>> out;
    std::vector<int> k(static_cast<std::size_t>(d_), 0);
    enumerate_shell(0, s, k, out);
    return out;
  }

 private:
  ManifoldModel(ManifoldKind kind, int d, int m, double separation)
      : kind_(kind), d_(d), m_(m), separation_(separation) {}

  std::int64_t shell_of(std::size_t j) const {
    if (j == 0) throw std::invalid_argument("eigen index is 1-based");
    LatticeShells shells(d_);
    std::size_t before = 0;
    for (std::int64_t s = 0;; ++s) {
      before += static_cast<std::size_t>(m_) * static_cast<std::size_t>(shells.next());
      if (j <= before) return s;
    }
  }

  // Bound on sum_{s' > s} m (2 sqrt(s') + 1)^d exp(-rate s'), valid once the
  // summand decays at least like exp(-rate/2) per shell.
  bool remainder_negligible(std::int64_t s, double rate, double eps) const {
    const double root = std::sqrt(static_cast<double>(s));
    const double decay = static_cast<double>(d_) / (root * (2.0 * root + 1.0));
    if (decay > rate / 2.0) return false;
    const double f = static_cast<double>(m_) * std::pow(2.0 * root + 1.0, d_) *
                     std::exp(-rate * static_cast<double>(s));
    const double q = std::exp(-rate / 2.0);
    return f * q / (1.0 - q) < 1e-3 * eps;
  }

  double total_mass(double rate) const {
    double theta = 0.0;
    if (rate >= 1.0) {
      theta = 1.0;
      for (int k = 1;; ++k) {
        const double term = 2.0 * std::exp(-rate * k * k);
        theta += term;
        if (term < 1e-18 * theta) break;
      }
    } else {
      const double pi2 = std::numbers::pi * std::numbers::pi;
      double series = 1.0;
      for (int k = 1;; ++k) {
        const double term = 2.0 * std::exp(-pi2 * k * k / rate);
        series += term;
        if (term < 1e-18 * series) break;
      }
      theta = std::sqrt(std::numbers::pi / rate) * series;
    }
    return static_cast<double>(m_) * std::pow(theta, d_);
  }

  void enumerate_shell(int dim, std::int64_t remaining, std::vector<int>& k,
                       std::vector<std::vector<int>>& out) const {
    if (dim == d_) {
      if (remaining != 0) return;
      for (int v : k) {
        if (v != 0) {
          if (v > 0) out.push_back(k);
          return;
        }
      }
      return;
    }
    const auto bound = static_cast<int>(std::floor(std::sqrt(static_cast<double>(remaining)) + 1e-9));
    for (int q = -bound; q <= bound; ++q) {
      const std::int64_t sq = static_cast<std::int64_t>(q) * q;
      if (sq > remaining) continue;
      k[static_cast<std::size_t>(dim)] = q;
      enumerate_shell(dim + 1, remaining - sq, k, out);
    }
    k[static_cast<std::size_t>(dim)] = 0;
  }

  ManifoldKind kind_;
  int d_;
  int m_;
  double separation_;
};

}  // namespace sml
