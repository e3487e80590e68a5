#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <json.hpp>

namespace sml {

/// Observed quantity against the value of an inequality for one instance.
///
/// `pass` holds when `slack >= -1e-9 * max(|observed|, |bound_value|, 1)`.
/// A report may be `skipped` when the inequality's hypothesis does not hold
/// for the instance (e.g. a relative bound that needs delta <= 1/4).
struct BoundReport {
  std::string name;
  double observed = 0.0;
  double bound_value = 0.0;
  double slack = 0.0;
  bool pass = true;
  bool skipped = false;
  std::map<std::string, double> context;

  static constexpr double kSlackTolerance = 1e-9;

  static BoundReport make(std::string name, double observed, double bound_value,
                          std::map<std::string, double> context = {}) {
    BoundReport r;
    r.name = std::move(name);
    r.observed = observed;
    r.bound_value = bound_value;
    r.slack = bound_value - observed;
    const double scale = std::max({std::abs(observed), std::abs(bound_value), 1.0});
    r.pass = std::isfinite(r.slack) ? r.slack >= -kSlackTolerance * scale
                                    : bound_value == INFINITY;
    r.context = std::move(context);
    return r;
  }

  static BoundReport skip(std::string name, std::map<std::string, double> context = {}) {
    BoundReport r;
    r.name = std::move(name);
    r.skipped = true;
    r.pass = true;
    r.context = std::move(context);
    return r;
  }

  /// Ratio observed/bound; 0 when both are zero.
  double ratio() const {
    if (bound_value == 0.0) return observed == 0.0 ? 0.0 : INFINITY;
    return observed / bound_value;
  }
};

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["observed"] = r.observed;
  j["bound"] = r.bound_value;
  j["slack"] = r.slack;
  j["pass"] = r.pass;
  j["skipped"] = r.skipped;
  j["context"] = r.context;
  return j;
}

}  // namespace sml
