#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ktl {

using json = nlohmann::json;

enum class Verdict { bounded_below, not_bounded_below, inconclusive };

inline const char* to_string(Verdict v)
{
  switch (v) {
    case Verdict::bounded_below: return "bounded-below";
    case Verdict::not_bounded_below: return "not-bounded-below";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

inline Verdict verdict_from_string(const std::string& s)
{
  if (s == "bounded-below")
    return Verdict::bounded_below;
  if (s == "not-bounded-below")
    return Verdict::not_bounded_below;
  if (s == "inconclusive")
    return Verdict::inconclusive;
  throw std::invalid_argument("unknown verdict '" + s + "'");
}

/// Behaviour of a scan's per-depth minimum towards the boundary.
struct Trend
{
  bool available = false;
  double slope = 0.0;       // least-squares d log(min) / d log(depth) over the deepest groups
  double limit_ratio = 1.0; // extrapolated limit / deepest minimum (0 = decays to zero)
};

/// Hysteresis thresholds shared by every criterion. Values are relative to a
/// per-criterion scale (total measure mass, ‖h‖_p, mean of a Toeplitz symbol).
struct ThresholdPolicy
{
  double delta_pass = 1e-3;
  double delta_fail = 1e-4;
  int trend_groups = 3;
  double limit_fail = 0.1; // extrapolated limit below this fraction of the deepest minimum: decays
  double limit_pass = 0.5;
  double percentile = 1.0;
  double luecking_pass = 0.05;
  double luecking_fail = 0.01;
  double witness_ratio = 0.2;
  double witness_min_measure = 0.02;

  void check() const
  {
    if (!(delta_fail > 0.0 && delta_fail <= delta_pass))
      throw std::invalid_argument("policy: need 0 < delta_fail <= delta_pass");
    if (!(limit_fail < limit_pass))
      throw std::invalid_argument("policy: need limit_fail < limit_pass");
    if (trend_groups < 3)
      throw std::invalid_argument("policy: trend_groups must be >= 3");
    if (!(luecking_fail < luecking_pass))
      throw std::invalid_argument("policy: need luecking_fail < luecking_pass");
    if (!(percentile >= 0.0 && percentile <= 100.0))
      throw std::invalid_argument("policy: percentile must lie in [0, 100]");
  }

  /// Plain threshold verdict for a lower-bound estimate with a confidence half-width.
  Verdict classify(double estimate, double confidence, double scale) const
  {
    if (estimate - confidence > delta_pass * scale)
      return Verdict::bounded_below;
    if (estimate + confidence < delta_fail * scale)
      return Verdict::not_bounded_below;
    return Verdict::inconclusive;
  }

  /// Verdict for a finite-radius scan: the minimum must clear the thresholds and
  /// its extrapolation towards the boundary must stay away from zero.
  Verdict classify_scan(double minimum, const Trend& trend, double scale) const
  {
    if (minimum < delta_fail * scale)
      return Verdict::not_bounded_below;
    if (trend.available && trend.limit_ratio < limit_fail)
      return Verdict::not_bounded_below;
    if (minimum > delta_pass * scale && trend.available && trend.limit_ratio > limit_pass)
      return Verdict::bounded_below;
    return Verdict::inconclusive;
  }
};

inline void to_json(json& j, const ThresholdPolicy& p)
{
  j = json{{"delta_pass", p.delta_pass},       {"delta_fail", p.delta_fail},
           {"trend_groups", p.trend_groups},   {"limit_fail", p.limit_fail},
           {"limit_pass", p.limit_pass},       {"percentile", p.percentile},
           {"luecking_pass", p.luecking_pass}, {"luecking_fail", p.luecking_fail},
           {"witness_ratio", p.witness_ratio}, {"witness_min_measure", p.witness_min_measure}};
}

inline void from_json(const json& j, ThresholdPolicy& p)
{
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key))
      j.at(key).get_to(field);
  };
  get("delta_pass", p.delta_pass);
  get("delta_fail", p.delta_fail);
  get("trend_groups", p.trend_groups);
  get("limit_fail", p.limit_fail);
  get("limit_pass", p.limit_pass);
  get("percentile", p.percentile);
  get("luecking_pass", p.luecking_pass);
  get("luecking_fail", p.luecking_fail);
  get("witness_ratio", p.witness_ratio);
  get("witness_min_measure", p.witness_min_measure);
  p.check();
}

/// Groups samples by depth (equal up to rounding), takes the minimum per group
/// and looks at the `groups` deepest ones. The slope is a least-squares fit of
/// log(min) against log(depth). The limit is extrapolated by summing the
/// geometric tail of successive decrements, exact both for c·d^s (limit 0)
/// and for L + c·d^t on geometrically spaced depths.
inline Trend fit_trend(const std::vector<double>& depth, const std::vector<double>& value, int groups)
{
  std::map<long long, std::pair<double, double>> g; // key -> (depth, min value)
  for (std::size_t k = 0; k < depth.size(); ++k) {
    if (!(depth[k] > 0.0))
      continue;
    auto key = static_cast<long long>(std::llround(std::log(depth[k]) * 1e8));
    auto it = g.find(key);
    if (it == g.end() || value[k] < it->second.second)
      g[key] = {depth[k], value[k]};
  }
  Trend t;
  if (static_cast<int>(g.size()) < groups)
    return t;
  std::vector<std::pair<double, double>> pts; // deepest first
  for (auto it = g.begin(); it != g.end() && static_cast<int>(pts.size()) < groups; ++it)
    pts.push_back(it->second);
  t.available = true;
  for (auto& [d, v] : pts)
    if (!(v > 0.0)) {
      t.slope = std::numeric_limits<double>::infinity();
      t.limit_ratio = 0.0;
      return t;
    }
  double mx = 0, my = 0;
  for (auto& [d, v] : pts) {
    mx += std::log(d);
    my += std::log(v);
  }
  mx /= pts.size();
  my /= pts.size();
  double sxy = 0, sxx = 0;
  for (auto& [d, v] : pts) {
    sxy += (std::log(d) - mx) * (std::log(v) - my);
    sxx += (std::log(d) - mx) * (std::log(d) - mx);
  }
  t.slope = sxx > 0.0 ? sxy / sxx : 0.0;

  const double m3 = pts[0].second, m2 = pts[1].second, m1 = pts[2].second;
  const double d2 = m2 - m3, d1 = m1 - m2;
  if (d2 <= 1e-3 * m3) {
    t.limit_ratio = 1.0; // flat at depth: quadrature noise, not decay
  } else if (d1 <= 0.0) {
    t.limit_ratio = 0.0; // decrease only at the deepest level: treat as decay
  } else {
    double r = d2 / d1;
    double limit = r >= 1.0 ? -1.0 : m3 - d2 * r / (1.0 - r);
    t.limit_ratio = std::clamp(limit / m3, 0.0, 1.0);
  }
  return t;
}

/// Percentile (0..100) by nearest rank on a copy.
inline double percentile(std::vector<double> v, double q)
{
  if (v.empty())
    throw std::invalid_argument("percentile of an empty set");
  std::sort(v.begin(), v.end());
  double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  return v[static_cast<std::size_t>(std::floor(pos))];
}

struct CriterionResult
{
  std::string id;
  double constant_estimate = 0.0;
  Verdict verdict = Verdict::inconclusive;
  json grid = json::object();
  double seconds = 0.0;
  std::vector<std::string> notes;
  bool evidence_only = false;  // never counted as decisive
  bool outside_scope = false;  // hypotheses of the underlying theorem not verified
  std::optional<Trend> trend;

  bool decisive() const { return !evidence_only && !outside_scope && verdict != Verdict::inconclusive; }
};

inline void to_json(json& j, const CriterionResult& r)
{
  j = json{{"id", r.id},
           {"constant_estimate", r.constant_estimate},
           {"verdict", to_string(r.verdict)},
           {"grid", r.grid},
           {"seconds", r.seconds},
           {"notes", r.notes},
           {"evidence_only", r.evidence_only},
           {"outside_scope", r.outside_scope}};
  if (r.trend && r.trend->available)
    j["trend"] = {{"slope", std::isfinite(r.trend->slope) ? json(r.trend->slope) : json("inf")},
                  {"limit_ratio", r.trend->limit_ratio}};
}

} // namespace ktl
