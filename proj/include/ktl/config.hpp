#pragma once

#include "diagnostics.hpp"

#include <filesystem>
#include <fstream>

namespace ktl {

enum class ScenarioKind { wco, toeplitz, halfplane };

struct ToeplitzSymbol
{
  std::optional<Expr> expr; // evaluated on the circle
  double arc_centre = std::numbers::pi, arc_half_width = std::numbers::pi / 4, arc_transition = std::numbers::pi / 8;
  std::string label;

  BoundaryGrid sample(std::size_t n) const
  {
    if (!expr)
      return smoothed_arc_symbol(arc_centre, arc_half_width, arc_transition, n);
    BoundaryGrid g = sample_boundary(*expr, n);
    std::vector<cplx> v(g.values());
    for (auto& x : v)
      if (std::abs(x.imag()) <= 1e-12 * (1.0 + std::abs(x.real())))
        x = x.real();
    return BoundaryGrid(std::move(v));
  }
};

struct ScenarioConfig
{
  std::string name = "custom";
  std::string description;
  ScenarioKind kind = ScenarioKind::wco;
  std::string space_name = "H2";
  WcoSpec spec;
  Expr Phi = Expr::variable();
  ToeplitzSymbol symbol;
  std::size_t symbol_grid = std::size_t{1} << 14;
  std::vector<int> truncations{64, 128, 256, 512};
  HalfplaneGrid halfplane_grid;
  DiagnosticsOptions options;
  std::optional<Verdict> oracle;
  std::string oracle_note;
  bool exploratory = false;
  json raw;
};

inline SpaceSpec parse_space(const std::string& name, double p, double alpha)
{
  if (name == "H2")
    return SpaceSpec::hardy(2.0);
  if (name == "Hp")
    return SpaceSpec::hardy(p);
  if (name == "A2")
    return SpaceSpec::bergman(2.0);
  if (name == "Ap")
    return SpaceSpec::bergman(p);
  if (name == "A2alpha")
    return SpaceSpec::weighted_bergman(alpha);
  throw std::invalid_argument("unknown space '" + name + "' (expected H2, Hp, A2, Ap or A2alpha)");
}

namespace detail {

inline Expr parse_field(const json& j, const char* key, const std::string& fallback)
{
  std::string src = j.contains(key) ? j.at(key).get<std::string>() : fallback;
  try {
    return parse_expr(src);
  } catch (const ParseError& e) {
    throw std::invalid_argument(std::string("field '") + key + "': " + e.what());
  }
}

inline void apply_grids(const json& g, ScenarioConfig& c)
{
  auto& o = c.options;
  auto get = [&](const char* key, auto& field) {
    if (g.contains(key))
      g.at(key).get_to(field);
  };
  get("kernel_radii", o.kernel_grid.radii);
  get("kernel_angles", o.kernel_grid.n_angles);
  get("berezin_radii", o.berezin_grid.radii);
  get("berezin_angles", o.berezin_grid.n_angles);
  get("n_samples", o.measure.n_samples);
  get("n_radial", o.measure.n_radial);
  get("n_angular", o.measure.n_angular);
  get("n_bins", o.n_bins);
  get("n_boxes", o.n_boxes);
  get("n_centers", o.discs.n_centers);
  get("disc_radii", o.discs.radii);
  get("deltas", o.deltas);
  get("witness_n_max", o.witness_n_max);
  get("witness_grid", o.witness_grid);
  get("section_size", o.section_size);
  get("symbol_grid", c.symbol_grid);
  get("truncations", c.truncations);
  get("halfplane_sigmas", c.halfplane_grid.sigmas);
  get("halfplane_taus", c.halfplane_grid.taus);
  if (g.contains("r_boundary"))
    o.measure.r_boundary = g.at("r_boundary").get<double>();
}

} // namespace detail

inline ScenarioConfig parse_config(const json& j)
{
  if (!j.is_object())
    throw std::invalid_argument("config must be a JSON object");
  ScenarioConfig c;
  c.raw = j;
  c.name = j.value("name", std::string("custom"));
  c.description = j.value("description", std::string());
  std::string kind = j.value("kind", std::string("wco"));
  if (kind == "wco")
    c.kind = ScenarioKind::wco;
  else if (kind == "toeplitz")
    c.kind = ScenarioKind::toeplitz;
  else if (kind == "halfplane")
    c.kind = ScenarioKind::halfplane;
  else
    throw std::invalid_argument("unknown kind '" + kind + "'");

  c.space_name = j.value("space", std::string("H2"));
  const double p = j.value("p", 2.0);
  const double alpha = j.value("alpha", 0.0);
  if (c.kind == ScenarioKind::wco) {
    c.spec.space = parse_space(c.space_name, p, alpha);
    c.spec.h = detail::parse_field(j, "h", "1");
    c.spec.psi = detail::parse_field(j, "psi", "z");
  } else if (c.kind == ScenarioKind::halfplane) {
    if (c.space_name != "H2" && c.space_name != "A2")
      throw std::invalid_argument("half-plane scenarios support H2 and A2 only");
    c.Phi = detail::parse_field(j, "Phi", "s");
  } else {
    const json& s = j.at("symbol");
    if (s.is_string()) {
      c.symbol.expr = parse_expr(s.get<std::string>());
      c.symbol.label = s.get<std::string>();
    } else if (s.is_object() && s.contains("smoothed_arc")) {
      const json& a = s.at("smoothed_arc");
      c.symbol.arc_centre = a.value("centre", c.symbol.arc_centre);
      c.symbol.arc_half_width = a.value("half_width", c.symbol.arc_half_width);
      c.symbol.arc_transition = a.value("transition", c.symbol.arc_transition);
      if (!(c.symbol.arc_transition > 0.0) || !(c.symbol.arc_half_width >= 0.0))
        throw std::invalid_argument("smoothed_arc: need transition > 0 and half_width >= 0");
      c.symbol.label = "smoothed_arc";
    } else {
      throw std::invalid_argument("symbol must be an expression string or {\"smoothed_arc\": {...}}");
    }
  }
  if (j.contains("grids"))
    detail::apply_grids(j.at("grids"), c);
  if (j.contains("policy"))
    c.options.policy = j.at("policy").get<ThresholdPolicy>();
  if (j.contains("oracle") && !j.at("oracle").is_null())
    c.oracle = verdict_from_string(j.at("oracle").get<std::string>());
  c.oracle_note = j.value("oracle_note", std::string());
  c.exploratory = j.value("exploratory", false);
  c.options.measure.seed = resolve_seed(j.value("seed", default_seed));
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

inline DiagnosticsReport run_scenario(const ScenarioConfig& c)
{
  DiagnosticsReport rep;
  if (c.kind == ScenarioKind::wco) {
    rep = run_all_criteria(c.spec, c.options);
  } else if (c.kind == ScenarioKind::toeplitz) {
    BoundaryGrid h = c.symbol.sample(c.symbol_grid);
    auto t = toeplitz_criterion(h, c.truncations, c.options.kernel_grid, c.options.policy);
    rep.criteria = {t.kernel.criterion, t.sigma, t.ess_inf};
    rep.spec = {{"symbol", c.symbol.label}, {"grid_size", c.symbol_grid}};
    rep.evidence["sigma_min"] = {{"sizes", t.sizes}, {"values", t.sigmas}};
    rep.policy = c.options.policy;
    rep.seed = c.options.measure.seed;
  } else {
    const Family fam = c.space_name == "H2" ? Family::hardy_halfplane : Family::bergman_halfplane;
    auto tr = halfplane_transfer(c.Phi, fam, c.halfplane_grid, c.options.policy);
    DiagnosticsOptions o = c.options;
    rep = run_all_criteria(tr.disk_spec, o);
    rep.criteria.push_back(tr.halfplane_scan.criterion);
    rep.evidence["transfer"] = {{"disk_scan_min", tr.disk_scan.criterion.constant_estimate},
                                {"halfplane_scan_min", tr.halfplane_scan.criterion.constant_estimate},
                                {"max_relative_gap", tr.max_relative_gap},
                                {"agree", tr.agree},
                                {"disk_scan_verdict", to_string(tr.disk_scan.criterion.verdict)}};
    rep.spec["Phi"] = c.Phi.str();
    if (!tr.agree) {
      rep.criteria.back().notes.push_back("disc and half-plane scans disagree beyond tolerance");
    }
  }
  if (c.exploratory)
    for (auto& cr : rep.criteria) {
      cr.outside_scope = true;
      cr.notes.push_back("exploratory scenario: outside proven scope");
    }
  rep.spec["name"] = c.name;
  rep.spec["kind"] = c.kind == ScenarioKind::wco ? "wco" : c.kind == ScenarioKind::toeplitz ? "toeplitz" : "halfplane";
  rep.spec["space_name"] = c.space_name;
  rep.oracle = c.oracle;
  rep.assess();
  if (c.kind == ScenarioKind::halfplane && !rep.evidence["transfer"]["agree"].get<bool>()) {
    rep.pass = false;
    rep.agreement = Agreement::disagree;
    rep.disagreeing.push_back("halfplane-transfer");
  }
  if (!c.oracle_note.empty())
    rep.spec["oracle_note"] = c.oracle_note;
  return rep;
}

inline std::filesystem::path scenario_dir()
{
  if (const char* d = std::getenv("KTL_SCENARIO_DIR"))
    return d;
#ifdef KTL_SCENARIO_DIR
  return KTL_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

/// Library scenario files, sorted by name.
inline std::vector<std::filesystem::path> list_scenarios(const std::filesystem::path& dir = scenario_dir())
{
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir))
    throw std::invalid_argument("scenario directory not found: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json")
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline ScenarioConfig load_scenario(const std::string& name, const std::filesystem::path& dir = scenario_dir())
{
  auto path = dir / (name + ".json");
  if (!std::filesystem::exists(path))
    throw std::invalid_argument("unknown scenario '" + name + "'");
  return load_config(path);
}

} // namespace ktl
