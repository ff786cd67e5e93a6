#include "ktl/ktl.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace ktl;

// exit codes
constexpr int ok = 0;
constexpr int invalid = 1;
constexpr int disagreement = 2;

struct WcoArgs
{
  std::string config;
  std::string space = "H2";
  double p = 2.0;
  double alpha = 0.0;
  std::string h = "1";
  std::string psi = "z";

  void attach(CLI::App* app)
  {
    app->add_option("--config", config, "JSON config (overrides the flags below)");
    app->add_option("--space", space, "H2, Hp, A2, Ap or A2alpha");
    app->add_option("-p,--p", p, "exponent for Hp / Ap");
    app->add_option("--alpha", alpha, "weight exponent for A2alpha");
    app->add_option("--h", h, "weight h(z)");
    app->add_option("--psi", psi, "self-map psi(z)");
  }

  ScenarioConfig resolve() const
  {
    if (!config.empty())
      return load_config(config);
    json j{{"space", space}, {"p", p}, {"alpha", alpha}, {"h", h}, {"psi", psi}};
    return parse_config(j);
  }
};

struct ScanArgs
{
  std::vector<double> radii;
  int angles = 0;
  std::string csv;

  void attach(CLI::App* app)
  {
    app->add_option("--radii", radii, "scan radii in [0, 1)");
    app->add_option("--angles", angles, "angles per radius");
    app->add_option("--csv", csv, "write lambda_re,lambda_im,value to this file");
  }

  ScanGrid apply(ScanGrid g) const
  {
    if (!radii.empty())
      g.radii = radii;
    if (angles > 0)
      g.n_angles = angles;
    return g;
  }
};

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::ofstream open_out(const std::string& path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::invalid_argument("cannot write " + path);
  return os;
}

void dump_scan(const ScanResult& s, const std::string& csv)
{
  if (!csv.empty()) {
    auto os = open_out(csv);
    export_scan_csv(s, os);
  }
  print(json(s.criterion));
}

std::vector<std::pair<double, double>> parse_arcs(const std::vector<std::string>& specs)
{
  std::vector<std::pair<double, double>> arcs;
  for (const auto& s : specs) {
    auto comma = s.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("arc must be 'a,b' in radians: " + s);
    double a = std::stod(s.substr(0, comma)), b = std::stod(s.substr(comma + 1));
    if (!(b > a) || b - a > two_pi)
      throw std::invalid_argument("arc needs a < b <= a + 2pi: " + s);
    arcs.emplace_back(a, b);
  }
  return arcs;
}

json scenario_summary(const std::string& name, const DiagnosticsReport& rep)
{
  json verdicts = json::object();
  for (const auto& c : rep.criteria)
    verdicts[c.id] = {{"verdict", to_string(c.verdict)}, {"constant", c.constant_estimate}, {"decisive", c.decisive()}};
  return {{"name", name},
          {"agreement", to_string(rep.agreement)},
          {"disagreeing", rep.disagreeing},
          {"oracle", rep.oracle ? json(to_string(*rep.oracle)) : json(nullptr)},
          {"status", rep.pass ? "PASS" : "FAIL"},
          {"criteria", verdicts}};
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"ktl: bounded-below diagnostics for weighted composition operators"};
  app.set_help_flag("--help", "print this help and exit"); // frees --h for the weight
  app.set_version_flag("--version", std::string(ktl::version));
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "run every applicable criterion on a config file");
  std::string analyze_config, analyze_out;
  analyze->add_option("--config", analyze_config, "JSON config")->required();
  analyze->add_option("--out", analyze_out, "also write the report to this file");

  // scans
  WcoArgs kargs, targs, dargs, bargs, largs, wargs, eargs;
  ScanArgs kscan, tscan, bscan;
  auto* scan_k = app.add_subcommand("scan-kernels", "normalized reproducing kernel scan");
  kargs.attach(scan_k);
  kscan.attach(scan_k);
  auto* scan_t = app.add_subcommand("scan-testfns", "normalized test-function scan");
  targs.attach(scan_t);
  tscan.attach(scan_t);

  auto* density = app.add_subcommand("density", "boundary Radon-Nikodym density of the pullback measure (Hardy)");
  dargs.attach(density);
  std::size_t density_bins = 1024, density_samples = 0;
  std::string density_csv;
  density->add_option("--bins", density_bins, "number of boundary arcs");
  density->add_option("--samples", density_samples, "boundary samples");
  density->add_option("--csv", density_csv, "write bin,theta,density,half_width");

  auto* berezin = app.add_subcommand("berezin", "Berezin transform scan of the pullback measure (Bergman)");
  bargs.attach(berezin);
  bscan.attach(berezin);

  auto* luecking = app.add_subcommand("luecking", "Luecking reverse-Carleson check (Bergman)");
  largs.attach(luecking);

  auto* toeplitz = app.add_subcommand("toeplitz", "Toeplitz criterion for a nonnegative symbol");
  std::string t_config, t_symbol;
  std::vector<double> t_arc;
  std::size_t t_grid = 0;
  std::vector<int> t_trunc;
  toeplitz->add_option("--config", t_config, "JSON config of kind toeplitz");
  toeplitz->add_option("--symbol", t_symbol, "symbol as an expression in z on the circle");
  toeplitz->add_option("--arc", t_arc, "smoothed arc indicator: centre half_width transition")->expected(3);
  toeplitz->add_option("--grid", t_grid, "boundary samples (power of two)");
  toeplitz->add_option("--truncations", t_trunc, "finite-section sizes");

  auto* halfplane = app.add_subcommand("halfplane", "half-plane composition operator via the Cayley transfer");
  std::string hp_config, hp_phi = "s", hp_space = "H2";
  halfplane->add_option("--config", hp_config, "JSON config of kind halfplane");
  halfplane->add_option("--Phi", hp_phi, "self-map of the right half-plane in s (or z)");
  halfplane->add_option("--space", hp_space, "H2 or A2");

  auto* witness = app.add_subcommand("witness", "outer-function witness on low-density arcs (Hardy)");
  wargs.attach(witness);
  std::vector<std::string> w_arcs;
  int w_nmax = 64;
  witness->add_option("--arc", w_arcs, "arc 'a,b' in radians (repeatable); default: longest low-density run");
  witness->add_option("--n-max", w_nmax, "largest power tested");

  auto* scenario = app.add_subcommand("scenario", "scenario library");
  scenario->require_subcommand(1);
  auto* sc_run = scenario->add_subcommand("run", "run NAME or all");
  std::string sc_name;
  bool sc_quiet = false;
  sc_run->add_option("name", sc_name, "scenario name or 'all'")->required();
  sc_run->add_flag("--quiet", sc_quiet, "one summary line per scenario");
  auto* sc_list = scenario->add_subcommand("list", "list library scenarios");

  auto* measure = app.add_subcommand("measure", "pullback measure import/export");
  measure->require_subcommand(1);
  auto* m_export = measure->add_subcommand("export", "sample a pullback measure and write it");
  eargs.attach(m_export);
  std::string m_out, m_format = "csv";
  m_export->add_option("--out", m_out, "output file")->required();
  m_export->add_option("--format", m_format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));
  auto* m_import = measure->add_subcommand("import", "read a measure and summarise it");
  std::string m_in, m_in_format = "csv", m_kind = "hardy";
  double m_p = 2.0;
  m_import->add_option("--in", m_in, "input file")->required();
  m_import->add_option("--format", m_in_format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));
  m_import->add_option("--kind", m_kind, "hardy (boundary boxes) or bergman (area boxes)")
    ->check(CLI::IsMember({"hardy", "bergman"}));
  m_import->add_option("-p,--p", m_p, "exponent the measure was built for");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : invalid;
  }

  try {
    if (*analyze) {
      auto rep = run_scenario(load_config(analyze_config)).to_json();
      if (!analyze_out.empty()) {
        auto os = open_out(analyze_out);
        os << rep.dump(2) << '\n';
      }
      print(rep);
      return ok;
    }
    if (*scan_k) {
      auto c = kargs.resolve();
      c.spec.validate();
      dump_scan(kernel_scan(c.spec, kscan.apply(c.options.kernel_grid), c.options.policy), kscan.csv);
      return ok;
    }
    if (*scan_t) {
      auto c = targs.resolve();
      c.spec.validate();
      dump_scan(test_function_scan(c.spec, tscan.apply(c.options.kernel_grid), c.options.policy), tscan.csv);
      return ok;
    }
    if (*density) {
      auto c = dargs.resolve();
      if (c.spec.space.family != Family::hardy_disk)
        throw std::invalid_argument("density: Hardy spaces only (use luecking for Bergman)");
      if (density_samples)
        c.options.measure.n_samples = density_samples;
      auto mu = pushforward_measure(c.spec.h, c.spec.psi, c.spec.space.p, MeasureSource::hardy, c.options.measure);
      auto d = rn_density_boundary(mu, density_bins, c.options.policy.percentile);
      if (!density_csv.empty()) {
        auto os = open_out(density_csv);
        os << "bin,theta,density,half_width\n" << std::setprecision(17);
        for (std::size_t b = 0; b < d.n_bins; ++b)
          os << b << ',' << d.theta_begin(b) << ',' << d.density[b] << ',' << d.half_width[b] << '\n';
      }
      json j = ess_inf_criterion(d, c.options.policy);
      j["boundary_mass"] = mu.boundary_mass;
      j["interior_mass"] = mu.interior_mass;
      j["density_max"] = *std::max_element(d.density.begin(), d.density.end());
      j["seed"] = mu.seed;
      print(j);
      return ok;
    }
    if (*berezin) {
      auto c = bargs.resolve();
      c.spec.validate();
      if (c.spec.space.family == Family::hardy_disk)
        throw std::invalid_argument("berezin: Bergman spaces only");
      MeasureOptions mo = c.options.measure;
      mo.alpha = c.spec.space.family == Family::bergman_disk_weighted ? c.spec.space.alpha : 0.0;
      auto mu = pushforward_measure(c.spec.h, c.spec.psi, c.spec.space.p, MeasureSource::bergman, mo);
      dump_scan(berezin_scan(c.spec, mu, bscan.apply(c.options.berezin_grid), c.options.policy), bscan.csv);
      return ok;
    }
    if (*luecking) {
      auto c = largs.resolve();
      c.spec.validate();
      if (c.spec.space.family == Family::hardy_disk)
        throw std::invalid_argument("luecking: Bergman spaces only");
      const double alpha = c.spec.space.family == Family::bergman_disk_weighted ? c.spec.space.alpha : 0.0;
      std::optional<DiskDensity> d;
      if (to_rational(c.spec.psi)) {
        d = DiskDensity::from_pullback(c.spec.h, c.spec.psi, c.spec.space.p, alpha);
      } else {
        MeasureOptions mo = c.options.measure;
        mo.alpha = alpha;
        d = DiskDensity::from_measure(
          pushforward_measure(c.spec.h, c.spec.psi, c.spec.space.p, MeasureSource::bergman, mo), 512, 4096);
      }
      DiscGrid discs = c.options.discs;
      if (!d->pointwise())
        std::erase_if(discs.radii, [&](double r) { return d->resolution(r) > r / 8.0; });
      auto l = luecking_check(*d, c.options.deltas, discs, c.options.policy);
      json j = l.criterion;
      j["inf_fraction"] = l.inf_fraction;
      j["deltas"] = l.deltas;
      print(j);
      return ok;
    }
    if (*toeplitz) {
      ScenarioConfig c;
      if (!t_config.empty()) {
        c = load_config(t_config);
        if (c.kind != ScenarioKind::toeplitz)
          throw std::invalid_argument("toeplitz: config is not of kind toeplitz");
      } else {
        json j{{"kind", "toeplitz"}};
        if (!t_symbol.empty())
          j["symbol"] = t_symbol;
        else if (t_arc.size() == 3)
          j["symbol"] = {{"smoothed_arc", {{"centre", t_arc[0]}, {"half_width", t_arc[1]}, {"transition", t_arc[2]}}}};
        else
          throw std::invalid_argument("toeplitz: give --symbol, --arc or --config");
        c = parse_config(j);
      }
      if (t_grid)
        c.symbol_grid = t_grid;
      if (!t_trunc.empty())
        c.truncations = t_trunc;
      print(run_scenario(c).to_json());
      return ok;
    }
    if (*halfplane) {
      ScenarioConfig c = !hp_config.empty() ? load_config(hp_config)
                                            : parse_config({{"kind", "halfplane"}, {"Phi", hp_phi}, {"space", hp_space}});
      if (c.kind != ScenarioKind::halfplane)
        throw std::invalid_argument("halfplane: config is not of kind halfplane");
      print(run_scenario(c).to_json());
      return ok;
    }
    if (*witness) {
      auto c = wargs.resolve();
      c.spec.validate();
      if (c.spec.space.family != Family::hardy_disk)
        throw std::invalid_argument("witness: Hardy spaces only");
      auto mu = pushforward_measure(c.spec.h, c.spec.psi, c.spec.space.p, MeasureSource::hardy, c.options.measure);
      auto d = rn_density_boundary(mu, c.options.n_bins, c.options.policy.percentile);
      auto arcs = w_arcs.empty() ? low_density_arcs(d, c.options.policy) : parse_arcs(w_arcs);
      if (arcs.empty())
        throw std::invalid_argument("witness: no low-density arc found; pass --arc explicitly");
      print(json(lemma_witness(c.spec, arcs, w_nmax, d, c.options.policy, c.options.witness_grid)));
      return ok;
    }
    if (*sc_list) {
      for (const auto& p : list_scenarios()) {
        auto c = load_config(p);
        std::cout << p.stem().string() << '\t' << (c.oracle ? to_string(*c.oracle) : "-") << '\t' << c.description
                  << '\n';
      }
      return ok;
    }
    if (*sc_run) {
      std::vector<std::filesystem::path> paths;
      if (sc_name == "all")
        paths = list_scenarios();
      else
        paths.push_back(scenario_dir() / (sc_name + ".json"));
      bool any_fail = false;
      json all = json::array();
      for (const auto& path : paths) {
        if (!std::filesystem::exists(path))
          throw std::invalid_argument("unknown scenario '" + path.stem().string() + "'");
        auto t0 = std::chrono::steady_clock::now();
        auto rep = run_scenario(load_config(path));
        any_fail = any_fail || !rep.pass;
        if (sc_quiet) {
          std::cout << (rep.pass ? "PASS " : "FAIL ") << path.stem().string() << "  " << to_string(rep.agreement)
                    << "  oracle=" << (rep.oracle ? to_string(*rep.oracle) : "-") << "  "
                    << std::setprecision(3) << detail::seconds_since(t0) << "s";
          if (!rep.disagreeing.empty()) {
            std::cout << "  disagreeing:";
            for (const auto& d : rep.disagreeing)
              std::cout << ' ' << d;
          }
          std::cout << '\n';
        } else if (paths.size() == 1) {
          print(rep.to_json());
        } else {
          all.push_back(scenario_summary(path.stem().string(), rep));
        }
      }
      if (!sc_quiet && paths.size() > 1)
        print(all);
      return any_fail ? disagreement : ok;
    }
    if (*m_export) {
      auto c = eargs.resolve();
      c.spec.validate(true);
      const bool hardy = c.spec.space.family == Family::hardy_disk;
      MeasureOptions mo = c.options.measure;
      mo.alpha = c.spec.space.family == Family::bergman_disk_weighted ? c.spec.space.alpha : 0.0;
      auto mu = pushforward_measure(c.spec.h, c.spec.psi, c.spec.space.p,
                                    hardy ? MeasureSource::hardy : MeasureSource::bergman, mo);
      auto os = open_out(m_out);
      if (m_format == "csv")
        export_measure_csv(mu, os);
      else
        export_measure_binary(mu, os);
      print({{"atoms", mu.size()}, {"total_mass", mu.total_mass()}, {"boundary_mass", mu.boundary_mass},
             {"seed", mu.seed}, {"out", m_out}});
      return ok;
    }
    if (*m_import) {
      std::ifstream is(m_in, std::ios::binary);
      if (!is)
        throw std::invalid_argument("cannot open " + m_in);
      auto mu = m_in_format == "csv" ? import_measure_csv(is, m_p) : import_measure_binary(is, m_p);
      mu.source = m_kind == "hardy" ? MeasureSource::hardy : MeasureSource::bergman;
      json j{{"atoms", mu.size()},
             {"total_mass", mu.total_mass()},
             {"boundary_mass", mu.boundary_mass},
             {"interior_mass", mu.interior_mass},
             {"carleson_constant", carleson_constant(mu)}};
      if (mu.boundary_mass > 0.0 && mu.size() >= 16 * 64) {
        auto d = rn_density_boundary(mu, std::min<std::size_t>(1024, mu.size() / 16));
        j["ess_inf_density"] = d.ess_inf_estimate;
      }
      print(j);
      return ok;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return invalid;
  }
  std::cerr << app.help();
  return invalid;
}
