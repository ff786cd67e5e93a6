#pragma once

#include "cayley.hpp"
#include "disk_density.hpp"
#include "operator.hpp"

#include <chrono>

namespace ktl {

inline constexpr const char* version = "1.0.0";

// ---- scan grids --------------------------------------------------------------

struct ScanGrid
{
  std::vector<double> radii{0.0, 0.3, 0.6, 0.9, 0.99, 0.999};
  int n_angles = 64;

  std::vector<cplx> points() const
  {
    std::vector<cplx> out;
    for (double r : radii) {
      if (!(r >= 0.0 && r < 1.0))
        throw std::invalid_argument("ScanGrid: radii must lie in [0, 1)");
      if (r == 0.0) {
        out.emplace_back(0.0);
        continue;
      }
      for (int k = 0; k < n_angles; ++k)
        out.push_back(std::polar(r, two_pi * k / n_angles));
    }
    return out;
  }

  json to_json() const { return {{"radii", radii}, {"n_angles", n_angles}}; }
};

struct ScanPoint
{
  cplx point;
  double value;
  double depth; // 1 - |λ|^2 on the disc, Re w on the half-plane
};

struct ScanResult
{
  CriterionResult criterion;
  std::vector<ScanPoint> points;
};

inline void export_scan_csv(const ScanResult& s, std::ostream& os)
{
  os << "lambda_re,lambda_im,value\n" << std::setprecision(17);
  for (const auto& p : s.points)
    os << p.point.real() << ',' << p.point.imag() << ',' << p.value << '\n';
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void finish_scan(ScanResult& s, const ThresholdPolicy& policy, double scale)
{
  std::vector<double> depth, value;
  double mn = std::numeric_limits<double>::infinity();
  cplx arg = 0.0;
  for (const auto& p : s.points) {
    depth.push_back(p.depth);
    value.push_back(p.value);
    if (p.value < mn) {
      mn = p.value;
      arg = p.point;
    }
  }
  auto& c = s.criterion;
  c.constant_estimate = mn;
  c.trend = fit_trend(depth, value, policy.trend_groups);
  c.verdict = policy.classify_scan(mn, *c.trend, scale);
  c.grid["argmin"] = {arg.real(), arg.imag()};
  c.grid["scale"] = scale;
  c.notes.push_back("finite-radius scan: a necessary-condition check; the decay trend of the per-depth minimum "
                    "is fitted against the depth to extrapolate towards the boundary");
}

/// Weighted Bergman mode: the threshold outcome is kept as evidence, never as a verdict.
inline void demote_to_evidence(CriterionResult& c)
{
  c.grid["evidence_verdict"] = to_string(c.verdict);
  c.verdict = Verdict::inconclusive;
  c.evidence_only = true;
}

inline double norm_of_h(const WcoSpec& spec)
{
  return wco_norm(spec, [](cplx) { return cplx(1.0); }).direct;
}

} // namespace detail

/// min over the grid of ‖W k̃_λ‖ with the normalized reproducing kernel of the space.
inline ScanResult kernel_scan(const WcoSpec& spec, const ScanGrid& grid, const ThresholdPolicy& policy,
                              const PullbackMeasure* mu = nullptr)
{
  auto t0 = std::chrono::steady_clock::now();
  const auto& sp = spec.space;
  if (sp.family == Family::hardy_disk && !(sp.p > 1.0))
    throw std::domain_error("kernel_scan: the Hardy kernel normalization needs p > 1 (use the test-function scan)");
  if (sp.family == Family::bergman_disk && sp.p != 2.0)
    throw std::domain_error("kernel_scan: Bergman reproducing kernels only for p = 2 (use the test-function scan)");
  ScanResult s;
  s.criterion.id = "kernel-scan";
  s.criterion.grid = grid.to_json();
  double max_gap = 0.0;
  for (cplx lam : grid.points()) {
    KernelHandle k(sp, lam, KernelKind::reproducing_kernel);
    auto n = wco_norm(spec, k, mu);
    if (n.relative_gap)
      max_gap = std::max(max_gap, *n.relative_gap);
    s.points.push_back({lam, n.direct, 1.0 - std::norm(lam)});
  }
  detail::finish_scan(s, policy, detail::norm_of_h(spec));
  if (mu)
    s.criterion.grid["max_atom_gap"] = max_gap;
  if (sp.family == Family::bergman_disk_weighted) {
    detail::demote_to_evidence(s.criterion);
    s.criterion.notes.push_back("weighted Bergman evidence mode: kernel criterion not proven equivalent here");
  }
  s.criterion.seconds = detail::seconds_since(t0);
  return s;
}

/// Zeros of h in |z| < r by the argument principle.
inline int zero_count(const Expr& h, double r, std::size_t n = 8192)
{
  CompiledExpr ch(h);
  double total = 0.0;
  cplx prev = ch(cplx(r, 0.0));
  for (std::size_t k = 1; k <= n; ++k) {
    cplx cur = ch(std::polar(r, two_pi * static_cast<double>(k) / static_cast<double>(n)));
    if (cur == cplx(0.0) || prev == cplx(0.0))
      return -1;
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / two_pi));
}

/// min over the grid of ‖W ℓ̃_w‖ with the space's test functions.
inline ScanResult test_function_scan(const WcoSpec& spec, const ScanGrid& grid, const ThresholdPolicy& policy)
{
  auto t0 = std::chrono::steady_clock::now();
  const auto& sp = spec.space;
  if (sp.family != Family::hardy_disk && sp.family != Family::bergman_disk)
    throw std::domain_error("test_function_scan: Hardy or Bergman disc spaces only");
  ScanResult s;
  s.criterion.id = "test-function-scan";
  s.criterion.grid = grid.to_json();
  for (cplx w : grid.points()) {
    KernelHandle l(sp, w, KernelKind::test_function);
    s.points.push_back({w, wco_norm(spec, l).direct, 1.0 - std::norm(w)});
  }
  detail::finish_scan(s, policy, detail::norm_of_h(spec));
  if (sp.family == Family::bergman_disk) {
    std::vector<int> counts;
    for (double r : {0.9, 0.99, 0.999})
      counts.push_back(zero_count(spec.h, r));
    s.criterion.grid["zero_counts"] = counts;
    bool growing = counts[0] < 0 || counts[1] < 0 || counts[2] < 0 || counts[2] > counts[1] || counts[1] > counts[0];
    if (growing) {
      s.criterion.outside_scope = true;
      s.criterion.notes.push_back("outside proven scope: h may have infinitely many zeros (counts grow towards the circle)");
    }
  }
  s.criterion.seconds = detail::seconds_since(t0);
  return s;
}

/// min over the grid of the Berezin transform ∫|k̃_w|^2 dμ = ‖W k̃_w‖^2.
inline ScanResult berezin_scan(const WcoSpec& spec, const PullbackMeasure& mu, const ScanGrid& grid,
                               const ThresholdPolicy& policy)
{
  auto t0 = std::chrono::steady_clock::now();
  if (spec.space.p != 2.0 || spec.space.is_hardy())
    throw std::domain_error("berezin_scan: Bergman p = 2 spaces only");
  ScanResult s;
  s.criterion.id = "berezin-scan";
  s.criterion.grid = grid.to_json();
  const double alpha = spec.space.family == Family::bergman_disk_weighted ? spec.space.alpha : 0.0;
  for (cplx w : grid.points())
    s.points.push_back({w, berezin_transform(mu, w, alpha), 1.0 - std::norm(w)});
  detail::finish_scan(s, policy, mu.total_mass());
  s.criterion.grid["atoms"] = mu.size();
  if (spec.space.family == Family::bergman_disk_weighted) {
    detail::demote_to_evidence(s.criterion);
    s.criterion.notes.push_back("evidence: Berezin inf = " + std::to_string(s.criterion.constant_estimate) +
                                " (weighted Bergman: equivalence with bounded below is open)");
  }
  s.criterion.seconds = detail::seconds_since(t0);
  return s;
}

// ---- witness -----------------------------------------------------------------

struct WitnessResult
{
  std::vector<std::pair<double, double>> arcs; // θ intervals (radians) forming E
  double measure_E = 0.0;
  std::size_t grid_size = 0;
  OuterFunction f;
  std::vector<int> powers;
  std::vector<double> f_norms;
  std::vector<double> wf_norms;
  std::vector<double> ratios;
  double min_ratio = std::numeric_limits<double>::infinity();
  double density_on_E = 0.0;
  bool applicable = false;
  bool norms_ok = false;
  bool success = false;
  std::string diagnostic;
};

inline void to_json(json& j, const WitnessResult& w)
{
  json arcs = json::array();
  for (auto& [a, b] : w.arcs)
    arcs.push_back({a, b});
  j = json{{"arcs", arcs},           {"measure_E", w.measure_E},    {"grid_size", w.grid_size},
           {"powers", w.powers},     {"f_norms", w.f_norms},        {"wf_norms", w.wf_norms},
           {"ratios", w.ratios},     {"min_ratio", w.min_ratio},    {"density_on_E", w.density_on_E},
           {"applicable", w.applicable}, {"norms_ok", w.norms_ok}, {"success", w.success},
           {"diagnostic", w.diagnostic}};
}

inline bool in_arcs(double theta, const std::vector<std::pair<double, double>>& arcs)
{
  for (auto [a, b] : arcs) {
    double t = theta;
    while (t < a)
      t += two_pi;
    while (t >= a + two_pi)
      t -= two_pi;
    if (t < b)
      return true;
  }
  return false;
}

/// Outer witness with |f| = 1 on E and 1/2 off E; records ‖f^n‖ and ‖W f^n‖.
inline WitnessResult lemma_witness(const WcoSpec& spec, const std::vector<std::pair<double, double>>& arcs,
                                   int n_max, const BoundaryDensity& density, const ThresholdPolicy& policy,
                                   std::size_t grid_size = std::size_t{1} << 14)
{
  if (spec.space.family != Family::hardy_disk)
    throw std::invalid_argument("lemma_witness: Hardy spaces only");
  if (n_max < 1)
    throw std::invalid_argument("lemma_witness: n_max must be >= 1");
  WitnessResult res;
  res.arcs = arcs;
  res.grid_size = grid_size;
  const double p = spec.space.p;
  std::vector<double> modulus(grid_size);
  std::size_t in = 0;
  for (std::size_t k = 0; k < grid_size; ++k) {
    bool e = in_arcs(two_pi * static_cast<double>(k) / static_cast<double>(grid_size), arcs);
    modulus[k] = e ? 1.0 : 0.5;
    in += e;
  }
  res.measure_E = static_cast<double>(in) / static_cast<double>(grid_size);
  if (in == 0)
    throw std::invalid_argument("lemma_witness: E has zero length on the grid");

  // mean boundary density of μ over bins whose centres lie in E
  double dsum = 0.0;
  std::size_t dn = 0;
  for (std::size_t b = 0; b < density.n_bins; ++b)
    if (in_arcs(density.theta_begin(b) + 0.5 * two_pi / static_cast<double>(density.n_bins), arcs)) {
      dsum += density.density[b];
      ++dn;
    }
  res.density_on_E = dn ? dsum / static_cast<double>(dn) : 0.0;
  res.applicable = res.measure_E >= policy.witness_min_measure && dn > 0 &&
                   res.density_on_E <= policy.delta_fail * density.total_mass;
  if (!res.applicable)
    res.diagnostic = "witness inapplicable: boundary density on E is not small (or E too short)";

  res.f = outer_from_modulus(modulus);
  const auto& a = res.f.log_coefficients();
  auto ch = spec.compiled_h();
  auto cpsi = spec.compiled_psi();
  // samples of |h|^p and Re G(ψ) on the grid
  std::vector<double> hp(grid_size), re_g(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k) {
    cplx z = std::polar(1.0, two_pi * static_cast<double>(k) / static_cast<double>(grid_size));
    hp[k] = detail::abs_pow(ch(z), p);
    cplx w = cpsi(z);
    if (std::abs(w) > 1.0)
      w /= std::abs(w);
    cplx acc = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it)
      acc = acc * w + *it;
    re_g[k] = acc.real();
  }
  const double lower = std::pow(res.measure_E, 1.0 / p);
  res.norms_ok = true;
  for (int n = 1; n <= n_max; n *= 2) {
    double fs = 0.0, ws = 0.0;
    for (std::size_t k = 0; k < grid_size; ++k) {
      fs += std::pow(modulus[k], n * p);
      ws += hp[k] * std::exp(n * p * re_g[k]);
    }
    double fn = std::pow(fs / static_cast<double>(grid_size), 1.0 / p);
    double wn = std::pow(ws / static_cast<double>(grid_size), 1.0 / p);
    res.powers.push_back(n);
    res.f_norms.push_back(fn);
    res.wf_norms.push_back(wn);
    res.ratios.push_back(wn / fn);
    res.min_ratio = std::min(res.min_ratio, wn / fn);
    if (fn < lower * (1.0 - 1e-2))
      res.norms_ok = false;
  }
  res.success = res.applicable && res.norms_ok && res.min_ratio < policy.witness_ratio;
  return res;
}

/// Longest run of bins with density ≤ δ_fail·mass (cyclically), trimmed to at
/// most `max_fraction` of the circle around its midpoint. Empty when no bin qualifies.
inline std::vector<std::pair<double, double>> low_density_arcs(const BoundaryDensity& d, const ThresholdPolicy& policy,
                                                               double max_fraction = 0.25)
{
  const std::size_t n = d.n_bins;
  auto low = [&](std::size_t b) { return d.density[b % n] <= policy.delta_fail * d.total_mass; };
  std::size_t best_start = 0, best_len = 0;
  for (std::size_t b = 0; b < n; ++b) {
    if (!low(b) || (low((b + n - 1) % n) && b != 0))
      continue;
    std::size_t len = 0;
    while (len < n && low(b + len))
      ++len;
    if (len > best_len) {
      best_len = len;
      best_start = b;
    }
  }
  if (best_len == 0)
    return {};
  const double w = two_pi / static_cast<double>(n);
  const auto cap = static_cast<std::size_t>(max_fraction * static_cast<double>(n));
  if (best_len > cap) {
    best_start += (best_len - cap) / 2;
    best_len = cap;
  }
  double a = w * static_cast<double>(best_start);
  return {{a, a + w * static_cast<double>(best_len)}};
}

// ---- Toeplitz ------------------------------------------------------------------

/// C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1.
inline double smooth_step(double x)
{
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

/// Symbol vanishing on the arc |θ - centre| < half_width, rising smoothly to 1 over `transition`.
inline BoundaryGrid smoothed_arc_symbol(double centre, double half_width, double transition, std::size_t n)
{
  std::vector<cplx> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    double t = two_pi * static_cast<double>(k) / static_cast<double>(n) - centre;
    t = std::remainder(t, two_pi);
    v[k] = smooth_step((std::abs(t) - half_width) / transition);
  }
  return BoundaryGrid(std::move(v));
}

struct ToeplitzResult
{
  ScanResult kernel;              // ⟨T_h k̃_λ, k̃_λ⟩ = P[h](λ)
  CriterionResult sigma;          // σ_min of finite sections (evidence)
  CriterionResult ess_inf;        // grid percentile of h
  std::vector<int> sizes;
  std::vector<double> sigmas;
};

inline ToeplitzResult toeplitz_criterion(const BoundaryGrid& h, const std::vector<int>& n_truncations,
                                         const ScanGrid& grid, const ThresholdPolicy& policy)
{
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < h.size(); ++k)
    if (h[k].real() < -1e-12 || std::abs(h[k].imag()) > 1e-12 * (1.0 + std::abs(h[k].real())))
      throw std::invalid_argument("toeplitz_criterion: symbol must be real and >= 0 (node " + std::to_string(k) + ")");
  ToeplitzResult res;
  auto c = fourier_coefficients(h.values());
  const std::size_t n = h.size();
  const double scale = c[0].real();

  // (a) Poisson average Σ ĥ(m) r^{|m|} e^{imφ}
  res.kernel.criterion.id = "kernel-scan";
  res.kernel.criterion.grid = grid.to_json();
  for (cplx lam : grid.points()) {
    const double r = std::abs(lam);
    const cplx e = r > 0 ? lam / r : cplx(1.0);
    double v = c[0].real();
    cplx ep = 1.0;
    double rp = 1.0;
    for (std::size_t m = 1; m < n / 2; ++m) {
      ep *= e;
      rp *= r;
      if (rp < 1e-18)
        break;
      v += 2.0 * rp * (c[m] * ep).real();
    }
    res.kernel.points.push_back({lam, v, 1.0 - r * r});
  }
  detail::finish_scan(res.kernel, policy, scale);
  res.kernel.criterion.notes.push_back("value is the Berezin-type quantity <T_h k_l, k_l> = Poisson average of h");
  res.kernel.criterion.seconds = detail::seconds_since(t0);

  // (b) finite sections
  auto t1 = std::chrono::steady_clock::now();
  res.sigma.id = "toeplitz-sigma";
  for (int m : n_truncations) {
    res.sizes.push_back(m);
    res.sigmas.push_back(smallest_singular(toeplitz_matrix(h, m)));
  }
  res.sigma.constant_estimate = res.sigmas.empty() ? 0.0 : res.sigmas.back();
  res.sigma.verdict = policy.classify(res.sigma.constant_estimate, 0.0, scale);
  res.sigma.evidence_only = true;
  res.sigma.grid = {{"sizes", res.sizes}, {"sigma_min", res.sigmas}};
  res.sigma.notes.push_back("finite-section sigma_min decreases towards ess inf h; corroboration only");
  res.sigma.seconds = detail::seconds_since(t1);

  // (c) essential infimum of the symbol
  std::vector<double> vals(n);
  for (std::size_t k = 0; k < n; ++k)
    vals[k] = h[k].real();
  res.ess_inf.id = "ess-inf-density";
  res.ess_inf.constant_estimate = percentile(vals, policy.percentile);
  res.ess_inf.verdict = policy.classify(res.ess_inf.constant_estimate, 0.0, scale);
  res.ess_inf.grid = {{"grid_size", n}, {"percentile", policy.percentile}};
  return res;
}

// ---- half-plane transfer ---------------------------------------------------------

struct HalfplaneGrid
{
  std::vector<double> sigmas = log_spaced(1e-3, 1e3, 13);
  std::vector<double> taus = default_taus();

  static std::vector<double> default_taus()
  {
    std::vector<double> t{0.0};
    for (double v : log_spaced(1e-3, 1e3, 7)) {
      t.push_back(v);
      t.push_back(-v);
    }
    return t;
  }

  std::vector<cplx> points() const
  {
    std::vector<cplx> out;
    for (double s : sigmas)
      for (double t : taus)
        out.emplace_back(s, t);
    return out;
  }

  json to_json() const { return {{"sigmas", sigmas}, {"taus", taus}}; }
};

struct HalfplaneResult
{
  Expr phi_disk;
  Expr h_disk;
  WcoSpec disk_spec;
  ScanResult disk_scan;
  ScanResult halfplane_scan;
  double max_relative_gap = 0.0;
  bool agree = false;
};

/// φ = M∘Φ∘M and h = (1+s)/(1+Φ(s)) at s = M(z) (Hardy) or its square (Bergman).
inline WcoSpec transfer_spec(const Expr& Phi, Family family)
{
  Expr s = Expr::cayley();
  Expr one = Expr::constant(1.0);
  WcoSpec spec;
  spec.psi = Expr::cayley(Expr::compose(Phi, s));
  Expr h = (one + s) / (one + Expr::compose(Phi, s));
  if (family == Family::hardy_halfplane) {
    spec.h = h;
    spec.space = SpaceSpec::hardy();
  } else if (family == Family::bergman_halfplane) {
    spec.h = Expr::pow(h, 2);
    spec.space = SpaceSpec::bergman();
  } else {
    throw std::invalid_argument("transfer_spec: half-plane family expected");
  }
  spec.prefer_tree = true;
  return spec;
}

inline void check_halfplane_self_map(const Expr& Phi)
{
  for (double s : log_spaced(1e-3, 1e3, 25))
    for (double t : {-1e3, -10.0, -1.0, -0.1, 0.0, 0.1, 1.0, 10.0, 1e3}) {
      auto v = Phi.try_eval(cplx(s, t));
      if (!v || !(v->real() > 0.0))
        throw std::invalid_argument("halfplane_transfer: Phi does not map the test point " +
                                    Expr::format_constant(cplx(s, t)) + " into the right half-plane");
    }
}

inline HalfplaneResult halfplane_transfer(const Expr& Phi, Family family, const HalfplaneGrid& grid,
                                          const ThresholdPolicy& policy, double tolerance = 1e-3)
{
  check_halfplane_self_map(Phi);
  HalfplaneResult res;
  res.disk_spec = transfer_spec(Phi, family);
  res.phi_disk = res.disk_spec.psi;
  res.h_disk = res.disk_spec.h;
  const auto disk_space = res.disk_spec.space;
  const SpaceSpec hp_space{family, 2.0, 0.0};

  auto t0 = std::chrono::steady_clock::now();
  res.disk_scan.criterion.id = "kernel-scan";
  res.halfplane_scan.criterion.id = "halfplane-kernel-scan";
  double t_disk = 0.0, t_half = 0.0;
  for (cplx w : grid.points()) {
    const double depth = w.real();
    auto ta = std::chrono::steady_clock::now();
    cplx lam = cayley(w);
    KernelHandle k(disk_space, lam, KernelKind::reproducing_kernel);
    double dv = wco_norm(res.disk_spec, k).direct;
    auto tb = std::chrono::steady_clock::now();
    KernelHandle K(hp_space, w, KernelKind::reproducing_kernel);
    auto f = [&](cplx s) { return K(Phi(s)); };
    auto sharp = [&](cplx s) { return K.sharpness(Phi(s)); };
    double hv = std::sqrt(family == Family::hardy_halfplane ? hardy_halfplane_norm_sq(f, sharp)
                                                             : bergman_halfplane_norm_sq(f, sharp));
    auto tc = std::chrono::steady_clock::now();
    t_disk += std::chrono::duration<double>(tb - ta).count();
    t_half += std::chrono::duration<double>(tc - tb).count();
    res.disk_scan.points.push_back({w, dv, depth});
    res.halfplane_scan.points.push_back({w, hv, depth});
    res.max_relative_gap = std::max(res.max_relative_gap, std::abs(dv - hv) / std::max(hv, 1e-300));
  }
  // ‖W k̃_0‖ = ‖h‖ is the common scale; k̃_0 corresponds to K̃_1
  KernelHandle k0(disk_space, 0.0, KernelKind::reproducing_kernel);
  const double scale = wco_norm(res.disk_spec, k0).direct;
  for (auto* s : {&res.disk_scan, &res.halfplane_scan}) {
    s->criterion.grid = grid.to_json();
    detail::finish_scan(*s, policy, scale);
    s->criterion.grid["max_relative_gap"] = res.max_relative_gap;
  }
  res.disk_scan.criterion.notes.push_back("disc side evaluated at lambda = M(w) for each half-plane grid point");
  res.disk_scan.criterion.seconds = t_disk;
  res.halfplane_scan.criterion.seconds = t_half;
  res.agree = res.max_relative_gap <= tolerance;
  (void)t0;
  return res;
}

// ---- orchestration ---------------------------------------------------------------

struct DiagnosticsOptions
{
  ScanGrid kernel_grid{};
  ScanGrid berezin_grid{{0.0, 0.3, 0.6, 0.9, 0.99}, 16};
  MeasureOptions measure{};
  std::size_t n_bins = 1024;
  std::size_t n_boxes = 1024;
  DiscGrid discs{};
  std::vector<double> deltas{}; // empty: 16 log-spaced in [1e-4, 1]·mass
  ThresholdPolicy policy{};
  bool run_witness = true;
  int witness_n_max = 64;
  std::size_t witness_grid = std::size_t{1} << 14;
  int section_size = 64; // finite-section evidence for p = 2
};

enum class Agreement { all_agree, disagree, partial };

inline const char* to_string(Agreement a)
{
  switch (a) {
    case Agreement::all_agree: return "all-agree";
    case Agreement::disagree: return "disagree";
    case Agreement::partial: return "partial";
  }
  return "?";
}

struct DiagnosticsReport
{
  json spec = json::object();
  std::vector<CriterionResult> criteria;
  Agreement agreement = Agreement::partial;
  std::vector<std::string> disagreeing;
  std::optional<Verdict> oracle;
  bool pass = true;
  json evidence = json::object();
  std::optional<WitnessResult> witness;
  ThresholdPolicy policy;
  std::uint64_t seed = 0;

  /// Decisive verdicts must agree with each other and with the oracle.
  void assess()
  {
    disagreeing.clear();
    std::optional<Verdict> first;
    bool conflict = false, any_open = false;
    for (const auto& c : criteria) {
      if (!c.decisive()) {
        any_open = true;
        continue;
      }
      if (!first)
        first = c.verdict;
      else if (*first != c.verdict)
        conflict = true;
      if (oracle && c.verdict != *oracle)
        conflict = true;
    }
    if (conflict)
      for (const auto& c : criteria)
        if (c.decisive() && ((oracle && c.verdict != *oracle) || (!oracle && first && c.verdict != *first)))
          disagreeing.push_back(c.id);
    if (conflict && disagreeing.empty())
      for (const auto& c : criteria)
        if (c.decisive())
          disagreeing.push_back(c.id);
    agreement = conflict ? Agreement::disagree : any_open ? Agreement::partial : Agreement::all_agree;
    pass = !conflict;
  }

  const CriterionResult* find(const std::string& id) const
  {
    for (const auto& c : criteria)
      if (c.id == id)
        return &c;
    return nullptr;
  }

  /// Common decisive verdict, if any.
  std::optional<Verdict> consensus() const
  {
    std::optional<Verdict> v;
    for (const auto& c : criteria)
      if (c.decisive()) {
        if (v && *v != c.verdict)
          return std::nullopt;
        v = c.verdict;
      }
    return v;
  }

  json to_json() const
  {
    json j;
    j["spec"] = spec;
    j["criteria"] = criteria;
    j["agreement"] = to_string(agreement);
    j["disagreeing"] = disagreeing;
    j["oracle"] = oracle ? json(to_string(*oracle)) : json(nullptr);
    j["status"] = pass ? "PASS" : "FAIL";
    j["evidence"] = evidence;
    if (witness)
      j["witness"] = *witness;
    j["policy"] = policy;
    j["version"] = version;
    j["seed"] = seed;
    return j;
  }
};

inline json spec_echo(const WcoSpec& s)
{
  return {{"h", s.h.str()},
          {"psi", s.psi.str()},
          {"space", to_string(s.space.family)},
          {"p", s.space.p},
          {"alpha", s.space.alpha}};
}

/// ‖Wf‖ by direct quadrature vs atom sum for a few fixed test functions.
inline json norm_identity_check(const WcoSpec& spec, const PullbackMeasure& mu)
{
  json out = json::array();
  const KernelHandle k(spec.space.family == Family::bergman_disk_weighted ? SpaceSpec::weighted_bergman(spec.space.alpha)
                       : spec.space.family == Family::bergman_disk && spec.space.p != 2.0 ? SpaceSpec::bergman(2.0)
                                                                                           : spec.space,
                       cplx(0.3, 0.4), KernelKind::reproducing_kernel);
  auto poly = [](cplx w) { return 1.0 + w + 0.5 * w * w; };
  auto n1 = wco_norm(spec, poly, {}, &mu);
  auto n2 = wco_norm(spec, [&](cplx w) { return k(w); }, {}, &mu);
  out.push_back({{"f", "1+z+z^2/2"}, {"direct", n1.direct}, {"atoms", *n1.atom_sum}, {"relative_gap", *n1.relative_gap}});
  out.push_back({{"f", "kernel at 0.3+0.4i"}, {"direct", n2.direct}, {"atoms", *n2.atom_sum}, {"relative_gap", *n2.relative_gap}});
  return out;
}

inline DiagnosticsReport run_all_criteria(const WcoSpec& spec, const DiagnosticsOptions& opt = {})
{
  spec.validate();
  opt.policy.check();
  DiagnosticsReport rep;
  rep.spec = spec_echo(spec);
  rep.policy = opt.policy;
  rep.seed = opt.measure.seed;
  const auto& sp = spec.space;
  const auto& policy = opt.policy;

  auto record = [&](CriterionResult c) { rep.criteria.push_back(std::move(c)); };
  auto guarded = [&](const char* id, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      CriterionResult c;
      c.id = id;
      c.verdict = Verdict::inconclusive;
      c.notes.push_back(std::string("criterion failed: ") + e.what());
      record(std::move(c));
    }
  };

  if (sp.family == Family::hardy_disk) {
    auto t0 = std::chrono::steady_clock::now();
    PullbackMeasure mu = pushforward_measure(spec.h, spec.psi, sp.p, MeasureSource::hardy, opt.measure);
    BoundaryDensity dens = rn_density_boundary(mu, opt.n_bins, policy.percentile);
    CriterionResult ess = ess_inf_criterion(dens, policy);
    ess.grid["n_samples"] = mu.size();
    ess.grid["r_boundary"] = mu.r_boundary;
    ess.seconds = detail::seconds_since(t0);
    record(ess);
    rep.evidence["boundary_mass"] = mu.boundary_mass;
    rep.evidence["interior_mass"] = mu.interior_mass;
    rep.evidence["carleson_constant"] = carleson_constant(mu, opt.n_boxes);
    rep.evidence["norm_identity"] = norm_identity_check(spec, mu);

    if (sp.p > 1.0)
      guarded("kernel-scan", [&] { record(kernel_scan(spec, opt.kernel_grid, policy).criterion); });
    guarded("test-function-scan", [&] { record(test_function_scan(spec, opt.kernel_grid, policy).criterion); });

    if (opt.run_witness && ess.verdict == Verdict::not_bounded_below) {
      auto arcs = low_density_arcs(dens, policy);
      if (!arcs.empty())
        rep.witness = lemma_witness(spec, arcs, opt.witness_n_max, dens, policy, opt.witness_grid);
    }
  } else {
    auto t0 = std::chrono::steady_clock::now();
    MeasureOptions mo = opt.measure;
    mo.alpha = sp.family == Family::bergman_disk_weighted ? sp.alpha : 0.0;
    PullbackMeasure mu = pushforward_measure(spec.h, spec.psi, sp.p, MeasureSource::bergman, mo);
    const double build = detail::seconds_since(t0);
    rep.evidence["total_mass"] = mu.total_mass();
    rep.evidence["carleson_constant"] = carleson_constant(mu, opt.n_boxes);
    rep.evidence["norm_identity"] = norm_identity_check(spec, mu);

    guarded("luecking", [&] {
      auto t1 = std::chrono::steady_clock::now();
      DiskDensity d = to_rational(spec.psi) ? DiskDensity::from_pullback(spec.h, spec.psi, sp.p, mo.alpha)
                                            : DiskDensity::from_measure(mu, 512, 4096);
      DiscGrid discs = opt.discs;
      if (!d.pointwise()) {
        std::erase_if(discs.radii, [&](double r) { return d.resolution(r) > r / 8.0; });
      }
      auto l = luecking_check(d, opt.deltas, discs, policy);
      l.criterion.seconds = detail::seconds_since(t1) + build;
      if (!d.pointwise())
        l.criterion.notes.push_back("histogram density: disc radii restricted to the resolved range");
      if (sp.family == Family::bergman_disk_weighted) {
        detail::demote_to_evidence(l.criterion);
        l.criterion.notes.push_back("weighted Bergman evidence mode (Luecking analogue)");
      }
      record(l.criterion);
    });
    if (sp.p == 2.0) {
      guarded("berezin-scan", [&] { record(berezin_scan(spec, mu, opt.berezin_grid, policy).criterion); });
      guarded("kernel-scan", [&] {
        auto k = kernel_scan(spec, opt.kernel_grid, policy);
        record(k.criterion);
      });
    } else {
      guarded("test-function-scan", [&] { record(test_function_scan(spec, opt.kernel_grid, policy).criterion); });
    }
    if (sp.family == Family::bergman_disk_weighted) {
      rep.evidence["mode"] = "weighted Bergman evidence mode: no verdict is claimed from these criteria";
      json paired = json::object();
      for (const char* id : {"luecking", "berezin-scan"})
        for (const auto& c : rep.criteria)
          if (c.id == id && c.grid.contains("evidence_verdict"))
            paired[id] = c.grid["evidence_verdict"];
      rep.evidence["paired_verdicts"] = paired;
    }
  }

  if (sp.p == 2.0 && opt.section_size > 0) {
    try {
      auto m = wco_matrix(spec, opt.section_size);
      rep.evidence["finite_section_sigma"] = {{"n", opt.section_size},
                                              {"sigma_min", smallest_singular(m)},
                                              {"degree_overflow", m.degree_overflow},
                                              {"note", "corroboration only"}};
    } catch (const std::exception& e) {
      rep.evidence["finite_section_sigma"] = {{"error", e.what()}};
    }
  }
  rep.assess();
  return rep;
}

} // namespace ktl
