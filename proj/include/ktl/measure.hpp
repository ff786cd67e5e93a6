#pragma once

#include "boundary.hpp"
#include "policy.hpp"
#include "rational.hpp"
#include "self_map.hpp"
#include "spaces.hpp"

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace ktl {

inline constexpr std::uint64_t default_seed = 20240601;

/// Seed for all Monte-Carlo choices; KTL_SEED overrides the default.
inline std::uint64_t resolve_seed(std::uint64_t fallback = default_seed)
{
  if (const char* s = std::getenv("KTL_SEED")) {
    char* end = nullptr;
    auto v = std::strtoull(s, &end, 10);
    if (end && *end == '\0' && end != s)
      return v;
    throw std::invalid_argument(std::string("KTL_SEED is not an unsigned integer: ") + s);
  }
  return fallback;
}

inline const double r_boundary_default = 1.0 - std::ldexp(1.0, -20);

enum class MeasureSource { hardy, bergman, imported };

inline const char* to_string(MeasureSource s)
{
  switch (s) {
    case MeasureSource::hardy: return "hardy";
    case MeasureSource::bergman: return "bergman";
    case MeasureSource::imported: return "imported";
  }
  return "?";
}

/// Weighted point cloud representing μ_{h,ψ} on the closed disc.
struct PullbackMeasure
{
  std::vector<cplx> locations;
  std::vector<double> weights;
  std::vector<char> on_boundary;
  double boundary_mass = 0.0;
  double interior_mass = 0.0;
  MeasureSource source = MeasureSource::imported;
  double p = 2.0;
  double alpha = 0.0;
  double r_boundary = r_boundary_default;
  std::uint64_t seed = 0;

  std::size_t size() const { return locations.size(); }
  double total_mass() const { return boundary_mass + interior_mass; }

  /// Box masses are divided by ℓ for boundary-type measures, ℓ^2 for area-type.
  int carleson_exponent() const { return source == MeasureSource::bergman ? 2 : 1; }

  void push(cplx z, double w)
  {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("PullbackMeasure: weights must be finite and >= 0");
    if (std::abs(z) > 1.0 + 1e-12)
      throw std::invalid_argument("PullbackMeasure: atom outside the closed disc at " + Expr::format_constant(z));
    bool b = std::abs(z) >= r_boundary;
    locations.push_back(z);
    weights.push_back(w);
    on_boundary.push_back(b);
    (b ? boundary_mass : interior_mass) += w;
  }

  /// ∫ f dμ as an atom sum.
  template <class F>
  double integrate(const F& f) const
  {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
      s += weights[k] * f(locations[k]);
    return s;
  }
};

struct MeasureOptions
{
  std::size_t n_samples = std::size_t{1} << 20; // hardy
  int n_radial = 256;                           // bergman
  int n_angular = 1024;
  double r_boundary = r_boundary_default;
  double alpha = 0.0;                           // weighted Bergman source
  std::uint64_t seed = default_seed;
};

/// Pushforward of |h|^p dm (hardy) or |h|^p dA_α (bergman) under ψ.
inline PullbackMeasure pushforward_measure(const Expr& h, const Expr& psi, double p, MeasureSource source,
                                           const MeasureOptions& opt = {})
{
  if (source == MeasureSource::imported)
    throw std::invalid_argument("pushforward_measure: source must be hardy or bergman");
  if (!(p >= 1.0))
    throw std::invalid_argument("pushforward_measure: p must be >= 1");
  auto rep = validate_self_map(psi);
  if (!rep.pass)
    throw std::invalid_argument("pushforward_measure: psi is not a self-map of the disc: " + rep.diagnostic);

  PullbackMeasure mu;
  mu.source = source;
  mu.p = p;
  mu.r_boundary = opt.r_boundary;
  mu.seed = opt.seed;
  CompiledExpr ch(h), cpsi(psi);

  auto add = [&](cplx z, double w) {
    cplx hz = ch(z);
    cplx pz = cpsi(z);
    // boundary values of ψ may overshoot 1 by rounding
    if (std::abs(pz) > 1.0)
      pz /= std::abs(pz);
    mu.push(pz, w * (p == 2.0 ? std::norm(hz) : std::pow(std::abs(hz), p)));
  };

  if (source == MeasureSource::hardy) {
    const std::size_t n = opt.n_samples;
    if (n < 16)
      throw std::invalid_argument("pushforward_measure: n_samples must be >= 16");
    std::mt19937_64 rng(opt.seed);
    const double offset = std::uniform_real_distribution<double>(0.0, two_pi / static_cast<double>(n))(rng);
    mu.locations.reserve(n);
    mu.weights.reserve(n);
    mu.on_boundary.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
      add(std::polar(1.0, offset + two_pi * static_cast<double>(k) / static_cast<double>(n)),
          1.0 / static_cast<double>(n));
  } else {
    DiskGrid g = polar_product_grid(opt.n_radial, opt.n_angular, opt.alpha);
    mu.alpha = opt.alpha;
    mu.locations.reserve(g.size());
    mu.weights.reserve(g.size());
    mu.on_boundary.reserve(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
      add(g.nodes[k], g.weights[k]);
  }
  return mu;
}

/// Binned boundary Radon–Nikodym density g = dμ_b/dm on uniform arcs.
struct BoundaryDensity
{
  std::size_t n_bins = 0;
  std::vector<double> bin_mass;
  std::vector<double> density;
  std::vector<double> half_width;
  double ess_inf_estimate = 0.0;
  double ess_inf_half_width = 0.0;
  double total_mass = 0.0; // of the source measure
  double boundary_mass = 0.0;

  double arc_length() const { return 1.0 / static_cast<double>(n_bins); }
  double theta_begin(std::size_t b) const { return two_pi * static_cast<double>(b) / static_cast<double>(n_bins); }
};

inline std::size_t angle_bin(cplx z, std::size_t n_bins)
{
  double t = std::arg(z);
  if (t < 0.0)
    t += two_pi;
  auto b = static_cast<std::size_t>(t / two_pi * static_cast<double>(n_bins));
  return std::min(b, n_bins - 1);
}

inline BoundaryDensity rn_density_boundary(const PullbackMeasure& mu, std::size_t n_bins = 1024,
                                           double percentile_q = 1.0)
{
  if (n_bins == 0)
    throw std::invalid_argument("rn_density_boundary: n_bins must be positive");
  if (n_bins > mu.size() / 16)
    throw std::invalid_argument("rn_density_boundary: undersampled bins (" + std::to_string(n_bins) + " bins for " +
                                std::to_string(mu.size()) + " atoms)");
  BoundaryDensity d;
  d.n_bins = n_bins;
  d.bin_mass.assign(n_bins, 0.0);
  std::vector<double> sq(n_bins, 0.0);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (!mu.on_boundary[k])
      continue;
    auto b = angle_bin(mu.locations[k], n_bins);
    d.bin_mass[b] += mu.weights[k];
    sq[b] += mu.weights[k] * mu.weights[k];
  }
  const double nb = static_cast<double>(n_bins);
  d.density.resize(n_bins);
  d.half_width.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    d.density[b] = d.bin_mass[b] * nb;
    d.half_width[b] = 2.0 * nb * std::sqrt(sq[b]);
    d.boundary_mass += d.bin_mass[b];
  }
  d.total_mass = mu.total_mass();
  std::vector<std::size_t> idx(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b)
    idx[b] = b;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return d.density[a] < d.density[b]; });
  auto at = idx[static_cast<std::size_t>(std::floor(percentile_q / 100.0 * (nb - 1.0)))];
  d.ess_inf_estimate = d.density[at];
  d.ess_inf_half_width = d.half_width[at];
  return d;
}

inline CriterionResult ess_inf_criterion(const BoundaryDensity& d, const ThresholdPolicy& policy)
{
  CriterionResult r;
  r.id = "ess-inf-density";
  r.constant_estimate = d.ess_inf_estimate;
  r.verdict = policy.classify(d.ess_inf_estimate, d.ess_inf_half_width, d.total_mass);
  r.grid = {{"n_bins", d.n_bins},
            {"ess_inf_half_width", d.ess_inf_half_width},
            {"boundary_mass", d.boundary_mass},
            {"total_mass", d.total_mass}};
  if (d.total_mass == 0.0) {
    r.verdict = Verdict::not_bounded_below;
    r.notes.push_back("zero measure (h vanishes identically)");
  }
  return r;
}

/// sup over dyadic and half-shifted arcs I of μ(S(I)) / m(I)^e, where
/// S(I) = {z: arg z ∈ I, 1 - |z| ≤ m(I)} and e = 1 (boundary) or 2 (area).
inline double carleson_constant(const PullbackMeasure& mu, std::size_t n_boxes = 1024)
{
  if (n_boxes == 0)
    throw std::invalid_argument("carleson_constant: n_boxes must be positive");
  const int levels = static_cast<int>(std::floor(std::log2(static_cast<double>(n_boxes))));
  const int e = mu.carleson_exponent();
  double best = 0.0;
  for (int j = 0; j <= levels; ++j) {
    const double len = std::ldexp(1.0, -j);
    const std::size_t halves = std::size_t{2} << j;
    std::vector<double> half(halves, 0.0);
    for (std::size_t k = 0; k < mu.size(); ++k) {
      double depth = 1.0 - std::abs(mu.locations[k]);
      if (depth <= len)
        half[angle_bin(mu.locations[k], halves)] += mu.weights[k];
    }
    const double norm = e == 1 ? len : len * len;
    if (j == 0) {
      // the whole disc
      double s = 0.0;
      for (double v : half)
        s += v;
      best = std::max(best, s / norm);
      continue;
    }
    for (std::size_t b = 0; b < halves; ++b)
      best = std::max(best, (half[b] + half[(b + 1) % halves]) / norm);
  }
  return best;
}

/// ∫ |k̃_w|^2 dμ with the normalized (weighted) Bergman kernel.
inline double berezin_transform(const PullbackMeasure& mu, cplx w, std::optional<double> alpha = std::nullopt)
{
  if (!(std::abs(w) < 1.0))
    throw std::domain_error("berezin_transform: |w| must be < 1");
  const double a = alpha.value_or(mu.alpha);
  const double d = 1.0 - std::norm(w);
  const cplx wc = std::conj(w);
  double s = 0.0;
  if (a == 0.0) {
    for (std::size_t k = 0; k < mu.size(); ++k) {
      double den = std::norm(1.0 - wc * mu.locations[k]);
      s += mu.weights[k] * d * d / (den * den);
    }
  } else {
    const double c = (a + 1.0) * std::pow(d, 2.0 + a);
    for (std::size_t k = 0; k < mu.size(); ++k)
      s += mu.weights[k] * c * std::pow(std::abs(1.0 - wc * mu.locations[k]), -2.0 * (2.0 + a));
  }
  return s;
}

// ---- import / export --------------------------------------------------------

inline void export_measure_csv(const PullbackMeasure& mu, std::ostream& os)
{
  os << "location_re,location_im,weight\n" << std::setprecision(17);
  for (std::size_t k = 0; k < mu.size(); ++k)
    os << mu.locations[k].real() << ',' << mu.locations[k].imag() << ',' << mu.weights[k] << '\n';
}

inline constexpr char measure_magic[8] = {'K', 'T', 'L', 'M', 'E', 'A', 'S', '1'};

/// Flat binary: 8-byte magic, uint64 count, then (re, im, weight) doubles.
inline void export_measure_binary(const PullbackMeasure& mu, std::ostream& os)
{
  os.write(measure_magic, sizeof measure_magic);
  std::uint64_t n = mu.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    double row[3] = {mu.locations[k].real(), mu.locations[k].imag(), mu.weights[k]};
    os.write(reinterpret_cast<const char*>(row), sizeof row);
  }
}

inline PullbackMeasure import_measure_csv(std::istream& is, double p = 2.0, double r_boundary = r_boundary_default)
{
  PullbackMeasure mu;
  mu.p = p;
  mu.r_boundary = r_boundary;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#')
      continue;
    if (lineno == 1 && line.find("location_re") != std::string::npos)
      continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double re, im, w;
    if (!(ls >> re >> im >> w))
      throw std::invalid_argument("import_measure_csv: malformed line " + std::to_string(lineno));
    mu.push({re, im}, w);
  }
  return mu;
}

inline PullbackMeasure import_measure_binary(std::istream& is, double p = 2.0,
                                             double r_boundary = r_boundary_default)
{
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, measure_magic, sizeof magic) != 0)
    throw std::invalid_argument("import_measure_binary: bad magic");
  std::uint64_t n = 0;
  if (!is.read(reinterpret_cast<char*>(&n), sizeof n))
    throw std::invalid_argument("import_measure_binary: truncated header");
  PullbackMeasure mu;
  mu.p = p;
  mu.r_boundary = r_boundary;
  for (std::uint64_t k = 0; k < n; ++k) {
    double row[3];
    if (!is.read(reinterpret_cast<char*>(row), sizeof row))
      throw std::invalid_argument("import_measure_binary: truncated at atom " + std::to_string(k));
    mu.push({row[0], row[1]}, row[2]);
  }
  return mu;
}

} // namespace ktl
