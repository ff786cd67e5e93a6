#pragma once

#include "measure.hpp"

#include <functional>
#include <memory>

namespace ktl {

/// Density of a measure on the disc with respect to normalized area A
/// (or A_α = (1-|z|^2)^α dA for weighted sources). Three backends: a
/// pointwise function, the change-of-variables sum over preimages of a
/// rational ψ, and a histogram on polar boxes built from atoms.
class DiskDensity
{
public:
  enum class Backend { function, preimage, histogram };

  static DiskDensity from_function(std::function<double(cplx)> g, int mass_radial = 128, int mass_angular = 512)
  {
    DiskDensity d;
    d.backend_ = Backend::function;
    d.fn_ = std::move(g);
    DiskGrid grid = polar_product_grid(mass_radial, mass_angular);
    for (std::size_t k = 0; k < grid.size(); ++k)
      d.mass_ += grid.weights[k] * d.fn_(grid.nodes[k]);
    return d;
  }

  /// g(w) = Σ_{ψ(z)=w, z∈D} |h(z)|^p (1-|z|^2)^α / |ψ'(z)|^2, divided by (1-|w|^2)^α.
  static DiskDensity from_pullback(const Expr& h, const Expr& psi, double p, double alpha = 0.0)
  {
    auto rat = to_rational(psi);
    if (!rat)
      throw std::invalid_argument("DiskDensity::from_pullback: psi must be rational");
    DiskDensity d;
    d.backend_ = Backend::preimage;
    auto ch = std::make_shared<CompiledExpr>(h);
    auto r = std::make_shared<Rational>(*rat);
    auto tree = std::make_shared<Expr>(psi);
    d.fn_ = [=](cplx w) {
      double s = 0.0;
      for (cplx z : preimages(*r, *tree, w)) {
        double az = std::norm(z);
        if (az >= 1.0)
          continue;
        double jac = std::norm(r->derivative_at(z));
        if (jac == 0.0)
          continue;
        double hz = p == 2.0 ? std::norm((*ch)(z)) : std::pow(std::abs((*ch)(z)), p);
        double wgt = alpha == 0.0 ? 1.0 : std::pow((1.0 - az) / (1.0 - std::norm(w)), alpha);
        s += hz * wgt / jac;
      }
      return s;
    };
    DiskGrid grid = polar_product_grid(128, 512, alpha);
    CompiledExpr hh(h);
    for (std::size_t k = 0; k < grid.size(); ++k)
      d.mass_ += grid.weights[k] * std::pow(std::abs(hh(grid.nodes[k])), p);
    return d;
  }

  /// Histogram on n_radial uniform rings × n_angular sectors.
  static DiskDensity from_measure(const PullbackMeasure& mu, int n_radial, int n_angular)
  {
    if (n_radial < 1 || n_angular < 1)
      throw std::invalid_argument("DiskDensity::from_measure: grid sizes must be positive");
    DiskDensity d;
    d.backend_ = Backend::histogram;
    d.nr_ = n_radial;
    d.na_ = n_angular;
    d.cells_.assign(static_cast<std::size_t>(n_radial) * n_angular, 0.0);
    for (std::size_t k = 0; k < mu.size(); ++k) {
      d.cells_[d.cell_index(mu.locations[k])] += mu.weights[k];
      d.mass_ += mu.weights[k];
    }
    for (int i = 0; i < n_radial; ++i) {
      double r0 = static_cast<double>(i) / n_radial, r1 = static_cast<double>(i + 1) / n_radial;
      double area = (r1 * r1 - r0 * r0) / n_angular;
      for (int j = 0; j < n_angular; ++j)
        d.cells_[static_cast<std::size_t>(i) * n_angular + j] /= area;
    }
    return d;
  }

  Backend backend() const { return backend_; }
  double mass() const { return mass_; }
  bool pointwise() const { return backend_ != Backend::histogram; }

  double operator()(cplx w) const
  {
    if (backend_ == Backend::histogram)
      return cells_[cell_index(w)];
    return fn_(w);
  }

  /// Largest cell diameter among cells meeting {|z| > 1 - rho}; 0 for pointwise backends.
  double resolution(double rho) const
  {
    if (backend_ != Backend::histogram)
      return 0.0;
    const double dr = 1.0 / nr_, dt = two_pi / na_;
    double worst = 0.0;
    for (int i = 0; i < nr_; ++i) {
      double r1 = static_cast<double>(i + 1) / nr_;
      if (r1 > 1.0 - rho)
        worst = std::max(worst, std::hypot(dr, r1 * dt));
    }
    return worst;
  }

private:
  std::size_t cell_index(cplx z) const
  {
    int i = std::min(nr_ - 1, static_cast<int>(std::abs(z) * nr_));
    return static_cast<std::size_t>(i) * na_ + angle_bin(z, static_cast<std::size_t>(na_));
  }

  Backend backend_ = Backend::function;
  std::function<double(cplx)> fn_;
  int nr_ = 0, na_ = 0;
  std::vector<double> cells_;
  double mass_ = 0.0;
};

struct DiscGrid
{
  int n_centers = 256;
  std::vector<double> radii = default_radii();
  int lattice = 16;   // cells per side of the bounding square, cell size = radius / 8
  int subsamples = 8; // per cell side, for geometry

  static std::vector<double> default_radii()
  {
    std::vector<double> r;
    for (int j = 0; j < 12; ++j)
      r.push_back(std::ldexp(1.0, -j));
    return r;
  }
};

inline std::vector<double> log_spaced(double lo, double hi, int n)
{
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k)
    v[k] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
  return v;
}

inline std::vector<double> default_delta_grid(double mass)
{
  if (!(mass > 0.0))
    return {0.0};
  return log_spaced(1e-4 * mass, mass, 16);
}

struct LueckingResult
{
  CriterionResult criterion;
  double best_delta = 0.0;
  double best_fraction = 0.0;
  std::vector<double> deltas;
  std::vector<double> inf_fraction; // per delta
  std::vector<cplx> worst_center;   // per delta
  std::vector<double> worst_radius; // per delta
};

/// Area fraction of {g > δ} inside D(ζ, ρ) ∩ D, infimum over boundary-centred
/// discs, best δ reported as the certificate.
inline LueckingResult luecking_check(const DiskDensity& d, std::vector<double> delta_grid, const DiscGrid& discs,
                                     const ThresholdPolicy& policy)
{
  auto t0 = std::chrono::steady_clock::now();
  if (delta_grid.empty())
    delta_grid = default_delta_grid(d.mass());
  if (discs.radii.empty() || discs.n_centers < 1 || discs.lattice < 1 || discs.subsamples < 1)
    throw std::invalid_argument("luecking_check: empty disc grid");
  for (double rho : discs.radii) {
    double res = d.resolution(rho);
    if (res > rho / 8.0)
      throw std::invalid_argument("luecking_check: density cells (diameter " + std::to_string(res) +
                                  ") too coarse for disc radius " + std::to_string(rho) + " (need <= radius/8)");
  }

  const std::size_t nd = delta_grid.size();
  LueckingResult res;
  res.deltas = delta_grid;
  res.inf_fraction.assign(nd, std::numeric_limits<double>::infinity());
  res.worst_center.assign(nd, 0.0);
  res.worst_radius.assign(nd, 0.0);

  const int L = discs.lattice, S = discs.subsamples;
  std::vector<double> above(nd);
  std::vector<double> sub_vals;
  for (int j = 0; j < discs.n_centers; ++j) {
    const cplx zeta = std::polar(1.0, two_pi * j / discs.n_centers);
    for (double rho : discs.radii) {
      const double cell = 2.0 * rho / L, sub = cell / S;
      double inside_total = 0.0;
      std::fill(above.begin(), above.end(), 0.0);
      for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) {
          cplx corner = zeta + cplx(-rho + a * cell, -rho + b * cell);
          int count = 0;
          cplx centroid = 0.0;
          sub_vals.clear();
          for (int u = 0; u < S; ++u)
            for (int v = 0; v < S; ++v) {
              cplx pt = corner + cplx((u + 0.5) * sub, (v + 0.5) * sub);
              if (std::norm(pt - zeta) < rho * rho && std::norm(pt) < 1.0) {
                ++count;
                centroid += pt;
                if (d.pointwise() && d.backend() == DiskDensity::Backend::function)
                  sub_vals.push_back(d(pt));
              }
            }
          if (count == 0)
            continue;
          inside_total += count;
          if (!sub_vals.empty()) {
            for (double g : sub_vals)
              for (std::size_t k = 0; k < nd; ++k)
                if (g > delta_grid[k])
                  above[k] += 1.0;
          } else {
            double g = d(centroid / static_cast<double>(count));
            for (std::size_t k = 0; k < nd; ++k)
              if (g > delta_grid[k])
                above[k] += count;
          }
        }
      if (inside_total == 0.0)
        continue;
      for (std::size_t k = 0; k < nd; ++k) {
        double f = above[k] / inside_total;
        if (f < res.inf_fraction[k]) {
          res.inf_fraction[k] = f;
          res.worst_center[k] = zeta;
          res.worst_radius[k] = rho;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 0; k < nd; ++k)
    if (res.inf_fraction[k] >= res.inf_fraction[best])
      best = k;
  res.best_delta = delta_grid[best];
  res.best_fraction = res.inf_fraction[best];

  CriterionResult& c = res.criterion;
  c.id = "luecking";
  c.constant_estimate = res.best_fraction;
  if (res.best_fraction >= policy.luecking_pass)
    c.verdict = Verdict::bounded_below;
  else if (res.best_fraction <= policy.luecking_fail)
    c.verdict = Verdict::not_bounded_below;
  else
    c.verdict = Verdict::inconclusive;
  c.grid = {{"n_centers", discs.n_centers},
            {"radii", discs.radii},
            {"lattice", discs.lattice},
            {"subsamples", discs.subsamples},
            {"n_deltas", nd},
            {"best_delta", res.best_delta},
            {"mass", d.mass()},
            {"worst_center", {res.worst_center[best].real(), res.worst_center[best].imag()}},
            {"worst_radius", res.worst_radius[best]}};
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

} // namespace ktl
