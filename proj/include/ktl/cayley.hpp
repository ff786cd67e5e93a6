#pragma once

#include "quadrature.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace ktl {

/// M(z) = (1-z)/(1+z): the disc ↔ right half-plane map; M∘M = id.
inline cplx cayley(cplx z)
{
  if (z == cplx(-1.0))
    throw EvalError("cayley: pole at z = -1");
  return (1.0 - z) / (1.0 + z);
}

/// (Vf)(s) = f(M(s)) / (√π (1+s)), the unitary H²(D) → H²(C+).
/// Re s = 0 gives boundary values, which the half-plane norm needs.
template <class F>
cplx v_transform(const F& f, cplx s)
{
  if (!(s.real() >= 0.0))
    throw std::domain_error("v_transform: Re s must be >= 0");
  return f(cayley(s)) / (std::sqrt(std::numbers::pi) * (1.0 + s));
}

/// (V^{-1}F)(z) = √π (1 + M(z)) F(M(z)).
template <class F>
cplx v_inverse(const F& big_f, cplx z)
{
  cplx s = cayley(z);
  return std::sqrt(std::numbers::pi) * (1.0 + s) * big_f(s);
}

using HalfplaneFn = std::function<cplx(cplx)>;
using HalfplaneSharpness = std::function<double(cplx)>;

/// ‖F‖² = ∫_R |F(iy)|² dy on H²(C+), computed on the circle through
/// iy = M(e^{it}) = -i tan(t/2), dy = (1+y²)/2 dt.
inline double hardy_halfplane_norm_sq(const HalfplaneFn& big_f, const HalfplaneSharpness& sharp = {},
                                      const GradedOptions& opt = {})
{
  auto s_of = [](double t) { return cplx(0.0, -std::tan(0.5 * t)); };
  CircleRule rule = sharp ? graded_circle_rule([&](double t) { return sharp(s_of(t)); }, opt)
                          : graded_circle_rule([](double) { return 1.0; }, opt);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    cplx s = s_of(rule.t[k]);
    double y = s.imag();
    sum += rule.weights[k] * std::numbers::pi * (1.0 + y * y) * std::norm(big_f(s));
  }
  return sum;
}

/// ‖F‖² = ∫_{C+} |F|² dx dy on A²(C+), computed as π ∫_D |F(M(z))|² |M'(z)|² dA.
inline double bergman_halfplane_norm_sq(const HalfplaneFn& big_f, const HalfplaneSharpness& sharp = {},
                                        const GradedDiskOptions& opt = {})
{
  DiskGrid g = sharp ? graded_disk_rule([&](cplx z) { return sharp(cayley(z)); }, 0.0, opt)
                     : graded_disk_rule([](cplx) { return 1.0; }, 0.0, opt);
  double sum = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    cplx z = g.nodes[k];
    double jac = 4.0 / std::norm((1.0 + z) * (1.0 + z));
    sum += g.weights[k] * std::numbers::pi * jac * std::norm(big_f(cayley(z)));
  }
  return sum;
}

} // namespace ktl
