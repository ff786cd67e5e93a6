#pragma once

#include "expr.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

namespace ktl {

/// |psi| may exceed 1 by this much and still count as a self-map of the disc.
inline constexpr double tol_selfmap = 1e-9;

struct SelfMapReport
{
  double max_boundary_modulus = 0.0;
  double max_interior_modulus = 0.0;
  bool pass = false;
  std::string diagnostic;
};

namespace detail {

template <class F>
void for_each_closed_disc_sample(std::size_t n_boundary, F&& f)
{
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 0; k < n_boundary; ++k)
    f(std::polar(1.0, two_pi * static_cast<double>(k) / static_cast<double>(n_boundary)), true);
  static constexpr double radii[] = {0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999};
  const std::size_t n_ang = std::clamp<std::size_t>(n_boundary / 8, 16, 512);
  for (double r : radii)
    for (std::size_t k = 0; k < n_ang; ++k)
      f(std::polar(r, two_pi * (static_cast<double>(k) + 0.5) / static_cast<double>(n_ang)), false);
}

inline Expr::NodePtr annotate(const Expr::NodePtr& n, std::size_t n_samples)
{
  if (!n)
    return n;
  auto copy = std::make_shared<ExprNode>(*n);
  copy->lhs = annotate(n->lhs, n_samples);
  copy->rhs = annotate(n->rhs, n_samples);
  if (n->op == ExprOp::div) {
    Expr den(copy->rhs);
    double scale = 0.0, min_abs = std::numeric_limits<double>::infinity();
    bool ok = true;
    for_each_closed_disc_sample(n_samples, [&](cplx z, bool) {
      auto v = den.try_eval(z);
      if (!v) {
        ok = false;
        return;
      }
      scale = std::max(scale, std::abs(*v));
      min_abs = std::min(min_abs, std::abs(*v));
    });
    copy->denominator_nonzero = ok && min_abs > 1e-12 * std::max(scale, 1e-300);
  }
  return copy;
}

} // namespace detail

/// Copy of `e` whose division nodes record whether their denominator stays
/// away from zero on a sample of the closed disc.
inline Expr annotate_denominators(const Expr& e, std::size_t n_samples = 1024)
{
  return Expr(detail::annotate(e.root_ptr(), n_samples));
}

/// Check psi(D) ⊆ D on n_samples boundary points plus an interior polar grid.
inline SelfMapReport validate_self_map(const Expr& psi, std::size_t n_samples = 4096)
{
  SelfMapReport rep;
  bool pole = false;
  detail::for_each_closed_disc_sample(n_samples, [&](cplx z, bool boundary) {
    if (pole)
      return;
    auto v = psi.try_eval(z);
    if (!v) {
      pole = true;
      rep.diagnostic = "evaluation failed (pole) at z = " + Expr::format_constant(z);
      return;
    }
    double m = std::abs(*v);
    (boundary ? rep.max_boundary_modulus : rep.max_interior_modulus) =
      std::max(boundary ? rep.max_boundary_modulus : rep.max_interior_modulus, m);
  });
  if (pole)
    return rep;
  double sup = std::max(rep.max_boundary_modulus, rep.max_interior_modulus);
  rep.pass = sup <= 1.0 + tol_selfmap;
  if (!rep.pass)
    rep.diagnostic = "sup |psi| = " + std::to_string(sup) + " exceeds 1";
  return rep;
}

} // namespace ktl
