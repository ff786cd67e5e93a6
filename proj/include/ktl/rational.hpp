#pragma once

#include "expr.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <vector>

namespace ktl {

/// Polynomial with ascending complex coefficients.
using Poly = std::vector<cplx>;

inline void trim(Poly& p, double rel_tol = 1e-14)
{
  double scale = 0.0;
  for (const auto& c : p)
    scale = std::max(scale, std::abs(c));
  while (p.size() > 1 && std::abs(p.back()) <= rel_tol * scale)
    p.pop_back();
  if (p.empty())
    p.push_back(0.0);
}

inline int degree(const Poly& p)
{
  Poly q = p;
  trim(q);
  return (q.size() == 1 && q[0] == cplx(0.0)) ? -1 : static_cast<int>(q.size()) - 1;
}

inline Poly operator+(const Poly& a, const Poly& b)
{
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k)
    r[k] += a[k];
  for (std::size_t k = 0; k < b.size(); ++k)
    r[k] += b[k];
  return r;
}

inline Poly operator*(cplx s, const Poly& a)
{
  Poly r = a;
  for (auto& c : r)
    c *= s;
  return r;
}

inline Poly operator-(const Poly& a, const Poly& b) { return a + (-1.0 * b); }

inline Poly operator*(const Poly& a, const Poly& b)
{
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      r[i + j] += a[i] * b[j];
  return r;
}

inline Poly poly_pow(const Poly& a, int n)
{
  Poly r{1.0};
  for (int k = 0; k < n; ++k)
    r = r * a;
  return r;
}

inline cplx poly_eval(const Poly& p, cplx z)
{
  cplx acc = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it)
    acc = acc * z + *it;
  return acc;
}

inline Poly derivative(const Poly& p)
{
  if (p.size() <= 1)
    return Poly{0.0};
  Poly d(p.size() - 1);
  for (std::size_t k = 1; k < p.size(); ++k)
    d[k - 1] = static_cast<double>(k) * p[k];
  return d;
}

/// All complex roots (with multiplicity) via the companion matrix.
inline std::vector<cplx> roots(Poly p)
{
  trim(p);
  const int n = static_cast<int>(p.size()) - 1;
  if (n <= 0)
    return {};
  if (n == 1)
    return {-p[0] / p[1]};
  if (n == 2) {
    cplx disc = std::sqrt(p[1] * p[1] - 4.0 * p[2] * p[0]);
    cplx q = -0.5 * (p[1] + (std::real(std::conj(p[1]) * disc) >= 0 ? disc : -disc));
    if (q == cplx(0.0))
      return {0.0, 0.0};
    return {q / p[2], p[0] / q};
  }
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k)
    companion(0, k) = -p[n - 1 - k] / p[n];
  for (int k = 1; k < n; ++k)
    companion(k, k - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
  std::vector<cplx> r(n);
  for (int k = 0; k < n; ++k)
    r[k] = es.eigenvalues()(k);
  return r;
}

struct Rational
{
  Poly num{0.0};
  Poly den{1.0};

  cplx operator()(cplx z) const { return poly_eval(num, z) / poly_eval(den, z); }

  cplx derivative_at(cplx z) const
  {
    cplx q = poly_eval(den, z);
    return (poly_eval(ktl::derivative(num), z) * q - poly_eval(num, z) * poly_eval(ktl::derivative(den), z)) / (q * q);
  }

  /// Degree as a map of the Riemann sphere.
  int degree() const { return std::max(ktl::degree(num), ktl::degree(den)); }

  bool is_polynomial() const { return ktl::degree(den) == 0; }
};

namespace detail {

inline Rational make_rational(Poly n, Poly d)
{
  trim(n);
  trim(d);
  return {std::move(n), std::move(d)};
}

// P(A/B)·B^n for P of degree ≤ n
inline Poly homogenize(const Poly& p, const Poly& a, const Poly& b, std::size_t n)
{
  Poly r{0.0};
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] != cplx(0.0))
      r = r + p[k] * (poly_pow(a, static_cast<int>(k)) * poly_pow(b, static_cast<int>(n - k)));
  return r;
}

inline std::optional<Rational> to_rational(const ExprNode& n)
{
  auto unary = [&]() { return to_rational(*n.lhs); };
  switch (n.op) {
    case ExprOp::constant: return Rational{{n.value}, {1.0}};
    case ExprOp::variable: return Rational{{0.0, 1.0}, {1.0}};
    case ExprOp::add:
    case ExprOp::sub:
    case ExprOp::mul:
    case ExprOp::div: {
      auto a = to_rational(*n.lhs), b = to_rational(*n.rhs);
      if (!a || !b)
        return std::nullopt;
      switch (n.op) {
        case ExprOp::add: return make_rational(a->num * b->den + b->num * a->den, a->den * b->den);
        case ExprOp::sub: return make_rational(a->num * b->den - b->num * a->den, a->den * b->den);
        case ExprOp::mul: return make_rational(a->num * b->num, a->den * b->den);
        default: return make_rational(a->num * b->den, a->den * b->num);
      }
    }
    case ExprOp::neg: {
      auto a = unary();
      if (!a)
        return std::nullopt;
      return Rational{-1.0 * a->num, a->den};
    }
    case ExprOp::pow: {
      auto a = unary();
      if (!a)
        return std::nullopt;
      int e = std::abs(n.exponent);
      Poly pn = poly_pow(a->num, e), pd = poly_pow(a->den, e);
      return n.exponent >= 0 ? make_rational(pn, pd) : make_rational(pd, pn);
    }
    case ExprOp::compose: {
      auto f = to_rational(*n.lhs), g = to_rational(*n.rhs);
      if (!f || !g)
        return std::nullopt;
      std::size_t deg = std::max(f->num.size(), f->den.size()) - 1;
      return make_rational(homogenize(f->num, g->num, g->den, deg), homogenize(f->den, g->num, g->den, deg));
    }
    case ExprOp::blaschke: {
      auto g = unary();
      if (!g)
        return std::nullopt;
      cplx a = n.value;
      return make_rational(a * g->den - g->num, g->den - std::conj(a) * g->num);
    }
    case ExprOp::cayley: {
      auto g = unary();
      if (!g)
        return std::nullopt;
      return make_rational(g->den - g->num, g->den + g->num);
    }
    case ExprOp::series: {
      auto g = unary();
      if (!g)
        return std::nullopt;
      Poly p(n.coeffs.begin(), n.coeffs.end());
      std::size_t deg = p.size() - 1;
      return make_rational(homogenize(p, g->num, g->den, deg), poly_pow(g->den, static_cast<int>(deg)));
    }
    case ExprOp::exp: return std::nullopt;
  }
  return std::nullopt;
}

} // namespace detail

/// Reduce a symbol to P/Q when it is built only from rational operations.
/// Common factors are not cancelled.
inline std::optional<Rational> to_rational(const Expr& e) { return detail::to_rational(e.root()); }

/// Degree of a polynomial symbol; nullopt when the symbol is not a polynomial.
inline std::optional<int> polynomial_degree(const Expr& e)
{
  auto r = to_rational(e);
  if (!r || !r->is_polynomial())
    return std::nullopt;
  return std::max(0, degree(r->num));
}

/// Solutions z of psi(z) = w, verified against the tree and polished by Newton steps.
/// Spurious roots produced by uncancelled common factors are discarded.
inline std::vector<cplx> preimages(const Rational& psi, const Expr& tree, cplx w)
{
  Poly eq = psi.num - w * psi.den;
  std::vector<cplx> out;
  Poly deq = derivative(eq);
  for (cplx z : roots(eq)) {
    for (int it = 0; it < 3; ++it) {
      cplx d = poly_eval(deq, z);
      if (d == cplx(0.0))
        break;
      z -= poly_eval(eq, z) / d;
    }
    auto v = tree.try_eval(z);
    if (v && std::abs(*v - w) <= 1e-8 * (1.0 + std::abs(w)) && std::abs(poly_eval(psi.den, z)) > 1e-12)
      out.push_back(z);
  }
  return out;
}

/// Evaluates a symbol through its rational form when it has one of modest
/// degree (much faster than walking the tree), otherwise through the tree.
class CompiledExpr
{
public:
  explicit CompiledExpr(Expr e, int max_degree = 32) : expr_(std::move(e))
  {
    auto r = to_rational(expr_);
    if (r && r->degree() <= max_degree)
      rational_ = std::move(r);
  }

  cplx operator()(cplx z) const
  {
    if (rational_) {
      cplx q = poly_eval(rational_->den, z);
      if (q != cplx(0.0)) {
        cplx v = poly_eval(rational_->num, z) / q;
        if (std::isfinite(v.real()) && std::isfinite(v.imag()))
          return v;
      }
    }
    return expr_(z);
  }

  const Expr& expr() const { return expr_; }
  const std::optional<Rational>& rational() const { return rational_; }

private:
  Expr expr_;
  std::optional<Rational> rational_;
};

} // namespace ktl
