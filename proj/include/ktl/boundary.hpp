#pragma once

#include "expr.hpp"
#include "quadrature.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ktl {

inline bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

/// Samples of a function at the N-th roots of unity e^{2πik/N}; each node
/// carries weight 1/N of normalized Lebesgue measure m.
class BoundaryGrid
{
public:
  BoundaryGrid() = default;

  explicit BoundaryGrid(std::vector<cplx> values) : values_(std::move(values))
  {
    if (values_.size() < 16 || !is_power_of_two(values_.size()))
      throw std::invalid_argument("BoundaryGrid: N must be a power of two >= 16, got " +
                                  std::to_string(values_.size()));
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<cplx>& values() const { return values_; }
  cplx operator[](std::size_t k) const { return values_[k]; }
  double theta(std::size_t k) const { return two_pi * static_cast<double>(k) / static_cast<double>(size()); }
  cplx node(std::size_t k) const { return std::polar(1.0, theta(k)); }

  /// ∫ |f|^p dm on the grid.
  double mean_abs_pow(double p) const
  {
    double s = 0.0;
    for (const auto& v : values_)
      s += std::pow(std::abs(v), p);
    return s / static_cast<double>(size());
  }

private:
  std::vector<cplx> values_;
};

inline BoundaryGrid sample_boundary(const Expr& f, std::size_t n)
{
  if (n < 16 || !is_power_of_two(n))
    throw std::invalid_argument("sample_boundary: N must be a power of two >= 16");
  std::vector<cplx> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx z = std::polar(1.0, two_pi * static_cast<double>(k) / static_cast<double>(n));
    auto fz = f.try_eval(z);
    if (!fz)
      throw EvalError("sample_boundary: pole at node k=" + std::to_string(k) + " (z = " + Expr::format_constant(z) +
                      ")");
    v[k] = *fz;
  }
  return BoundaryGrid(std::move(v));
}

/// c_n = (1/N) Σ_k f_k e^{-2πikn/N}, indices n mod N.
inline std::vector<cplx> fourier_coefficients(std::span<const cplx> samples)
{
  Eigen::FFT<double> fft;
  std::vector<cplx> in(samples.begin(), samples.end()), out;
  fft.fwd(out, in);
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (auto& c : out)
    c *= inv;
  return out;
}

/// f_k = Σ_n c_n e^{2πikn/N}.
inline std::vector<cplx> synthesize(std::span<const cplx> coeffs)
{
  Eigen::FFT<double> fft;
  std::vector<cplx> in(coeffs.begin(), coeffs.end()), out;
  fft.inv(out, in);
  const double n = static_cast<double>(coeffs.size());
  for (auto& v : out)
    v *= n;
  return out;
}

/// Outer function F = exp(G) with G(z) = Σ_{n=0}^{N/2} a_n z^n, the discrete
/// Herglotz transform of log|F| on an N-point boundary grid. On the grid
/// nodes Re G reproduces the prescribed log-modulus exactly.
class OuterFunction
{
public:
  OuterFunction() = default;
  explicit OuterFunction(std::vector<cplx> log_coeffs, std::size_t grid_size)
    : log_coeffs_(std::move(log_coeffs)), grid_size_(grid_size)
  {}

  const std::vector<cplx>& log_coefficients() const { return log_coeffs_; }
  std::size_t grid_size() const { return grid_size_; }

  cplx log_value(cplx z) const
  {
    cplx acc = 0.0;
    for (auto it = log_coeffs_.rbegin(); it != log_coeffs_.rend(); ++it)
      acc = acc * z + *it;
    return acc;
  }

  cplx operator()(cplx z) const { return std::exp(log_value(z)); }

  /// Values at r·e^{2πik/M}, k < M, by FFT (M a power of two ≥ grid size).
  std::vector<cplx> values_on_circle(double r, std::size_t m) const
  {
    if (m < log_coeffs_.size() || !is_power_of_two(m))
      throw std::invalid_argument("values_on_circle: M must be a power of two >= the number of coefficients");
    std::vector<cplx> c(m, 0.0);
    double rn = 1.0;
    for (std::size_t n = 0; n < log_coeffs_.size(); ++n, rn *= r)
      c[n] = log_coeffs_[n] * rn;
    auto g = synthesize(c);
    for (auto& v : g)
      v = std::exp(v);
    return g;
  }

  std::vector<cplx> boundary_values() const { return values_on_circle(1.0, grid_size_); }

  /// Winding number of F around 0 along |z| = r; zero iff F has no zeros in |z| < r.
  int winding_number(double r = 0.999) const
  {
    auto v = values_on_circle(r, std::max<std::size_t>(grid_size_ * 4, 64));
    double total = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
      total += std::arg(v[(k + 1) % v.size()] / v[k]);
    return static_cast<int>(std::lround(total / two_pi));
  }

private:
  std::vector<cplx> log_coeffs_;
  std::size_t grid_size_ = 0;
};

/// Outer function whose modulus equals `modulus` at the grid nodes.
inline OuterFunction outer_from_modulus(std::span<const double> modulus)
{
  const std::size_t n = modulus.size();
  if (n < 16 || !is_power_of_two(n))
    throw std::invalid_argument("outer_from_modulus: N must be a power of two >= 16");
  std::vector<cplx> logw(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(modulus[k] > 0.0) || !std::isfinite(modulus[k]))
      throw std::domain_error("outer_from_modulus: modulus must be positive (node " + std::to_string(k) + ")");
    logw[k] = std::log(modulus[k]);
  }
  auto c = fourier_coefficients(logw);
  std::vector<cplx> a(n / 2 + 1);
  a[0] = c[0].real();
  for (std::size_t m = 1; m < n / 2; ++m)
    a[m] = 2.0 * c[m];
  a[n / 2] = c[n / 2].real();
  return OuterFunction(std::move(a), n);
}

inline OuterFunction outer_from_modulus(const BoundaryGrid& w)
{
  std::vector<double> m(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (std::abs(w[k].imag()) > 1e-12 * (1.0 + std::abs(w[k].real())))
      throw std::domain_error("outer_from_modulus: modulus samples must be real");
    m[k] = w[k].real();
  }
  return outer_from_modulus(m);
}

/// Modulus floor applied before taking logarithms of |h|.
inline constexpr double eps_floor = 1e-12;

struct FactorizationResult
{
  OuterFunction outer;
  BoundaryGrid inner_boundary; // h / outer on the grid
  double residual = 0.0;       // max | |inner| - 1 |
  int outer_winding = 0;       // zeros of outer in |z| < 0.999 (expected 0)
};

inline FactorizationResult inner_outer_factor(const Expr& h, std::size_t n)
{
  BoundaryGrid hb = sample_boundary(h, n);
  double hmax = 0.0;
  for (const auto& v : hb.values())
    hmax = std::max(hmax, std::abs(v));
  if (hmax == 0.0)
    throw std::domain_error("inner_outer_factor: zero symbol");
  std::vector<double> mod(n);
  for (std::size_t k = 0; k < n; ++k)
    mod[k] = std::max(std::abs(hb[k]), eps_floor * hmax);
  FactorizationResult res;
  res.outer = outer_from_modulus(mod);
  auto ob = res.outer.boundary_values();
  std::vector<cplx> inner(n);
  for (std::size_t k = 0; k < n; ++k) {
    inner[k] = hb[k] / ob[k];
    res.residual = std::max(res.residual, std::abs(std::abs(inner[k]) - 1.0));
  }
  res.inner_boundary = BoundaryGrid(std::move(inner));
  res.outer_winding = res.outer.winding_number(0.999);
  return res;
}

} // namespace ktl
