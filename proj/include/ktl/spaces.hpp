#pragma once

#include "boundary.hpp"
#include "quadrature.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace ktl {

enum class Family { hardy_disk, bergman_disk, bergman_disk_weighted, hardy_halfplane, bergman_halfplane };

inline const char* to_string(Family f)
{
  switch (f) {
    case Family::hardy_disk: return "Hardy-disk";
    case Family::bergman_disk: return "Bergman-disk";
    case Family::bergman_disk_weighted: return "Bergman-disk-weighted";
    case Family::hardy_halfplane: return "Hardy-halfplane";
    case Family::bergman_halfplane: return "Bergman-halfplane";
  }
  return "?";
}

struct SpaceSpec
{
  Family family = Family::hardy_disk;
  double p = 2.0;
  double alpha = 0.0;

  static SpaceSpec hardy(double p = 2.0) { return SpaceSpec{Family::hardy_disk, p, 0.0}.checked(); }
  static SpaceSpec bergman(double p = 2.0) { return SpaceSpec{Family::bergman_disk, p, 0.0}.checked(); }
  static SpaceSpec weighted_bergman(double alpha)
  {
    return SpaceSpec{Family::bergman_disk_weighted, 2.0, alpha}.checked();
  }
  static SpaceSpec hardy_halfplane() { return SpaceSpec{Family::hardy_halfplane, 2.0, 0.0}; }
  static SpaceSpec bergman_halfplane() { return SpaceSpec{Family::bergman_halfplane, 2.0, 0.0}; }

  SpaceSpec checked() const
  {
    if (!(p >= 1.0) || !std::isfinite(p))
      throw std::invalid_argument("SpaceSpec: p must be >= 1");
    if (!(alpha > -1.0))
      throw std::invalid_argument("SpaceSpec: alpha must be > -1");
    return *this;
  }

  bool is_hardy() const { return family == Family::hardy_disk || family == Family::hardy_halfplane; }
  bool on_disk() const { return family != Family::hardy_halfplane && family != Family::bergman_halfplane; }

  /// Conjugate index p' = p/(p-1); only defined for p > 1.
  double conjugate() const
  {
    if (!(p > 1.0))
      throw std::domain_error("conjugate index undefined for p = 1");
    return p / (p - 1.0);
  }

  std::string str() const
  {
    std::string s = to_string(family);
    s += "(p=" + std::to_string(p);
    if (family == Family::bergman_disk_weighted)
      s += ", alpha=" + std::to_string(alpha);
    return s + ")";
  }
};

/// Norm of the point-evaluation functional at lambda on H^{p'}, (1-|λ|^2)^{-1/p'},
/// used as the kernel-norm surrogate for H^p. For p = 2 it is exactly ‖k_λ‖_2.
inline double kernel_norm_hardy(cplx lambda, double p)
{
  if (!(std::abs(lambda) < 1.0))
    throw std::domain_error("kernel_norm_hardy: |lambda| must be < 1");
  if (!(p > 1.0))
    throw std::domain_error("kernel_norm_hardy: requires 1 < p < infinity");
  const double pc = p / (p - 1.0);
  return std::pow(1.0 - std::norm(lambda), -1.0 / pc);
}

/// Exact ‖k_λ‖_p on H^p: ∫|1 - conj(λ)ζ|^{-p} dm = Σ_n ((p/2)_n / n!)^2 |λ|^{2n}.
inline double hardy_kernel_lp_norm(cplx lambda, double p)
{
  const double x = std::norm(lambda);
  if (!(x < 1.0))
    throw std::domain_error("hardy_kernel_lp_norm: |lambda| must be < 1");
  if (p == 2.0)
    return 1.0 / std::sqrt(1.0 - x);
  const double a = 0.5 * p;
  double term = 1.0, sum = 1.0;
  for (long n = 0; n < 100000000L; ++n) {
    double ratio = (n + a) / (n + 1.0);
    ratio *= ratio * x;
    term *= ratio;
    sum += term;
    if (ratio < 1.0 && term < 1e-17 * sum)
      break;
  }
  return std::pow(sum, 1.0 / p);
}

enum class KernelKind { reproducing_kernel, test_function };

/// A reproducing kernel or test function of a space, anchored at `point`
/// (λ in the disc or w in the right half-plane).
class KernelHandle
{
public:
  KernelHandle(SpaceSpec space, cplx point, KernelKind kind, bool normalized = true)
    : space_(space), point_(point), kind_(kind), normalized_(normalized)
  {
    if (space_.on_disk() ? !(std::abs(point_) < 1.0) : !(point_.real() > 0.0))
      throw std::domain_error("KernelHandle: point outside the open domain");
    const double d = 1.0 - std::norm(point_);
    switch (space_.family) {
      case Family::hardy_disk:
        if (kind_ == KernelKind::reproducing_kernel) {
          exponent_ = 1.0;
          scale_ = normalized_ ? 1.0 / hardy_kernel_lp_norm(point_, space_.p) : 1.0;
        } else {
          exponent_ = 2.0 / space_.p;
          scale_ = normalized_ ? std::pow(d, 1.0 / space_.p) : 1.0;
        }
        break;
      case Family::bergman_disk:
        if (kind_ == KernelKind::reproducing_kernel) {
          if (space_.p != 2.0)
            throw std::domain_error("KernelHandle: Bergman reproducing kernel only for p = 2");
          exponent_ = 2.0;
          scale_ = normalized_ ? d : 1.0;
        } else {
          exponent_ = 4.0 / space_.p;
          scale_ = normalized_ ? std::pow(d, 2.0 / space_.p) : 1.0;
        }
        break;
      case Family::bergman_disk_weighted:
        if (kind_ != KernelKind::reproducing_kernel)
          throw std::domain_error("KernelHandle: no test functions for weighted Bergman spaces");
        exponent_ = 2.0 + space_.alpha;
        scale_ = normalized_ ? std::sqrt(space_.alpha + 1.0) * std::pow(d, 1.0 + 0.5 * space_.alpha)
                             : space_.alpha + 1.0;
        break;
      case Family::hardy_halfplane:
        if (kind_ != KernelKind::reproducing_kernel)
          throw std::domain_error("KernelHandle: only reproducing kernels on the half-plane");
        exponent_ = 1.0;
        scale_ = normalized_ ? std::sqrt(point_.real() / std::numbers::pi) : 1.0 / two_pi;
        break;
      case Family::bergman_halfplane:
        if (kind_ != KernelKind::reproducing_kernel)
          throw std::domain_error("KernelHandle: only reproducing kernels on the half-plane");
        exponent_ = 2.0;
        scale_ = normalized_ ? 2.0 * point_.real() / std::sqrt(std::numbers::pi) : 1.0 / std::numbers::pi;
        break;
    }
  }

  const SpaceSpec& space() const { return space_; }
  cplx point() const { return point_; }
  KernelKind kind() const { return kind_; }
  bool normalized() const { return normalized_; }

  /// Principal-branch evaluation; 1 - conj(w)z has positive real part on the closed disc.
  cplx operator()(cplx z) const
  {
    cplx base = space_.on_disk() ? 1.0 - std::conj(point_) * z : z + std::conj(point_);
    if (base == cplx(0.0))
      throw EvalError("kernel singularity hit");
    if (exponent_ == 1.0)
      return scale_ / base;
    if (exponent_ == 2.0)
      return scale_ / (base * base);
    return scale_ * std::pow(base, -exponent_);
  }

  /// Distance-like quantity that vanishes at the kernel's singularity; drives graded quadrature.
  double sharpness(cplx z) const
  {
    if (space_.on_disk())
      return std::abs(1.0 - std::conj(point_) * z);
    // |1 - conj(M(w)) M(s)|: the disc distance behind the Cayley transform
    return 2.0 * std::abs(z + std::conj(point_)) / (std::abs(1.0 + z) * std::abs(1.0 + point_));
  }

private:
  SpaceSpec space_;
  cplx point_;
  KernelKind kind_;
  bool normalized_;
  double exponent_ = 1.0;
  double scale_ = 1.0;
};

inline cplx eval_kernel(const KernelHandle& handle, cplx z) { return handle(z); }

namespace detail {

inline double pth_root_sum(std::span<const cplx> values, std::span<const double> weights, double p)
{
  double s = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k)
    s += weights[k] * std::pow(std::abs(values[k]), p);
  return std::pow(s, 1.0 / p);
}

} // namespace detail

/// Hardy-disk norm of boundary samples on a circle rule.
inline double space_norm(std::span<const cplx> values, const CircleRule& rule, const SpaceSpec& space)
{
  if (space.family != Family::hardy_disk)
    throw std::invalid_argument("space_norm: circle samples need a Hardy-disk space, got " + space.str());
  if (values.size() != rule.size())
    throw std::invalid_argument("space_norm: sample count does not match the rule");
  return detail::pth_root_sum(values, rule.weights, space.p);
}

inline double space_norm(const BoundaryGrid& f, const SpaceSpec& space)
{
  return space_norm(f.values(), uniform_circle_rule(f.size()), space);
}

/// Bergman-disk (possibly weighted) norm of samples on a disc grid.
inline double space_norm(std::span<const cplx> values, const DiskGrid& grid, const SpaceSpec& space)
{
  if (space.family != Family::bergman_disk && space.family != Family::bergman_disk_weighted)
    throw std::invalid_argument("space_norm: disc samples need a Bergman-disk space, got " + space.str());
  const double alpha = space.family == Family::bergman_disk_weighted ? space.alpha : 0.0;
  if (grid.alpha != alpha)
    throw std::invalid_argument("space_norm: grid weight alpha does not match the space");
  if (values.size() != grid.size())
    throw std::invalid_argument("space_norm: sample count does not match the grid");
  return detail::pth_root_sum(values, grid.weights, space.p);
}

/// c_k with {c_k z^k} orthonormal in the p = 2 space.
inline double monomial_basis_coeff(const SpaceSpec& space, int k)
{
  if (space.p != 2.0)
    throw std::domain_error("monomial_basis_coeff: only p = 2 spaces have the monomial ONB");
  if (k < 0)
    throw std::invalid_argument("monomial_basis_coeff: k must be >= 0");
  switch (space.family) {
    case Family::hardy_disk: return 1.0;
    case Family::bergman_disk: return std::sqrt(k + 1.0);
    case Family::bergman_disk_weighted: {
      // ∫|z|^{2k}(1-|z|^2)^α dA = B(k+1, α+1); B(j+1,α+1) = B(j,α+1)·j/(j+α+1)
      double beta = 1.0 / (space.alpha + 1.0);
      for (int j = 1; j <= k; ++j)
        beta *= j / (j + space.alpha + 1.0);
      return 1.0 / std::sqrt(beta);
    }
    default: throw std::domain_error("monomial_basis_coeff: disc spaces only");
  }
}

} // namespace ktl
