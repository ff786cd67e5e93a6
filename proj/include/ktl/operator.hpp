#pragma once

#include "measure.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace ktl {

/// W_{h,ψ} f = h · (f ∘ ψ) on a disc space.
struct WcoSpec
{
  Expr h = Expr::constant(1.0);
  Expr psi = Expr::variable();
  SpaceSpec space = SpaceSpec::hardy();
  bool prefer_tree = false; // evaluate through the expression tree (no rational fast path)

  void validate(bool allow_zero_h = false) const
  {
    if (!space.on_disk())
      throw std::invalid_argument("WcoSpec: the operator acts on a disc space");
    space.checked();
    auto rep = validate_self_map(psi);
    if (!rep.pass)
      throw std::invalid_argument("WcoSpec: psi is not a self-map of the disc: " + rep.diagnostic);
    if (!allow_zero_h) {
      bool nonzero = false;
      for (int k = 0; k < 64 && !nonzero; ++k) {
        auto v = h.try_eval(std::polar(0.5, two_pi * k / 64.0));
        nonzero = v && *v != cplx(0.0);
      }
      if (!nonzero)
        throw std::invalid_argument("WcoSpec: h vanishes identically");
    }
  }

  CompiledExpr compiled_h() const { return CompiledExpr(h, prefer_tree ? -1 : 32); }
  CompiledExpr compiled_psi() const { return CompiledExpr(psi, prefer_tree ? -1 : 32); }
};

template <class F>
cplx apply_wco(const WcoSpec& spec, const F& f, cplx z)
{
  return spec.h(z) * f(spec.psi(z));
}

struct WcoNorm
{
  double direct = 0.0;                // quadrature of |h f∘ψ|^p over the space's grid
  std::optional<double> atom_sum;     // (∫|f|^p dμ)^{1/p}
  std::optional<double> relative_gap; // |direct - atom| / direct
  std::size_t nodes = 0;
};

struct NormOptions
{
  GradedOptions circle{};
  GradedDiskOptions disk{};
  // distance-like function of w = ψ(z) vanishing where f peaks; empty = no grading
  std::function<double(cplx)> image_sharpness;
};

namespace detail {

inline double abs_pow(cplx v, double p) { return p == 2.0 ? std::norm(v) : std::pow(std::abs(v), p); }

// poles of h and ψ just outside the disc; the integrand varies on their distance scale
inline std::vector<cplx> nearby_poles(const WcoSpec& spec)
{
  std::vector<cplx> out;
  for (const Expr* e : {&spec.h, &spec.psi})
    if (auto r = to_rational(*e); r && !r->is_polynomial())
      for (cplx z : roots(r->den))
        if (std::abs(z) < 2.0)
          out.push_back(z);
  return out;
}

inline double pole_distance(const std::vector<cplx>& poles, cplx z)
{
  double d = 1.0;
  for (cplx p : poles)
    d = std::min(d, std::abs(z - p));
  return d;
}

} // namespace detail

/// ‖W f‖ in the operator's space by adaptive quadrature, optionally cross-checked
/// against the atom sum ∫ |f|^p dμ_{h,ψ}.
template <class F>
WcoNorm wco_norm(const WcoSpec& spec, const F& f, const NormOptions& opt = {},
                 const PullbackMeasure* mu = nullptr)
{
  const double p = spec.space.p;
  auto ch = spec.compiled_h();
  auto cpsi = spec.compiled_psi();
  const auto poles = detail::nearby_poles(spec);
  auto sharp = [&](cplx z) { return detail::pole_distance(poles, z); };
  WcoNorm out;
  double sum = 0.0;
  if (spec.space.family == Family::hardy_disk) {
    CircleRule rule = graded_circle_rule(
      [&](double t) {
        cplx z = std::polar(1.0, t);
        return std::min(sharp(z), opt.image_sharpness ? opt.image_sharpness(cpsi(z)) : 1.0);
      },
      opt.circle);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      cplx z = rule.node(k);
      cplx w = cpsi(z);
      if (std::abs(w) > 1.0)
        w /= std::abs(w);
      sum += rule.weights[k] * detail::abs_pow(ch(z) * f(w), p);
    }
    out.nodes = rule.size();
  } else if (spec.space.family == Family::bergman_disk || spec.space.family == Family::bergman_disk_weighted) {
    const double alpha = spec.space.family == Family::bergman_disk_weighted ? spec.space.alpha : 0.0;
    DiskGrid g = graded_disk_rule(
      [&](cplx z) { return std::min(sharp(z), opt.image_sharpness ? opt.image_sharpness(cpsi(z)) : 1.0); }, alpha,
      opt.disk);
    for (std::size_t k = 0; k < g.size(); ++k) {
      cplx z = g.nodes[k];
      sum += g.weights[k] * detail::abs_pow(ch(z) * f(cpsi(z)), p);
    }
    out.nodes = g.size();
  } else {
    throw std::invalid_argument("wco_norm: half-plane spaces are handled through the Cayley transfer");
  }
  out.direct = std::pow(sum, 1.0 / p);
  if (mu) {
    double s = mu->integrate([&](cplx w) { return detail::abs_pow(f(w), p); });
    out.atom_sum = std::pow(s, 1.0 / p);
    out.relative_gap = out.direct > 0.0 ? std::abs(out.direct - *out.atom_sum) / out.direct
                                        : std::abs(*out.atom_sum);
  }
  return out;
}

/// Norm of W k̃ for a kernel handle, with grading driven by the kernel's singularity.
inline WcoNorm wco_norm(const WcoSpec& spec, const KernelHandle& k, const PullbackMeasure* mu = nullptr)
{
  NormOptions opt;
  opt.image_sharpness = [&](cplx w) { return k.sharpness(w); };
  return wco_norm(spec, [&](cplx w) { return k(w); }, opt, mu);
}

enum class BasisTag { hardy, bergman, bergman_alpha };
enum class OperatorTag { wco, toeplitz };

inline const char* to_string(BasisTag b)
{
  switch (b) {
    case BasisTag::hardy: return "hardy";
    case BasisTag::bergman: return "bergman";
    case BasisTag::bergman_alpha: return "bergman-alpha";
  }
  return "?";
}

struct TruncatedMatrix
{
  Eigen::MatrixXcd entries;
  BasisTag basis = BasisTag::hardy;
  OperatorTag op = OperatorTag::wco;
  bool degree_overflow = false; // a column's degree reached the aliasing bound
  bool in_scope = true;         // Toeplitz: symbol real and nonnegative
  std::size_t grid_size = 0;

  Eigen::Index n() const { return entries.rows(); }

  bool is_hermitian(double tol = 1e-12) const
  {
    double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
  }
};

/// Finite section of W on the monomial ONB: entry (j,k) = c_k a_j^{(k)} / c_j with
/// a^{(k)} the Taylor coefficients of h ψ^k, read off an FFT of boundary values.
inline TruncatedMatrix wco_matrix(const WcoSpec& spec, int n, std::size_t grid_size = 0)
{
  if (spec.space.p != 2.0)
    throw std::domain_error("wco_matrix: only p = 2 spaces");
  if (n < 1)
    throw std::invalid_argument("wco_matrix: n must be >= 1");
  TruncatedMatrix m;
  switch (spec.space.family) {
    case Family::hardy_disk: m.basis = BasisTag::hardy; break;
    case Family::bergman_disk: m.basis = BasisTag::bergman; break;
    case Family::bergman_disk_weighted: m.basis = BasisTag::bergman_alpha; break;
    default: throw std::invalid_argument("wco_matrix: disc spaces only");
  }
  auto dh = polynomial_degree(spec.h);
  auto dpsi = polynomial_degree(spec.psi);
  std::size_t degree_bound = 0;
  if (dh && dpsi)
    degree_bound = static_cast<std::size_t>(*dh) + static_cast<std::size_t>(n - 1) * *dpsi;
  if (grid_size == 0) {
    grid_size = 1024;
    std::size_t want = 4 * (std::max<std::size_t>(degree_bound, static_cast<std::size_t>(n)) + 1);
    while (grid_size < want && grid_size < (std::size_t{1} << 20))
      grid_size *= 2;
  }
  if (!is_power_of_two(grid_size))
    throw std::invalid_argument("wco_matrix: grid size must be a power of two");
  m.grid_size = grid_size;
  m.degree_overflow = dh && dpsi ? degree_bound >= grid_size / 4 : false;

  auto ch = spec.compiled_h();
  auto cpsi = spec.compiled_psi();
  std::vector<cplx> hv(grid_size), pv(grid_size), col(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k) {
    cplx z = std::polar(1.0, two_pi * static_cast<double>(k) / static_cast<double>(grid_size));
    hv[k] = ch(z);
    pv[k] = cpsi(z);
  }
  std::vector<double> c(n);
  for (int j = 0; j < n; ++j)
    c[j] = monomial_basis_coeff(spec.space, j);
  m.entries = Eigen::MatrixXcd::Zero(n, n);
  col = hv;
  for (int k = 0; k < n; ++k) {
    auto coef = fourier_coefficients(col);
    for (int j = 0; j < n; ++j)
      m.entries(j, k) = c[k] * coef[j] / c[j];
    for (std::size_t t = 0; t < grid_size; ++t)
      col[t] *= pv[t];
  }
  return m;
}

/// T_n with entries ĥ(j - k) from boundary samples of the symbol.
inline TruncatedMatrix toeplitz_matrix(const BoundaryGrid& h, int n)
{
  if (n < 1)
    throw std::invalid_argument("toeplitz_matrix: n must be >= 1");
  if (h.size() < 2 * static_cast<std::size_t>(n))
    throw std::invalid_argument("toeplitz_matrix: grid must have at least 2n samples");
  TruncatedMatrix m;
  m.op = OperatorTag::toeplitz;
  m.grid_size = h.size();
  for (const auto& v : h.values())
    if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v.real())) || v.real() < -1e-12)
      m.in_scope = false;
  auto c = fourier_coefficients(h.values());
  const auto N = static_cast<long>(h.size());
  m.entries.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      m.entries(j, k) = c[static_cast<std::size_t>(((j - k) % N + N) % N)];
  return m;
}

inline constexpr int dense_cap = 2048;

inline double smallest_singular(const TruncatedMatrix& m)
{
  if (m.n() < 1)
    throw std::invalid_argument("smallest_singular: empty matrix");
  if (m.n() > dense_cap)
    throw std::invalid_argument("smallest_singular: dense decompositions are capped at n = 2048");
  if (m.is_hermitian()) {
    Eigen::MatrixXcd herm = 0.5 * (m.entries + m.entries.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().minCoeff();
  }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m.entries);
  return svd.singularValues().minCoeff();
}

inline void export_matrix_csv(const TruncatedMatrix& m, std::ostream& os)
{
  os << "row,col,re,im\n" << std::setprecision(17);
  for (Eigen::Index j = 0; j < m.n(); ++j)
    for (Eigen::Index k = 0; k < m.n(); ++k)
      os << j << ',' << k << ',' << m.entries(j, k).real() << ',' << m.entries(j, k).imag() << '\n';
}

} // namespace ktl
