#pragma once

#include "expr.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ktl {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct GaussRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss–Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1]
/// (Golub–Welsch on the Jacobi matrix).
inline GaussRule gauss_jacobi(int n, double alpha = 0.0, double beta = 0.0)
{
  if (n < 1 || alpha <= -1.0 || beta <= -1.0)
    throw std::invalid_argument("gauss_jacobi: need n >= 1 and alpha, beta > -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n), sub(std::max(n - 1, 1));
  for (int k = 0; k < n; ++k) {
    double s = 2.0 * k + ab;
    diag(k) = (k == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    double s = 2.0 * k + ab;
    double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
    double den = s * s * (s + 1.0) * (s - 1.0);
    sub(k - 1) = std::sqrt(num / den);
  }
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mu0 =
    std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  if (n == 1) {
    r.nodes[0] = diag(0);
    r.weights[0] = mu0;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  for (int k = 0; k < n; ++k) {
    r.nodes[k] = es.eigenvalues()(k);
    double v0 = es.eigenvectors()(0, k);
    r.weights[k] = mu0 * v0 * v0;
  }
  return r;
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
inline GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0)
{
  GaussRule r = gauss_jacobi(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int k = 0; k < n; ++k) {
    r.nodes[k] = mid + half * r.nodes[k];
    r.weights[k] *= half;
  }
  return r;
}

/// Rule on the unit circle for normalized Lebesgue measure m:
/// ∫ f dm ≈ Σ weights[k] f(e^{i t[k]}).
struct CircleRule
{
  std::vector<double> t;
  std::vector<double> weights;

  std::size_t size() const { return t.size(); }
  cplx node(std::size_t k) const { return std::polar(1.0, t[k]); }
};

inline CircleRule uniform_circle_rule(std::size_t n, double offset = 0.0)
{
  CircleRule r;
  r.t.resize(n);
  r.weights.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k)
    r.t[k] = offset + two_pi * static_cast<double>(k) / static_cast<double>(n);
  return r;
}

struct GradedOptions
{
  int base_panels = 32;
  int order = 16;
  double kappa = 0.25;   // panel width × |q'| must stay below kappa × min q
  int samples = 9;       // sharpness samples per panel
  std::size_t max_panels = 50000;
  double min_width = 1e-15;
};

/// Composite Gauss–Legendre rule on [0, 2π) whose panels are refined where
/// `sharpness(t)` is small relative to its local slope. `sharpness` is the
/// distance-like quantity controlling an integrand peak (e.g. |1 - conj(w) psi(e^{it})|
/// for a kernel with pole 1/conj(w)). Panel ends always include 0 and π.
inline CircleRule graded_circle_rule(const std::function<double(double)>& sharpness, const GradedOptions& opt = {})
{
  struct Panel
  {
    double a, b;
  };
  std::vector<Panel> stack, leaves;
  const int nb = std::max(2, opt.base_panels + (opt.base_panels % 2));
  for (int k = nb - 1; k >= 0; --k)
    stack.push_back({two_pi * k / nb, two_pi * (k + 1) / nb});
  std::vector<double> q(opt.samples);
  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    const double h = (p.b - p.a) / (opt.samples - 1);
    double qmin = std::numeric_limits<double>::infinity(), slope = 0.0;
    for (int j = 0; j < opt.samples; ++j) {
      q[j] = sharpness(p.a + j * h);
      qmin = std::min(qmin, q[j]);
      if (j)
        slope = std::max(slope, std::abs(q[j] - q[j - 1]) / h);
    }
    bool refine = (p.b - p.a) * slope > opt.kappa * qmin || !std::isfinite(qmin);
    if (refine && p.b - p.a > opt.min_width && leaves.size() + stack.size() < opt.max_panels) {
      double m = 0.5 * (p.a + p.b);
      stack.push_back({m, p.b});
      stack.push_back({p.a, m});
    } else {
      leaves.push_back(p);
    }
  }
  const GaussRule g = gauss_legendre(opt.order);
  CircleRule r;
  r.t.reserve(leaves.size() * g.nodes.size());
  r.weights.reserve(leaves.size() * g.nodes.size());
  for (const Panel& p : leaves) {
    const double half = 0.5 * (p.b - p.a), mid = 0.5 * (p.a + p.b);
    for (std::size_t j = 0; j < g.nodes.size(); ++j) {
      r.t.push_back(mid + half * g.nodes[j]);
      r.weights.push_back(half * g.weights[j] / two_pi);
    }
  }
  return r;
}

enum class DiskScheme { polar_product, quasi_uniform, graded };

/// Quadrature nodes in the open unit disc for the measure (1-|z|^2)^alpha dA,
/// A the normalized area measure; weights sum to 1/(alpha+1) (= 1 for A).
struct DiskGrid
{
  DiskScheme scheme = DiskScheme::polar_product;
  double alpha = 0.0;
  std::vector<cplx> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  double total_weight() const
  {
    double s = 0.0;
    for (double w : weights)
      s += w;
    return s;
  }
};

/// Gauss–Jacobi in u = r^2 (weight (1-u)^alpha) times the uniform rule in θ.
/// Exact for |polynomial|^2 up to degree ~ min(2 n_radial, n_angular/2).
inline DiskGrid polar_product_grid(int n_radial = 64, int n_angular = 256, double alpha = 0.0)
{
  DiskGrid g;
  g.scheme = DiskScheme::polar_product;
  g.alpha = alpha;
  GaussRule gu = gauss_jacobi(n_radial, alpha, 0.0);
  const double scale = std::pow(2.0, -(alpha + 1.0));
  g.nodes.reserve(static_cast<std::size_t>(n_radial) * n_angular);
  g.weights.reserve(g.nodes.capacity());
  for (int i = 0; i < n_radial; ++i) {
    const double u = 0.5 * (gu.nodes[i] + 1.0);
    const double r = std::sqrt(u);
    const double wu = gu.weights[i] * scale;
    for (int j = 0; j < n_angular; ++j) {
      g.nodes.push_back(std::polar(r, two_pi * (j + 0.5 * (i % 2)) / n_angular));
      g.weights.push_back(wu / n_angular);
    }
  }
  return g;
}

/// Equal-area rings (midpoints in u = r^2) with ring-proportional angular counts.
inline DiskGrid quasi_uniform_grid(int n_rings = 64, double alpha = 0.0)
{
  DiskGrid g;
  g.scheme = DiskScheme::quasi_uniform;
  g.alpha = alpha;
  for (int i = 0; i < n_rings; ++i) {
    const double u0 = static_cast<double>(i) / n_rings, u1 = static_cast<double>(i + 1) / n_rings;
    const double u = 0.5 * (u0 + u1);
    const double r = std::sqrt(u);
    const int n_ang = std::max(6, static_cast<int>(std::lround(two_pi * r * n_rings)));
    const double ring = (std::pow(1.0 - u0, alpha + 1.0) - std::pow(1.0 - u1, alpha + 1.0)) / (alpha + 1.0);
    for (int j = 0; j < n_ang; ++j) {
      g.nodes.push_back(std::polar(r, two_pi * (j + 0.5) / n_ang));
      g.weights.push_back(ring / n_ang);
    }
  }
  return g;
}

struct GradedDiskOptions
{
  int base_radial = 4;    // [0,1/2], [1/2,3/4], ... towards the circle
  int base_angular = 16;
  int order = 8;
  double kappa = 0.25;
  std::size_t max_cells = 40000;
  double min_size = 1e-13;
};

/// Adaptive tensor Gauss rule on polar cells (r, θ) refined where
/// `sharpness(z)` is small relative to its local variation; cells touching
/// the circle use Gauss–Jacobi in r for the factor (1-r)^alpha.
inline DiskGrid graded_disk_rule(const std::function<double(cplx)>& sharpness, double alpha = 0.0,
                                 const GradedDiskOptions& opt = {})
{
  struct Cell
  {
    double r0, r1, t0, t1;
  };
  std::vector<Cell> stack, leaves;
  std::vector<double> rb{0.0};
  for (int k = 1; k <= opt.base_radial; ++k)
    rb.push_back(k == opt.base_radial ? 1.0 : 1.0 - std::ldexp(1.0, -k));
  for (std::size_t i = 0; i + 1 < rb.size(); ++i)
    for (int j = 0; j < opt.base_angular; ++j)
      stack.push_back({rb[i], rb[i + 1], two_pi * j / opt.base_angular, two_pi * (j + 1) / opt.base_angular});

  constexpr int S = 5;
  double q[S][S];
  cplx zs[S][S];
  while (!stack.empty()) {
    Cell c = stack.back();
    stack.pop_back();
    double qmin = std::numeric_limits<double>::infinity(), slope = 0.0;
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b) {
        double r = c.r0 + (c.r1 - c.r0) * a / (S - 1);
        double t = c.t0 + (c.t1 - c.t0) * b / (S - 1);
        zs[a][b] = std::polar(r, t);
        q[a][b] = sharpness(zs[a][b]);
        qmin = std::min(qmin, q[a][b]);
      }
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b) {
        if (a) {
          double d = std::abs(zs[a][b] - zs[a - 1][b]);
          if (d > 0)
            slope = std::max(slope, std::abs(q[a][b] - q[a - 1][b]) / d);
        }
        if (b) {
          double d = std::abs(zs[a][b] - zs[a][b - 1]);
          if (d > 0)
            slope = std::max(slope, std::abs(q[a][b] - q[a][b - 1]) / d);
        }
      }
    const double dr = c.r1 - c.r0, dt = c.r1 * (c.t1 - c.t0);
    const double diam = std::max(dr, dt);
    bool refine = diam * slope > opt.kappa * qmin || !std::isfinite(qmin);
    if (refine && diam > opt.min_size && leaves.size() + stack.size() < opt.max_cells) {
      if (dr >= dt) {
        double m = 0.5 * (c.r0 + c.r1);
        stack.push_back({c.r0, m, c.t0, c.t1});
        stack.push_back({m, c.r1, c.t0, c.t1});
      } else {
        double m = 0.5 * (c.t0 + c.t1);
        stack.push_back({c.r0, c.r1, c.t0, m});
        stack.push_back({c.r0, c.r1, m, c.t1});
      }
    } else {
      leaves.push_back(c);
    }
  }

  const GaussRule gl = gauss_legendre(opt.order);
  const GaussRule gj = gauss_jacobi(opt.order, alpha, 0.0);
  DiskGrid g;
  g.scheme = DiskScheme::graded;
  g.alpha = alpha;
  g.nodes.reserve(leaves.size() * opt.order * opt.order);
  g.weights.reserve(g.nodes.capacity());
  for (const Cell& c : leaves) {
    const double hr = 0.5 * (c.r1 - c.r0), mr = 0.5 * (c.r0 + c.r1);
    const double ht = 0.5 * (c.t1 - c.t0), mt = 0.5 * (c.t0 + c.t1);
    const bool edge = alpha != 0.0 && c.r1 >= 1.0;
    for (int a = 0; a < opt.order; ++a) {
      double r, wr;
      if (edge) {
        // (1-r)^alpha = hr^alpha (1-x)^alpha with r = mr + hr x
        r = mr + hr * gj.nodes[a];
        wr = gj.weights[a] * std::pow(hr, alpha + 1.0) * std::pow(1.0 + r, alpha);
      } else {
        r = mr + hr * gl.nodes[a];
        wr = gl.weights[a] * hr * (alpha != 0.0 ? std::pow(1.0 - r * r, alpha) : 1.0);
      }
      for (int b = 0; b < opt.order; ++b) {
        double t = mt + ht * gl.nodes[b];
        g.nodes.push_back(std::polar(r, t));
        // dA = r dr dθ / π
        g.weights.push_back(wr * r * gl.weights[b] * ht / std::numbers::pi);
      }
    }
  }
  return g;
}

} // namespace ktl
