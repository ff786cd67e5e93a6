#include "ktl/ktl.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace ktl;

namespace {

constexpr double pi = std::numbers::pi;

PullbackMeasure hardy_measure(const std::string& h, const std::string& psi, double p = 2.0,
                              std::size_t n = std::size_t{1} << 20)
{
  MeasureOptions opt;
  opt.n_samples = n;
  return pushforward_measure(parse_expr(h), parse_expr(psi), p, MeasureSource::hardy, opt);
}

PullbackMeasure bergman_measure(const std::string& h, const std::string& psi, double p = 2.0)
{
  return pushforward_measure(parse_expr(h), parse_expr(psi), p, MeasureSource::bergman);
}

// area of D(0, R) ∩ D(c, rho) with |c| = d
double lens(double R, double rho, double d)
{
  if (d >= R + rho)
    return 0.0;
  if (d <= std::abs(R - rho))
    return pi * std::min(R, rho) * std::min(R, rho);
  double a = std::acos((d * d + R * R - rho * rho) / (2.0 * d * R));
  double b = std::acos((d * d + rho * rho - R * R) / (2.0 * d * rho));
  return R * R * a + rho * rho * b -
         0.5 * std::sqrt((-d + R + rho) * (d + R - rho) * (d - R + rho) * (d + R + rho));
}

// exact harmonic-measure mass of the arc [t0, t1) seen from a point a in the disc
double poisson_arc_mass(double a, double t0, double t1)
{
  const int m = 64;
  GaussRule g = gauss_legendre(m, t0, t1);
  double s = 0.0;
  for (int k = 0; k < m; ++k)
    s += g.weights[k] * (1.0 - a * a) / std::norm(std::polar(1.0, g.nodes[k]) - a);
  return s / (2.0 * pi);
}

} // namespace

TEST(Pushforward, IdentityIsArcLength)
{
  auto mu = hardy_measure("1", "z");
  EXPECT_NEAR(mu.total_mass(), 1.0, 1e-12);
  EXPECT_NEAR(mu.boundary_mass, 1.0, 1e-12);
  for (cplx z : mu.locations)
    ASSERT_NEAR(std::abs(z), 1.0, 1e-12);
  auto d = rn_density_boundary(mu);
  for (double g : d.density)
    ASSERT_NEAR(g, 1.0, 2e-3);
}

TEST(Pushforward, SquareMapPreservesArcLength)
{
  auto d = rn_density_boundary(hardy_measure("1", "z^2"));
  EXPECT_NEAR(d.total_mass, 1.0, 1e-12);
  // direct bin counting of e^{2iθ} on the same sample grid
  for (double g : d.density) {
    ASSERT_GE(g, 0.95);
    ASSERT_LE(g, 1.05);
  }
}

TEST(Pushforward, MassOfTwoPlusZ)
{
  EXPECT_NEAR(hardy_measure("2+z", "z").total_mass(), 5.0, 3.0 * std::pow(2.0, -10) * 5.0);
}

TEST(Pushforward, HalfDiscMapChargesTheInterior)
{
  auto mu = hardy_measure("1", "(1+z)/2");
  EXPECT_LE(mu.boundary_mass, 0.01);
  auto d = rn_density_boundary(mu);
  EXPECT_EQ(d.ess_inf_estimate, 0.0);
  EXPECT_EQ(ess_inf_criterion(d, ThresholdPolicy{}).verdict, Verdict::not_bounded_below);
  // the boundary fraction shrinks as the collar narrows
  MeasureOptions loose;
  loose.n_samples = std::size_t{1} << 16;
  loose.r_boundary = 1.0 - 1e-3;
  MeasureOptions tight = loose;
  tight.r_boundary = 1.0 - 1e-6;
  auto wide = pushforward_measure(parse_expr("1"), parse_expr("(1+z)/2"), 2.0, MeasureSource::hardy, loose);
  auto narrow = pushforward_measure(parse_expr("1"), parse_expr("(1+z)/2"), 2.0, MeasureSource::hardy, tight);
  EXPECT_GT(wide.boundary_mass, narrow.boundary_mass);
}

TEST(Pushforward, Validation)
{
  EXPECT_THROW(hardy_measure("1", "2*z"), std::invalid_argument);
  EXPECT_THROW(hardy_measure("1", "z", 0.5), std::invalid_argument);
  auto zero = hardy_measure("0", "z", 2.0, 1024);
  EXPECT_EQ(zero.total_mass(), 0.0);
  EXPECT_THROW(hardy_measure("1/(z-z)", "z", 2.0, 1024), EvalError);
}

TEST(BoundaryDensity, BlaschkeMatchesPoissonKernel)
{
  const double a = 0.5;
  auto d = rn_density_boundary(hardy_measure("1", "blaschke(0.5)"), 1024);
  double tool_sum = 0.0;
  for (std::size_t b = 0; b < d.n_bins; ++b) {
    double t0 = d.theta_begin(b), t1 = t0 + 2.0 * pi / d.n_bins;
    double exact = poisson_arc_mass(a, t0, t1) * d.n_bins;
    ASSERT_NEAR(d.density[b], exact, 5e-3 * exact + 2.0 * d.half_width[b]) << b;
    tool_sum += d.bin_mass[b];
  }
  EXPECT_NEAR(tool_sum, d.boundary_mass, 1e-12);
  // the 1st percentile sits near the minimum (1 - a^2)/(1 + a)^2 = 1/3
  EXPECT_NEAR(d.ess_inf_estimate, 1.0 / 3.0, 2e-3);
}

TEST(BoundaryDensity, BlaschkeAgreesWithBruteForceHistogram)
{
  const std::size_t bins = 256, draws = 1000000;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0 * pi);
  std::vector<double> count(bins, 0.0);
  for (std::size_t k = 0; k < draws; ++k) {
    cplx z = std::polar(1.0, u(rng));
    cplx w = (0.5 - z) / (1.0 - 0.5 * z);
    double t = std::arg(w);
    if (t < 0.0)
      t += 2.0 * pi;
    count[std::min(bins - 1, static_cast<std::size_t>(t / (2.0 * pi) * bins))] += 1.0;
  }
  auto d = rn_density_boundary(hardy_measure("1", "blaschke(0.5)"), bins);
  for (std::size_t b = 0; b < bins; ++b) {
    double hist = count[b] / draws * bins;
    double sigma = std::sqrt(count[b]) / draws * bins;
    ASSERT_NEAR(d.density[b], hist, 6.0 * sigma + 1e-3) << b;
  }
}

TEST(BoundaryDensity, UndersampledBinsAreAnError)
{
  auto mu = hardy_measure("1", "z", 2.0, 1024);
  EXPECT_NO_THROW(rn_density_boundary(mu, 64));
  EXPECT_THROW(rn_density_boundary(mu, 128), std::invalid_argument);
  EXPECT_THROW(rn_density_boundary(mu, 0), std::invalid_argument);
}

TEST(BoundaryDensity, RefinementDoesNotRaiseTheInfimum)
{
  for (const char* psi : {"blaschke(0.5)", "z^2", "blaschke(0.3)*z"}) {
    auto mu = hardy_measure("2+z", psi);
    for (std::size_t n : {64u, 256u, 1024u}) {
      auto coarse = rn_density_boundary(mu, n);
      auto fine = rn_density_boundary(mu, 2 * n);
      EXPECT_LE(fine.ess_inf_estimate, coarse.ess_inf_estimate + fine.ess_inf_half_width + coarse.ess_inf_half_width +
                                         1e-3 * coarse.ess_inf_estimate)
        << psi << " n=" << n;
    }
  }
}

TEST(BoundaryDensity, RotationShiftsTheBins)
{
  const std::size_t n = 1024;
  auto d0 = rn_density_boundary(hardy_measure("2+z", "blaschke(0.5)"), n);
  auto d1 = rn_density_boundary(hardy_measure("2+z", "exp(i*pi/2)*blaschke(0.5)"), n);
  for (std::size_t b = 0; b < n; ++b)
    ASSERT_NEAR(d1.density[(b + n / 4) % n], d0.density[b], 1e-2 * d0.density[b] + 2.0 * d0.half_width[b]) << b;
}

TEST(EssInf, Verdicts)
{
  ThresholdPolicy pol;
  EXPECT_EQ(ess_inf_criterion(rn_density_boundary(hardy_measure("1", "z")), pol).verdict, Verdict::bounded_below);
  auto sq = ess_inf_criterion(rn_density_boundary(hardy_measure("1", "z^2")), pol);
  EXPECT_EQ(sq.verdict, Verdict::bounded_below);
  EXPECT_NEAR(sq.constant_estimate, 1.0, 0.05);

  // density vanishing on a quarter of the circle
  PullbackMeasure mu;
  const int n = 1 << 16;
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * pi * (k + 0.5) / n;
    mu.push(std::polar(1.0, t), t < 1.5 * pi ? 1.0 / n : 0.0);
  }
  EXPECT_EQ(ess_inf_criterion(rn_density_boundary(mu), pol).verdict, Verdict::not_bounded_below);

  PullbackMeasure empty;
  for (int k = 0; k < 1024; ++k)
    empty.push(std::polar(1.0, 2.0 * pi * k / 1024), 0.0);
  EXPECT_EQ(ess_inf_criterion(rn_density_boundary(empty, 64), pol).verdict, Verdict::not_bounded_below);
}

TEST(Carleson, Examples)
{
  double c = carleson_constant(hardy_measure("1", "z", 2.0, std::size_t{1} << 16), 1024);
  EXPECT_GE(c, 0.9);
  EXPECT_LE(c, 1.1);

  PullbackMeasure point;
  point.push(0.0, 1.0);
  EXPECT_DOUBLE_EQ(carleson_constant(point), 1.0);

  PullbackMeasure zero;
  EXPECT_EQ(carleson_constant(zero), 0.0);
  zero.push(0.5, 0.0);
  EXPECT_EQ(carleson_constant(zero), 0.0);
  EXPECT_THROW(carleson_constant(point, 0), std::invalid_argument);
}

TEST(Berezin, AreaMeasureIsOne)
{
  auto mu = bergman_measure("1", "z");
  for (double r : {0.0, 0.3, 0.6, 0.9, 0.99})
    for (int k = 0; k < 16; ++k) {
      cplx w = std::polar(r, 2.0 * pi * k / 16);
      ASSERT_NEAR(berezin_transform(mu, w), 1.0, 1e-6) << w;
    }
}

TEST(Berezin, PointMassAtOrigin)
{
  PullbackMeasure mu;
  mu.push(0.0, 1.0);
  for (cplx w : {cplx(0.0), cplx(0.5), cplx(0.3, -0.6)}) {
    double d = 1.0 - std::norm(w);
    EXPECT_NEAR(berezin_transform(mu, w), d * d, 1e-15);
  }
  EXPECT_THROW(berezin_transform(mu, 1.0), std::domain_error);
}

TEST(Berezin, HalfDilationClosedForm)
{
  auto mu = bergman_measure("1", "z/2");
  for (double r : {0.0, 0.5, 0.9, 0.99}) {
    double d = 1.0 - r * r;
    double exact = std::pow(d / (1.0 - r * r / 4.0), 2.0);
    EXPECT_NEAR(berezin_transform(mu, r), exact, 1e-3 * exact) << r;
  }
}

TEST(Berezin, WeightedAreaMeasureIsOne)
{
  MeasureOptions opt;
  opt.alpha = 1.0;
  auto mu = pushforward_measure(parse_expr("1"), parse_expr("z"), 2.0, MeasureSource::bergman, opt);
  EXPECT_NEAR(mu.total_mass(), 0.5, 1e-10);
  for (double r : {0.0, 0.5, 0.9})
    EXPECT_NEAR(berezin_transform(mu, std::polar(r, 1.0)), 1.0, 1e-6);
}

TEST(Berezin, ConsistentWithOperatorNorm)
{
  const std::vector<std::pair<std::string, std::string>> pairs = {
    {"1", "z"}, {"1", "z/2"}, {"2+z", "blaschke(0.5)"}, {"1", "z^2"}, {"2+z", "(1+z)/2"}, {"z*(2+z)", "z"},
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& [h, psi] : pairs) {
    auto mu = bergman_measure(h, psi);
    WcoSpec spec{parse_expr(h), parse_expr(psi), SpaceSpec::bergman()};
    for (int k = 0; k < 4; ++k) {
      cplx w = std::polar(0.95 * std::sqrt(u(rng)), 2.0 * pi * u(rng));
      KernelHandle kh(spec.space, w, KernelKind::reproducing_kernel);
      double direct = std::pow(wco_norm(spec, kh).direct, 2.0);
      ASSERT_NEAR(berezin_transform(mu, w), direct, 1e-3 * direct) << h << " " << psi << " " << w;
    }
  }
}

TEST(MassConservation, HardyAndBergmanSources)
{
  const std::size_t n = std::size_t{1} << 16;
  // ‖2+z‖_3^3 by a spectrally accurate trapezoid rule on a smooth periodic integrand
  double l3 = 0.0;
  for (int k = 0; k < 4096; ++k)
    l3 += std::pow(std::abs(2.0 + std::polar(1.0, 2.0 * pi * k / 4096)), 3.0) / 4096.0;
  EXPECT_NEAR(hardy_measure("2+z", "z", 3.0, n).total_mass(), l3, 3.0 / std::sqrt(double(n)) * l3);
  EXPECT_NEAR(hardy_measure("2+z", "blaschke(0.3)", 2.0, n).total_mass(), 5.0, 3.0 / std::sqrt(double(n)) * 5.0);
  EXPECT_NEAR(bergman_measure("2+z", "z^2").total_mass(), 4.5, 1e-8 * 4.5);
  EXPECT_NEAR(bergman_measure("z", "(1+z)/2").total_mass(), 0.5, 1e-8 * 0.5);
}

TEST(Luecking, ConstantDensityPasses)
{
  auto d = DiskDensity::from_function([](cplx) { return 1.0; });
  auto r = luecking_check(d, {0.5}, DiscGrid{}, ThresholdPolicy{});
  EXPECT_NEAR(r.best_fraction, 1.0, 1e-12);
  EXPECT_EQ(r.criterion.verdict, Verdict::bounded_below);
}

TEST(Luecking, HalfDiscIndicatorFails)
{
  auto d = DiskDensity::from_function([](cplx z) { return z.real() > 0.0 ? 1.0 : 0.0; });
  EXPECT_NEAR(d.mass(), 0.5, 1e-6);
  auto r = luecking_check(d, {0.5}, DiscGrid{}, ThresholdPolicy{});
  // discs centred at -1 with radius < 1 miss the half-disc
  EXPECT_EQ(r.best_fraction, 0.0);
  EXPECT_EQ(r.criterion.verdict, Verdict::not_bounded_below);
  EXPECT_LT(r.worst_center[0].real(), 0.0);
}

TEST(Luecking, AnnulusIndicatorMatchesLensAreas)
{
  auto d = DiskDensity::from_function([](cplx z) { return std::abs(z) > 0.5 ? 1.0 : 0.0; });
  DiscGrid discs;
  auto r = luecking_check(d, {0.5}, discs, ThresholdPolicy{});
  double oracle = 1.0;
  for (double rho : discs.radii)
    oracle = std::min(oracle, (lens(1.0, rho, 1.0) - lens(0.5, rho, 1.0)) / lens(1.0, rho, 1.0));
  EXPECT_GT(oracle, 0.5);
  EXPECT_NEAR(r.best_fraction, oracle, 0.02 * oracle);
  EXPECT_EQ(r.criterion.verdict, Verdict::bounded_below);
}

TEST(Luecking, CoarseHistogramIsRejected)
{
  auto mu = bergman_measure("1", "z");
  auto coarse = DiskDensity::from_measure(mu, 16, 64);
  EXPECT_THROW(luecking_check(coarse, {}, DiscGrid{}, ThresholdPolicy{}), std::invalid_argument);
  DiscGrid big;
  big.radii = {1.0, 0.5};
  EXPECT_NO_THROW(luecking_check(DiskDensity::from_measure(mu, 64, 256), {}, big, ThresholdPolicy{}));
}

TEST(DiskDensity, PreimageBackendForSquareMap)
{
  // pushforward of dA under z^2 has density 1/(2|w|) with respect to dA
  auto d = DiskDensity::from_pullback(parse_expr("1"), parse_expr("z^2"), 2.0);
  for (cplx w : {cplx(0.25), cplx(0.1, 0.6), cplx(-0.9, 0.05)})
    EXPECT_NEAR(d(w), 1.0 / (2.0 * std::abs(w)), 1e-10);
  EXPECT_NEAR(d.mass(), 1.0, 1e-8);
}

TEST(MeasureIO, CsvAndBinaryRoundTrip)
{
  auto mu = hardy_measure("2+z", "blaschke(0.5)", 2.0, 4096);
  std::stringstream csv, bin;
  export_measure_csv(mu, csv);
  export_measure_binary(mu, bin);
  auto a = import_measure_csv(csv);
  auto b = import_measure_binary(bin);
  ASSERT_EQ(a.size(), mu.size());
  ASSERT_EQ(b.size(), mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) {
    EXPECT_EQ(a.locations[k], mu.locations[k]);
    EXPECT_EQ(a.weights[k], mu.weights[k]);
    EXPECT_EQ(b.locations[k], mu.locations[k]);
    EXPECT_EQ(b.weights[k], mu.weights[k]);
  }
  EXPECT_EQ(a.source, MeasureSource::imported);
  EXPECT_NEAR(a.total_mass(), mu.total_mass(), 1e-12);
}

TEST(MeasureIO, MalformedInput)
{
  std::stringstream bad_csv("location_re,location_im,weight\n0.1,0.2\n");
  EXPECT_THROW(import_measure_csv(bad_csv), std::invalid_argument);
  std::stringstream outside("2.0,0.0,1.0\n");
  EXPECT_THROW(import_measure_csv(outside), std::invalid_argument);
  std::stringstream negative("0.0,0.0,-1.0\n");
  EXPECT_THROW(import_measure_csv(negative), std::invalid_argument);
  std::stringstream bad_bin("NOTMAGIC");
  EXPECT_THROW(import_measure_binary(bad_bin), std::invalid_argument);
}
