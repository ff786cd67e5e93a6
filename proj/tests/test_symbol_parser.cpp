#include "ktl/expr.hpp"
#include "ktl/self_map.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ktl;

namespace {

cplx eval(const std::string& src, cplx z) { return parse_expr(src)(z); }

ParseError::Kind kind_of(const std::string& src)
{
  try {
    parse_expr(src);
  } catch (const ParseError& e) {
    EXPECT_LE(e.position(), src.size()) << src;
    return e.kind();
  }
  ADD_FAILURE() << "no ParseError for '" << src << "'";
  return ParseError::Kind::syntax;
}

std::vector<cplx> random_disc_points(int n, unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<cplx> pts;
  for (int k = 0; k < n; ++k)
    pts.push_back(std::polar(std::sqrt(u(rng)) * 0.999, 2.0 * std::numbers::pi * u(rng)));
  return pts;
}

} // namespace

TEST(SymbolParser, VariableIsIdentity)
{
  Expr e = parse_expr("z");
  EXPECT_EQ(e.root().op, ExprOp::variable);
  EXPECT_EQ(e(cplx(0.3, -0.2)), cplx(0.3, -0.2));
  EXPECT_EQ(parse_expr("s")(cplx(0.1, 0.1)), cplx(0.1, 0.1));
}

TEST(SymbolParser, AffineMapIsOneAtOne)
{
  EXPECT_NEAR(std::abs(eval("(1+z)/2", 1.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("(1+z)/2", -1.0)), 0.0, 1e-15);
}

TEST(SymbolParser, BlaschkeAtOriginEqualsParameter)
{
  EXPECT_NEAR(std::abs(eval("blaschke(0.5)", 0.0) - 0.5), 0.0, 1e-15);
  cplx a(0.2, -0.4);
  EXPECT_NEAR(std::abs(eval("blaschke(0.2-0.4*i)", 0.0) - a), 0.0, 1e-15);
  // (a - z)/(1 - conj(a) z) at an interior point
  cplx z(0.1, 0.7);
  EXPECT_NEAR(std::abs(eval("blaschke(0.2-0.4*i)", z) - (a - z) / (1.0 - std::conj(a) * z)), 0.0, 1e-15);
}

TEST(SymbolParser, PrecedenceAndAssociativity)
{
  EXPECT_NEAR(std::abs(eval("-z^2", 2.0) + 4.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("2*3+4", 0.0) - 10.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("1/2/2", 0.0) - 0.25), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("1-2-3", 0.0) + 4.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("(1+z)^3", 1.0) - 8.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("z^-1", 2.0) - 0.5), 0.0, 1e-15);
}

TEST(SymbolParser, ComplexLiteralsAndConstants)
{
  EXPECT_NEAR(std::abs(eval("0.5+0.5*i", 0.0) - cplx(0.5, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("exp(i*pi)", 0.0) + 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("2.5e-1", 0.0) - 0.25), 0.0, 1e-15);
}

TEST(SymbolParser, NamedPrimitives)
{
  EXPECT_NEAR(std::abs(eval("series([1, 2, 3])", 2.0) - 17.0), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(eval("series([1, 1], z^2)", 3.0) - 10.0), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(eval("compose(z^2, (1+z)/2)", 0.0) - 0.25), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("moebius_cayley(z)", 0.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("moebius_cayley(z)", 1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval("blaschke(0.3, z^2)", 0.5) - (0.3 - 0.25) / (1.0 - 0.3 * 0.25)), 0.0, 1e-15);
}

TEST(SymbolParser, ErrorKinds)
{
  EXPECT_EQ(kind_of("blaschke(1.5)"), ParseError::Kind::parameter_out_of_range);
  EXPECT_EQ(kind_of("blaschke(1)"), ParseError::Kind::parameter_out_of_range);
  EXPECT_EQ(kind_of("blaschke(z)"), ParseError::Kind::parameter_out_of_range);
  EXPECT_EQ(kind_of("foo(z)"), ParseError::Kind::unknown_identifier);
  EXPECT_EQ(kind_of("w+1"), ParseError::Kind::unknown_identifier);
  EXPECT_EQ(kind_of("blaschke()"), ParseError::Kind::arity);
  EXPECT_EQ(kind_of("compose(z)"), ParseError::Kind::arity);
  EXPECT_EQ(kind_of("1+"), ParseError::Kind::syntax);
  EXPECT_EQ(kind_of("(z"), ParseError::Kind::syntax);
  EXPECT_EQ(kind_of("2z"), ParseError::Kind::syntax);
  EXPECT_EQ(kind_of("z^0.5"), ParseError::Kind::parameter_out_of_range);
  EXPECT_THROW(parse_expr(""), std::invalid_argument);
}

TEST(SymbolParser, ErrorPositionPointsAtTheProblem)
{
  try {
    parse_expr("1 + blaschke(2)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GE(e.position(), 4u);
    EXPECT_LT(e.position(), 15u);
  }
}

TEST(SymbolParser, PrettyPrintRoundTrip)
{
  const std::vector<std::string> sources = {
    "z", "(1+z)/2", "blaschke(0.5)", "2+z", "z*(2+z)", "exp(i*pi/3)*z", "z^2 - 0.25*i*z + 1/(3-z)",
    "series([1, -0.5, 0.25+0.1*i, 0.125])", "compose(blaschke(0.3+0.2*i), z^3)", "moebius_cayley(z/2)",
    "-(z-0.1)^4/(2+z^2)", "blaschke(0.5)*blaschke(-0.25*i)*z",
  };
  auto pts = random_disc_points(100, 11);
  for (const auto& src : sources) {
    Expr a = parse_expr(src);
    Expr b = parse_expr(a.str());
    for (cplx z : pts) {
      cplx va = a(z), vb = b(z);
      EXPECT_LE(std::abs(va - vb), 1e-14 * std::max(1.0, std::abs(va))) << src << " -> " << a.str();
    }
  }
}

TEST(SymbolParser, EvaluationFailureIsReported)
{
  Expr e = parse_expr("1/z");
  EXPECT_FALSE(e.try_eval(0.0).has_value());
  EXPECT_THROW(e(0.0), EvalError);
}

TEST(SymbolParser, DenominatorFlagIsSetByValidationNotParsing)
{
  Expr e = parse_expr("1/(2-z)");
  ASSERT_EQ(e.root().op, ExprOp::div);
  EXPECT_FALSE(e.root().denominator_nonzero.has_value());
  Expr ok = annotate_denominators(e);
  EXPECT_EQ(ok.root().denominator_nonzero, std::optional<bool>(true));
  Expr bad = annotate_denominators(parse_expr("1/(1-z)"));
  EXPECT_EQ(bad.root().denominator_nonzero, std::optional<bool>(false));
}

TEST(SelfMap, IdentityPassesWithModulusOne)
{
  auto r = validate_self_map(parse_expr("z"), 4096);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.max_boundary_modulus, 1.0, 1e-15);
}

TEST(SelfMap, DilationFails)
{
  auto r = validate_self_map(parse_expr("2*z"));
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.max_boundary_modulus, 2.0, 1e-12);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(SelfMap, BoundaryTouchingMapPasses)
{
  auto r = validate_self_map(parse_expr("(1+z)/2"));
  EXPECT_TRUE(r.pass);
  // maximum of |(1+e^{it})/2| = |cos(t/2)| over a fine grid, attained at t = 0
  double oracle = 0.0;
  for (int k = 0; k < 4096; ++k)
    oracle = std::max(oracle, std::abs(std::cos(std::numbers::pi * k / 4096.0)));
  EXPECT_NEAR(r.max_boundary_modulus, oracle, 1e-12);
  EXPECT_NEAR(r.max_boundary_modulus, 1.0, 1e-12);
  EXPECT_LT(r.max_interior_modulus, 1.0);
}

TEST(SelfMap, PoleOnGridFailsWithDiagnostic)
{
  auto r = validate_self_map(parse_expr("1/z"));
  EXPECT_FALSE(r.pass);
  EXPECT_NE(r.diagnostic.find("pole"), std::string::npos);
}

TEST(SelfMap, BlaschkeProductsAreUnimodularOnTheCircle)
{
  for (const char* src : {"blaschke(0.5)", "blaschke(0.5)*blaschke(-0.3+0.6*i)", "z*blaschke(0.9*i)*blaschke(0.1)",
                          "blaschke(0.99, z^3)"}) {
    Expr b = parse_expr(src);
    EXPECT_TRUE(validate_self_map(b).pass) << src;
    for (int k = 0; k < 4096; ++k)
      ASSERT_NEAR(std::abs(b(std::polar(1.0, 2.0 * std::numbers::pi * k / 4096.0))), 1.0, 1e-10) << src;
  }
}
