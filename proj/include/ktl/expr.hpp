#pragma once

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <iomanip>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ktl {

using cplx = std::complex<double>;

/// Raised when a symbol cannot be evaluated at a point (pole, non-finite value).
class EvalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error
{
public:
  enum class Kind { syntax, unknown_identifier, arity, parameter_out_of_range };

  ParseError(Kind kind, std::size_t position, const std::string& message)
    : std::runtime_error(message), kind_(kind), position_(position)
  {}

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }

private:
  Kind kind_;
  std::size_t position_;
};

inline const char* to_string(ParseError::Kind kind)
{
  switch (kind) {
    case ParseError::Kind::syntax: return "syntax";
    case ParseError::Kind::unknown_identifier: return "unknown-identifier";
    case ParseError::Kind::arity: return "arity";
    case ParseError::Kind::parameter_out_of_range: return "parameter-out-of-range";
  }
  return "?";
}

enum class ExprOp { constant, variable, add, sub, mul, div, neg, pow, compose, blaschke, cayley, series, exp };

/// One node of a symbol tree. Unary nodes (neg, pow, blaschke, cayley,
/// series, exp) keep their argument in `lhs`; compose keeps the outer
/// function in `lhs` and the inner one in `rhs`.
struct ExprNode
{
  ExprOp op = ExprOp::variable;
  cplx value{};             // constant value or Blaschke parameter
  int exponent = 0;         // pow
  std::vector<cplx> coeffs; // series
  std::shared_ptr<const ExprNode> lhs, rhs;
  std::optional<bool> denominator_nonzero; // div only, set by annotate_denominators()
};

class Expr
{
public:
  using NodePtr = std::shared_ptr<const ExprNode>;

  Expr() : Expr(variable()) {}
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  static Expr constant(cplx c)
  {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::constant;
    n->value = c;
    return Expr(std::move(n));
  }

  static Expr variable()
  {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::variable;
    return Expr(std::move(n));
  }

  static Expr blaschke(cplx a, const Expr& arg = variable())
  {
    if (!(std::abs(a) < 1.0))
      throw std::domain_error("blaschke parameter must satisfy |a| < 1");
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::blaschke;
    n->value = a;
    n->lhs = arg.root_;
    return Expr(std::move(n));
  }

  static Expr cayley(const Expr& arg = variable()) { return unary(ExprOp::cayley, arg); }
  static Expr exp(const Expr& arg) { return unary(ExprOp::exp, arg); }

  static Expr series(std::vector<cplx> coeffs, const Expr& arg = variable())
  {
    if (coeffs.empty())
      throw std::domain_error("series needs at least one coefficient");
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::series;
    n->coeffs = std::move(coeffs);
    n->lhs = arg.root_;
    return Expr(std::move(n));
  }

  static Expr pow(const Expr& base, int exponent)
  {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::pow;
    n->exponent = exponent;
    n->lhs = base.root_;
    return Expr(std::move(n));
  }

  /// outer(inner(z))
  static Expr compose(const Expr& outer, const Expr& inner) { return binary(ExprOp::compose, outer, inner); }

  friend Expr operator+(const Expr& a, const Expr& b) { return binary(ExprOp::add, a, b); }
  friend Expr operator-(const Expr& a, const Expr& b) { return binary(ExprOp::sub, a, b); }
  friend Expr operator*(const Expr& a, const Expr& b) { return binary(ExprOp::mul, a, b); }
  friend Expr operator/(const Expr& a, const Expr& b) { return binary(ExprOp::div, a, b); }
  friend Expr operator-(const Expr& a) { return unary(ExprOp::neg, a); }

  const ExprNode& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  /// Evaluate at z; throws EvalError at poles or on non-finite results.
  cplx operator()(cplx z) const
  {
    cplx v = eval(*root_, z);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw EvalError("non-finite value");
    return v;
  }

  std::optional<cplx> try_eval(cplx z) const noexcept
  {
    try {
      return (*this)(z);
    } catch (const EvalError&) {
      return std::nullopt;
    }
  }

  /// True if the tree does not depend on z.
  bool is_constant() const { return !depends_on_variable(*root_); }

  std::string str() const { return print(*root_, 0); }

  static std::string format_constant(cplx c)
  {
    auto num = [](double x) {
      std::ostringstream os;
      os << std::setprecision(17) << x;
      return os.str();
    };
    if (c.imag() == 0.0)
      return c.real() >= 0.0 && !std::signbit(c.real()) ? num(c.real()) : "(" + num(c.real()) + ")";
    std::string s = "(";
    if (c.real() != 0.0) {
      s += num(c.real());
      s += c.imag() < 0 ? "-" : "+";
      s += num(std::abs(c.imag()));
    } else {
      s += num(c.imag());
    }
    return s + "*i)";
  }

private:
  NodePtr root_;

  static Expr unary(ExprOp op, const Expr& a)
  {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = a.root_;
    return Expr(std::move(n));
  }

  static Expr binary(ExprOp op, const Expr& a, const Expr& b)
  {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = a.root_;
    n->rhs = b.root_;
    return Expr(std::move(n));
  }

  static cplx ipow(cplx x, int n)
  {
    if (n < 0) {
      if (x == cplx(0.0))
        throw EvalError("pole: zero raised to a negative power");
      return 1.0 / ipow(x, -n);
    }
    cplx r = 1.0;
    while (n) {
      if (n & 1)
        r *= x;
      x *= x;
      n >>= 1;
    }
    return r;
  }

  static cplx safe_div(cplx a, cplx b)
  {
    if (b == cplx(0.0))
      throw EvalError("pole: division by zero");
    return a / b;
  }

  static cplx eval(const ExprNode& n, cplx z)
  {
    switch (n.op) {
      case ExprOp::constant: return n.value;
      case ExprOp::variable: return z;
      case ExprOp::add: return eval(*n.lhs, z) + eval(*n.rhs, z);
      case ExprOp::sub: return eval(*n.lhs, z) - eval(*n.rhs, z);
      case ExprOp::mul: return eval(*n.lhs, z) * eval(*n.rhs, z);
      case ExprOp::div: return safe_div(eval(*n.lhs, z), eval(*n.rhs, z));
      case ExprOp::neg: return -eval(*n.lhs, z);
      case ExprOp::pow: return ipow(eval(*n.lhs, z), n.exponent);
      case ExprOp::compose: return eval(*n.lhs, eval(*n.rhs, z));
      case ExprOp::blaschke: {
        cplx x = eval(*n.lhs, z);
        return safe_div(n.value - x, 1.0 - std::conj(n.value) * x);
      }
      case ExprOp::cayley: {
        cplx x = eval(*n.lhs, z);
        return safe_div(1.0 - x, 1.0 + x);
      }
      case ExprOp::series: {
        cplx x = eval(*n.lhs, z);
        cplx acc = 0.0;
        for (auto it = n.coeffs.rbegin(); it != n.coeffs.rend(); ++it)
          acc = acc * x + *it;
        return acc;
      }
      case ExprOp::exp: return std::exp(eval(*n.lhs, z));
    }
    throw EvalError("corrupt expression node");
  }

  static bool depends_on_variable(const ExprNode& n)
  {
    if (n.op == ExprOp::variable)
      return true;
    if (n.op == ExprOp::compose)
      return depends_on_variable(*n.lhs) && depends_on_variable(*n.rhs);
    return (n.lhs && depends_on_variable(*n.lhs)) || (n.rhs && depends_on_variable(*n.rhs));
  }

  static int precedence(const ExprNode& n)
  {
    switch (n.op) {
      case ExprOp::add:
      case ExprOp::sub: return 1;
      case ExprOp::mul:
      case ExprOp::div: return 2;
      case ExprOp::neg: return 3;
      case ExprOp::pow: return 4;
      default: return 5;
    }
  }

  static std::string wrap(const ExprNode& child, int min_prec)
  {
    std::string s = print(child, 0);
    return precedence(child) < min_prec ? "(" + s + ")" : s;
  }

  static std::string arg_suffix(const ExprNode& arg)
  {
    return arg.op == ExprOp::variable ? std::string() : ", " + print(arg, 0);
  }

  static std::string print(const ExprNode& n, int)
  {
    switch (n.op) {
      case ExprOp::constant: return format_constant(n.value);
      case ExprOp::variable: return "z";
      case ExprOp::add: return wrap(*n.lhs, 1) + " + " + wrap(*n.rhs, 1);
      case ExprOp::sub: return wrap(*n.lhs, 1) + " - " + wrap(*n.rhs, 2);
      case ExprOp::mul: return wrap(*n.lhs, 2) + "*" + wrap(*n.rhs, 3);
      case ExprOp::div: return wrap(*n.lhs, 2) + "/" + wrap(*n.rhs, 3);
      case ExprOp::neg: return "-" + wrap(*n.lhs, 4);
      case ExprOp::pow:
        return wrap(*n.lhs, 5) + "^" +
               (n.exponent < 0 ? "(" + std::to_string(n.exponent) + ")" : std::to_string(n.exponent));
      case ExprOp::compose: return "compose(" + print(*n.lhs, 0) + ", " + print(*n.rhs, 0) + ")";
      case ExprOp::blaschke: return "blaschke(" + format_constant(n.value) + arg_suffix(*n.lhs) + ")";
      case ExprOp::cayley:
        return n.lhs->op == ExprOp::variable ? "moebius_cayley" : "moebius_cayley(" + print(*n.lhs, 0) + ")";
      case ExprOp::series: {
        std::string s = "series([";
        for (std::size_t k = 0; k < n.coeffs.size(); ++k)
          s += (k ? ", " : "") + format_constant(n.coeffs[k]);
        return s + "]" + arg_suffix(*n.lhs) + ")";
      }
      case ExprOp::exp: return "exp(" + print(*n.lhs, 0) + ")";
    }
    return "?";
  }
};

namespace detail {

class Parser
{
public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse()
  {
    Expr e = expression();
    skip_ws();
    if (pos_ < src_.size())
      fail(ParseError::Kind::syntax, pos_, "unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

private:
  std::string_view src_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(ParseError::Kind kind, std::size_t at, const std::string& what) const
  {
    std::size_t p = src_.empty() ? 0 : std::min(at, src_.size() - 1);
    throw ParseError(kind, p, what + " at position " + std::to_string(p));
  }

  void skip_ws()
  {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool accept(char c)
  {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c)
  {
    if (!accept(c))
      fail(ParseError::Kind::syntax, pos_, std::string("expected '") + c + "'");
  }

  Expr expression()
  {
    Expr e = term();
    for (;;) {
      if (accept('+'))
        e = e + term();
      else if (accept('-'))
        e = e - term();
      else
        return e;
    }
  }

  Expr term()
  {
    Expr e = unary();
    for (;;) {
      if (accept('*'))
        e = e * unary();
      else if (accept('/'))
        e = e / unary();
      else
        return e;
    }
  }

  Expr unary()
  {
    if (accept('-'))
      return -unary();
    if (accept('+'))
      return unary();
    return power();
  }

  Expr power()
  {
    Expr base = primary();
    skip_ws();
    if (!accept('^'))
      return base;
    skip_ws();
    std::size_t at = pos_;
    Expr ex = unary();
    cplx v = constant_value(ex, at, "exponent");
    double r = v.real();
    if (v.imag() != 0.0 || r != std::round(r) || std::abs(r) > 4096)
      fail(ParseError::Kind::parameter_out_of_range, at, "exponent must be an integer");
    return Expr::pow(base, static_cast<int>(r));
  }

  cplx constant_value(const Expr& e, std::size_t at, const std::string& what)
  {
    if (!e.is_constant())
      fail(ParseError::Kind::parameter_out_of_range, at, what + " must not depend on z");
    auto v = e.try_eval(0.0);
    if (!v)
      fail(ParseError::Kind::parameter_out_of_range, at, what + " is not finite");
    return *v;
  }

  Expr number()
  {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      else
        pos_ = save;
    }
    std::string text(src_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
      fail(ParseError::Kind::syntax, start, "malformed number '" + text + "'");
    return Expr::constant(v);
  }

  struct Arg
  {
    std::optional<Expr> expr;
    std::vector<cplx> list; // set when the argument is a bracketed coefficient list
    std::size_t at = 0;
  };

  std::vector<Arg> arguments()
  {
    std::vector<Arg> args;
    if (accept(')'))
      return args;
    do {
      skip_ws();
      Arg a;
      a.at = pos_;
      if (pos_ < src_.size() && src_[pos_] == '[')
        a.list = list_literal();
      else
        a.expr = expression();
      args.push_back(std::move(a));
    } while (accept(','));
    expect(')');
    return args;
  }

  std::vector<cplx> list_literal()
  {
    std::size_t at = pos_;
    expect('[');
    std::vector<cplx> coeffs;
    if (!accept(']')) {
      do {
        skip_ws();
        std::size_t c_at = pos_;
        coeffs.push_back(constant_value(expression(), c_at, "series coefficient"));
      } while (accept(','));
      expect(']');
    }
    if (coeffs.empty())
      fail(ParseError::Kind::arity, at, "series needs at least one coefficient");
    return coeffs;
  }

  Expr primary()
  {
    skip_ws();
    if (pos_ >= src_.size())
      fail(ParseError::Kind::syntax, pos_, "unexpected end of input");
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return number();
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      std::string name(src_.substr(start, pos_ - start));
      skip_ws();
      bool call = pos_ < src_.size() && src_[pos_] == '(';
      if (!call) {
        if (name == "z" || name == "s")
          return Expr::variable();
        if (name == "i")
          return Expr::constant(cplx(0.0, 1.0));
        if (name == "pi")
          return Expr::constant(std::numbers::pi);
        if (name == "moebius_cayley")
          return Expr::cayley();
        if (name == "blaschke" || name == "series" || name == "compose" || name == "exp")
          fail(ParseError::Kind::arity, start, name + " requires arguments");
        fail(ParseError::Kind::unknown_identifier, start, "unknown identifier '" + name + "'");
      }
      ++pos_;
      std::vector<Arg> args = arguments();
      return call_primitive(name, start, args);
    }
    fail(ParseError::Kind::syntax, pos_, "unexpected '" + std::string(1, c) + "'");
  }

  Expr call_primitive(const std::string& name, std::size_t at, std::vector<Arg>& args)
  {
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi)
        fail(ParseError::Kind::arity, at, name + " takes " + std::to_string(lo) +
                                             (hi > lo ? "-" + std::to_string(hi) : "") + " argument(s), got " +
                                             std::to_string(args.size()));
    };
    auto expr_arg = [&](std::size_t k) -> const Expr& {
      if (!args[k].expr)
        fail(ParseError::Kind::syntax, args[k].at, "unexpected coefficient list in " + name);
      return *args[k].expr;
    };
    auto optional_arg = [&](std::size_t k) { return args.size() > k ? expr_arg(k) : Expr::variable(); };

    if (name == "blaschke") {
      arity(1, 2);
      cplx a = constant_value(expr_arg(0), args[0].at, "blaschke parameter");
      if (!(std::abs(a) < 1.0))
        fail(ParseError::Kind::parameter_out_of_range, args[0].at, "blaschke parameter must satisfy |a| < 1");
      return Expr::blaschke(a, optional_arg(1));
    }
    if (name == "series") {
      arity(1, 2);
      if (args[0].expr)
        fail(ParseError::Kind::syntax, args[0].at, "series expects a coefficient list [c0, c1, ...]");
      return Expr::series(args[0].list, optional_arg(1));
    }
    if (name == "compose") {
      arity(2, 2);
      return Expr::compose(expr_arg(0), expr_arg(1));
    }
    if (name == "exp") {
      arity(1, 1);
      return Expr::exp(expr_arg(0));
    }
    if (name == "moebius_cayley") {
      arity(1, 1);
      return Expr::cayley(expr_arg(0));
    }
    fail(ParseError::Kind::unknown_identifier, at, "unknown function '" + name + "'");
  }
};

} // namespace detail

/// Parse the symbol mini-language into an expression tree.
///
/// Grammar: infix + - * / with ^ (integer exponents) binding tighter than
/// unary minus; identifiers z (alias s), i, pi, moebius_cayley; primitives
/// blaschke(a[, arg]), series([c0, ...][, arg]), compose(f, g), exp(x),
/// moebius_cayley(x). No implicit multiplication.
inline Expr parse_expr(std::string_view src)
{
  if (src.empty())
    throw std::invalid_argument("empty expression");
  return detail::Parser(src).parse();
}

} // namespace ktl
