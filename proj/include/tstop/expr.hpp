#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tstop {

/// Node kinds of the formula AST. `step` is internal: it only appears in
/// derivatives of abs/min/max and is not accepted by the parser.
enum class Op {
  constant,
  variable,
  negate,
  add,
  sub,
  mul,
  div,
  pow,
  exp,
  log,
  sqrt,
  abs,
  min,
  max,
  step,
};

/// Immutable scalar expression in the single variable x.
///
/// Copies share the underlying tree, so passing by value is cheap and the
/// type is safe to use from several threads at once.
class Expression {
 public:
  struct Node {
    Op op = Op::constant;
    double value = 0.0;
    std::array<std::shared_ptr<const Node>, 2> args{};
  };

  /// The constant 0.
  Expression();

  static Expression constant(double value);
  static Expression variable();
  static Expression unary(Op op, Expression arg);
  static Expression binary(Op op, Expression lhs, Expression rhs);

  double operator()(double x) const;

  Op op() const noexcept { return node_->op; }
  bool is_constant() const noexcept { return node_->op == Op::constant; }
  bool is_constant(double v) const noexcept {
    return is_constant() && node_->value == v;
  }
  /// Literal value; only meaningful when `is_constant()`.
  double constant_value() const noexcept { return node_->value; }
  std::size_t arity() const noexcept;
  Expression arg(std::size_t i) const;

  /// Fully parenthesised text. Parsing it back yields an expression with
  /// identical evaluation (for expressions free of `step`).
  std::string to_string() const;

  const Node& node() const noexcept { return *node_; }

 private:
  explicit Expression(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

// Builders. All of them fold constants and the usual 0/1 identities.
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& base, const Expression& exponent);
Expression exp(const Expression& a);
Expression log(const Expression& a);
Expression sqrt(const Expression& a);
Expression abs(const Expression& a);
Expression min(const Expression& a, const Expression& b);
Expression max(const Expression& a, const Expression& b);
/// step(z) = 1 for z >= 0, else 0.
Expression step(const Expression& a);

/// Parse a formula. Throws ParseError on malformed text or unknown names.
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | base ('^' factor)?
///   base   := number | 'x' | func '(' expr (',' expr)? ')' | '(' expr ')'
///   func   := exp | log | sqrt | abs | min | max
Expression parse(std::string_view text);

/// Exact symbolic d/dx. Kinks of abs/min/max take the right derivative.
Expression differentiate(const Expression& e);

/// Degree when `e` is a polynomial in x (integer powers >= 0 only), with the
/// zero polynomial reported as -1. Empty otherwise.
std::optional<int> polynomial_degree(const Expression& e);

/// Flat postfix program for fast repeated evaluation in hot loops.
class CompiledExpression {
 public:
  explicit CompiledExpression(const Expression& e);
  double operator()(double x) const;

 private:
  struct Instr {
    Op op;
    double value;
  };
  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

}  // namespace tstop
