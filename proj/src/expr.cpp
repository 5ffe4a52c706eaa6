#include "tstop/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

#include "tstop/errors.hpp"

namespace tstop {

namespace {

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::negate: return -a;
    case Op::exp: return std::exp(a);
    case Op::log: return std::log(a);
    case Op::sqrt: return std::sqrt(a);
    case Op::abs: return std::fabs(a);
    case Op::step: return a >= 0.0 ? 1.0 : 0.0;
    default: break;
  }
  return std::nan("");
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div: return a / b;
    case Op::pow: return std::pow(a, b);
    case Op::min: return std::min(a, b);
    case Op::max: return std::max(a, b);
    default: break;
  }
  return std::nan("");
}

bool is_binary(Op op) {
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
    case Op::min:
    case Op::max:
      return true;
    default:
      return false;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    case Op::abs: return "abs";
    case Op::min: return "min";
    case Op::max: return "max";
    case Op::step: return "step";
    default: return nullptr;
  }
}

double eval_node(const Expression::Node& n, double x) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return x;
    default: break;
  }
  if (is_binary(n.op))
    return apply_binary(n.op, eval_node(*n.args[0], x), eval_node(*n.args[1], x));
  return apply_unary(n.op, eval_node(*n.args[0], x));
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Expression::Node& n, std::string& out) {
  switch (n.op) {
    case Op::constant:
      if (std::signbit(n.value))
        out += "(" + format_number(n.value) + ")";
      else
        out += format_number(n.value);
      return;
    case Op::variable:
      out += 'x';
      return;
    case Op::negate:
      out += "(-";
      print_node(*n.args[0], out);
      out += ')';
      return;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow: {
      static constexpr char symbols[] = {'+', '-', '*', '/', '^'};
      const char sym = symbols[static_cast<int>(n.op) - static_cast<int>(Op::add)];
      out += '(';
      print_node(*n.args[0], out);
      out += ' ';
      out += sym;
      out += ' ';
      print_node(*n.args[1], out);
      out += ')';
      return;
    }
    default:
      break;
  }
  out += function_name(n.op);
  out += '(';
  print_node(*n.args[0], out);
  if (is_binary(n.op)) {
    out += ", ";
    print_node(*n.args[1], out);
  }
  out += ')';
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expression parse_all() {
    Expression e = expr();
    skip_space();
    if (pos_ != text_.size())
      throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_space() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size())
        throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expression expr() {
    Expression lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = Expression::binary(Op::add, lhs, term());
      else if (accept('-'))
        lhs = Expression::binary(Op::sub, lhs, term());
      else
        return lhs;
    }
  }

  Expression term() {
    Expression lhs = factor();
    for (;;) {
      if (accept('*'))
        lhs = Expression::binary(Op::mul, lhs, factor());
      else if (accept('/'))
        lhs = Expression::binary(Op::div, lhs, factor());
      else
        return lhs;
    }
  }

  Expression factor() {
    if (accept('-')) return Expression::unary(Op::negate, factor());
    Expression b = base();
    if (accept('^')) return Expression::binary(Op::pow, b, factor());
    return b;
  }

  Expression base() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression e = expr();
      expect(')');
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expression number() {
    const std::size_t start = pos_;
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc() || ptr == first) throw ParseError("malformed number", start);
    pos_ += static_cast<std::size_t>(ptr - first);
    return Expression::constant(v);
  }

  Expression identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "x") return Expression::variable();

    Op op;
    if (name == "exp") op = Op::exp;
    else if (name == "log") op = Op::log;
    else if (name == "sqrt") op = Op::sqrt;
    else if (name == "abs") op = Op::abs;
    else if (name == "min") op = Op::min;
    else if (name == "max") op = Op::max;
    else throw ParseError("unknown identifier '" + std::string(name) + "'", start);

    expect('(');
    Expression a = expr();
    if (is_binary(op)) {
      expect(',');
      Expression b = expr();
      expect(')');
      return Expression::binary(op, a, b);
    }
    expect(')');
    return Expression::unary(op, a);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Expression

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::constant;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable() {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  return Expression(std::move(n));
}

Expression Expression::unary(Op op, Expression arg) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args[0] = arg.node_;
  return Expression(std::move(n));
}

Expression Expression::binary(Op op, Expression lhs, Expression rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args[0] = lhs.node_;
  n->args[1] = rhs.node_;
  return Expression(std::move(n));
}

double Expression::operator()(double x) const { return eval_node(*node_, x); }

std::size_t Expression::arity() const noexcept {
  if (node_->op == Op::constant || node_->op == Op::variable) return 0;
  return is_binary(node_->op) ? 2 : 1;
}

Expression Expression::arg(std::size_t i) const { return Expression(node_->args.at(i)); }

std::string Expression::to_string() const {
  std::string out;
  print_node(*node_, out);
  return out;
}

// ---------------------------------------------------------------------------
// Folding builders

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(a.constant_value() + b.constant_value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expression::binary(Op::add, a, b);
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(a.constant_value() - b.constant_value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expression::binary(Op::sub, a, b);
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(a.constant_value() * b.constant_value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return Expression::binary(Op::mul, a, b);
}

Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(a.constant_value() / b.constant_value());
  if (a.is_constant(0.0)) return Expression::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expression::binary(Op::div, a, b);
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.constant_value());
  if (a.op() == Op::negate) return a.arg(0);
  return Expression::unary(Op::negate, a);
}

Expression pow(const Expression& base, const Expression& exponent) {
  if (base.is_constant() && exponent.is_constant())
    return Expression::constant(std::pow(base.constant_value(), exponent.constant_value()));
  if (exponent.is_constant(0.0)) return Expression::constant(1.0);
  if (exponent.is_constant(1.0)) return base;
  return Expression::binary(Op::pow, base, exponent);
}

namespace {
Expression fold_unary(Op op, const Expression& a) {
  if (a.is_constant()) return Expression::constant(apply_unary(op, a.constant_value()));
  return Expression::unary(op, a);
}
Expression fold_binary(Op op, const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(apply_binary(op, a.constant_value(), b.constant_value()));
  return Expression::binary(op, a, b);
}
}  // namespace

Expression exp(const Expression& a) { return fold_unary(Op::exp, a); }
Expression log(const Expression& a) { return fold_unary(Op::log, a); }
Expression sqrt(const Expression& a) { return fold_unary(Op::sqrt, a); }
Expression abs(const Expression& a) { return fold_unary(Op::abs, a); }
Expression step(const Expression& a) { return fold_unary(Op::step, a); }
Expression min(const Expression& a, const Expression& b) { return fold_binary(Op::min, a, b); }
Expression max(const Expression& a, const Expression& b) { return fold_binary(Op::max, a, b); }

Expression parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Differentiation

Expression differentiate(const Expression& e) {
  const Expression one = Expression::constant(1.0);
  const Expression two = Expression::constant(2.0);
  switch (e.op()) {
    case Op::constant:
      return Expression::constant(0.0);
    case Op::variable:
      return one;
    case Op::negate:
      return -differentiate(e.arg(0));
    case Op::add:
      return differentiate(e.arg(0)) + differentiate(e.arg(1));
    case Op::sub:
      return differentiate(e.arg(0)) - differentiate(e.arg(1));
    case Op::mul: {
      const Expression u = e.arg(0), v = e.arg(1);
      return differentiate(u) * v + u * differentiate(v);
    }
    case Op::div: {
      const Expression u = e.arg(0), v = e.arg(1);
      const Expression du = differentiate(u), dv = differentiate(v);
      if (dv.is_constant(0.0)) return du / v;
      return (du * v - u * dv) / pow(v, two);
    }
    case Op::pow: {
      const Expression u = e.arg(0), v = e.arg(1);
      const Expression du = differentiate(u), dv = differentiate(v);
      if (v.is_constant()) {
        const double c = v.constant_value();
        return Expression::constant(c) * pow(u, Expression::constant(c - 1.0)) * du;
      }
      if (u.is_constant()) return e * log(u) * dv;
      return e * (dv * log(u) + v * du / u);
    }
    case Op::exp:
      return e * differentiate(e.arg(0));
    case Op::log:
      return differentiate(e.arg(0)) / e.arg(0);
    case Op::sqrt:
      return differentiate(e.arg(0)) / (two * e);
    case Op::abs: {
      // u > 0: u', u < 0: -u', u = 0: right derivative |u'|.
      const Expression u = e.arg(0), du = differentiate(u);
      const Expression pos = one - step(-u);
      const Expression neg = one - step(u);
      const Expression tie = step(u) * step(-u);
      return pos * du - neg * du + tie * abs(du);
    }
    case Op::min:
    case Op::max: {
      // Away from ties follow the active branch; at a tie the right
      // derivative is min(u', v') for min and max(u', v') for max.
      const Expression u = e.arg(0), v = e.arg(1);
      const Expression du = differentiate(u), dv = differentiate(v);
      const Expression u_below = one - step(u - v);
      const Expression u_above = one - step(v - u);
      const Expression tie = step(u - v) * step(v - u);
      if (e.op() == Op::min) return u_below * du + u_above * dv + tie * min(du, dv);
      return u_above * du + u_below * dv + tie * max(du, dv);
    }
    case Op::step:
      return Expression::constant(0.0);
  }
  return Expression::constant(0.0);
}

std::optional<int> polynomial_degree(const Expression& e) {
  switch (e.op()) {
    case Op::constant:
      return e.constant_value() == 0.0 ? -1 : 0;
    case Op::variable:
      return 1;
    case Op::negate:
      return polynomial_degree(e.arg(0));
    case Op::add:
    case Op::sub: {
      auto a = polynomial_degree(e.arg(0)), b = polynomial_degree(e.arg(1));
      if (!a || !b) return std::nullopt;
      return std::max(*a, *b);
    }
    case Op::mul: {
      auto a = polynomial_degree(e.arg(0)), b = polynomial_degree(e.arg(1));
      if (!a || !b) return std::nullopt;
      if (*a < 0 || *b < 0) return -1;
      return *a + *b;
    }
    case Op::div: {
      const Expression d = e.arg(1);
      if (!d.is_constant() || d.constant_value() == 0.0) return std::nullopt;
      return polynomial_degree(e.arg(0));
    }
    case Op::pow: {
      const Expression v = e.arg(1);
      if (!v.is_constant()) return std::nullopt;
      const double c = v.constant_value();
      if (c < 0.0 || c != std::floor(c) || c > 1e6) return std::nullopt;
      auto a = polynomial_degree(e.arg(0));
      if (!a) return std::nullopt;
      if (c == 0.0) return 0;
      if (*a < 0) return -1;
      return *a * static_cast<int>(c);
    }
    default:
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// CompiledExpression

namespace {
std::size_t compile_node(const Expression::Node& n, std::vector<std::pair<Op, double>>& out) {
  if (n.op == Op::constant || n.op == Op::variable) {
    out.emplace_back(n.op, n.value);
    return 1;
  }
  if (is_binary(n.op)) {
    const std::size_t a = compile_node(*n.args[0], out);
    const std::size_t b = compile_node(*n.args[1], out);
    out.emplace_back(n.op, 0.0);
    return std::max(a, b + 1);
  }
  const std::size_t a = compile_node(*n.args[0], out);
  out.emplace_back(n.op, 0.0);
  return a;
}
}  // namespace

CompiledExpression::CompiledExpression(const Expression& e) {
  std::vector<std::pair<Op, double>> prog;
  max_depth_ = compile_node(e.node(), prog);
  code_.reserve(prog.size());
  for (auto& [op, v] : prog) code_.push_back({op, v});
}

double CompiledExpression::operator()(double x) const {
  constexpr std::size_t kInline = 32;
  double inline_stack[kInline] = {};
  std::vector<double> heap;
  double* stack = inline_stack;
  if (max_depth_ > kInline) {
    heap.resize(max_depth_);
    stack = heap.data();
  }
  std::size_t top = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::constant: stack[top++] = in.value; break;
      case Op::variable: stack[top++] = x; break;
      case Op::add: --top; stack[top - 1] += stack[top]; break;
      case Op::sub: --top; stack[top - 1] -= stack[top]; break;
      case Op::mul: --top; stack[top - 1] *= stack[top]; break;
      case Op::div: --top; stack[top - 1] /= stack[top]; break;
      case Op::pow:
      case Op::min:
      case Op::max:
        --top;
        stack[top - 1] = apply_binary(in.op, stack[top - 1], stack[top]);
        break;
      default:
        stack[top - 1] = apply_unary(in.op, stack[top - 1]);
        break;
    }
  }
  return stack[0];
}

}  // namespace tstop
