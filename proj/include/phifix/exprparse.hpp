#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

// Arithmetic expressions over named real variables.
//
// Grammar (binding tightness increasing downward, '^' right-associative):
//   expr    := product (('+'|'-') product)*
//   product := factor (('*'|'/') factor)*
//   factor  := '-' factor | power
//   power   := primary ('^' factor)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// so "-2^2" is -(2^2) and "2^3^2" is 2^(3^2).

namespace phifix {

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t position, std::string message, std::string token)
      : std::runtime_error("parse error at byte " + std::to_string(position) +
                           ": " + message +
                           (token.empty() ? "" : " (near '" + token + "')")),
        position_(position), message_(std::move(message)),
        token_(std::move(token)) {}

  std::size_t position() const { return position_; }
  const std::string& message() const { return message_; }
  const std::string& token() const { return token_; }

private:
  std::size_t position_;
  std::string message_;
  std::string token_;
};

/// Domain failure during evaluation (sqrt of a negative, ln of a
/// non-positive, division by zero, negative base with fractional power).
/// Carries the printed form of the offending subexpression.
class EvalError : public std::runtime_error {
public:
  EvalError(std::string message, std::string subexpression)
      : std::runtime_error(message +
                           (subexpression.empty()
                                ? ""
                                : " in '" + subexpression + "'")),
        message_(std::move(message)), subexpression_(std::move(subexpression)) {}

  const std::string& message() const { return message_; }
  const std::string& subexpression() const { return subexpression_; }

private:
  std::string message_;
  std::string subexpression_;
};

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class FuncOp { Sin, Cos, Exp, Abs, Sqrt, Ln, Min, Max };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  struct Num {
    double value;
  };
  struct Var {
    std::string name;
  };
  struct Neg {
    ExprPtr operand;
  };
  struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };
  struct Call {
    FuncOp fn;
    std::vector<ExprPtr> args;
  };

  std::variant<Num, Var, Neg, Binary, Call> v;
};

/// Variable bindings for evaluation. A small flat list; lookups are linear,
/// which beats hashing for the handful of names an expression ever uses.
class Env {
public:
  Env() = default;
  Env(std::initializer_list<std::pair<std::string, double>> init) {
    for (const auto& [k, x] : init) set(k, x);
  }

  void set(std::string_view name, double value) {
    for (auto& [k, x] : slots_)
      if (k == name) {
        x = value;
        return;
      }
    slots_.emplace_back(std::string(name), value);
  }

  const double* find(std::string_view name) const {
    for (const auto& [k, x] : slots_)
      if (k == name) return &x;
    return nullptr;
  }

private:
  std::vector<std::pair<std::string, double>> slots_;
};

namespace detail {

inline int precedence(const ExprNode& n) {
  struct V {
    int operator()(const ExprNode::Num&) const { return 5; }
    int operator()(const ExprNode::Var&) const { return 5; }
    int operator()(const ExprNode::Call&) const { return 5; }
    int operator()(const ExprNode::Neg&) const { return 3; }
    int operator()(const ExprNode::Binary& b) const {
      switch (b.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
      return 0;
    }
  };
  return std::visit(V{}, n.v);
}

inline std::string_view func_name(FuncOp f) {
  switch (f) {
    case FuncOp::Sin: return "sin";
    case FuncOp::Cos: return "cos";
    case FuncOp::Exp: return "exp";
    case FuncOp::Abs: return "abs";
    case FuncOp::Sqrt: return "sqrt";
    case FuncOp::Ln: return "ln";
    case FuncOp::Min: return "min";
    case FuncOp::Max: return "max";
  }
  return "?";
}

inline std::string format_number(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

void print_node(const ExprNode& n, std::string& out);

inline void print_child(const ExprNode& child, int min_prec, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print_node(child, out);
    out += ')';
  } else {
    print_node(child, out);
  }
}

// Parentheses are emitted exactly where re-parsing would otherwise change
// the tree: the right operand of -,/ and the left operand of ^ get them
// even at equal precedence (those slots are non-associative), the operand
// of unary minus and the right operand of ^ live in a `factor` slot and
// only need them below factor level.
inline void print_node(const ExprNode& n, std::string& out) {
  struct V {
    std::string& out;
    void operator()(const ExprNode::Num& x) const {
      out += format_number(x.value);
    }
    void operator()(const ExprNode::Var& x) const { out += x.name; }
    void operator()(const ExprNode::Neg& x) const {
      out += '-';
      print_child(*x.operand, 3, out);
    }
    void operator()(const ExprNode::Binary& b) const {
      switch (b.op) {
        case BinaryOp::Add:
          print_child(*b.lhs, 1, out);
          out += " + ";
          print_child(*b.rhs, 2, out);
          break;
        case BinaryOp::Sub:
          print_child(*b.lhs, 1, out);
          out += " - ";
          print_child(*b.rhs, 2, out);
          break;
        case BinaryOp::Mul:
          print_child(*b.lhs, 2, out);
          out += "*";
          print_child(*b.rhs, 3, out);
          break;
        case BinaryOp::Div:
          print_child(*b.lhs, 2, out);
          out += "/";
          print_child(*b.rhs, 3, out);
          break;
        case BinaryOp::Pow:
          print_child(*b.lhs, 5, out);
          out += "^";
          print_child(*b.rhs, 3, out);
          break;
      }
    }
    void operator()(const ExprNode::Call& c) const {
      out += func_name(c.fn);
      out += '(';
      for (std::size_t i = 0; i < c.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*c.args[i], out);
      }
      out += ')';
    }
  };
  std::visit(V{out}, n.v);
}

inline std::string print_tree(const ExprNode& n) {
  std::string out;
  print_node(n, out);
  return out;
}

inline bool nodes_equal(const ExprNode& a, const ExprNode& b) {
  if (a.v.index() != b.v.index()) return false;
  if (const auto* na = std::get_if<ExprNode::Num>(&a.v))
    return na->value == std::get<ExprNode::Num>(b.v).value;
  if (const auto* va = std::get_if<ExprNode::Var>(&a.v))
    return va->name == std::get<ExprNode::Var>(b.v).name;
  if (const auto* ua = std::get_if<ExprNode::Neg>(&a.v))
    return nodes_equal(*ua->operand, *std::get<ExprNode::Neg>(b.v).operand);
  if (const auto* ba = std::get_if<ExprNode::Binary>(&a.v)) {
    const auto& bb = std::get<ExprNode::Binary>(b.v);
    return ba->op == bb.op && nodes_equal(*ba->lhs, *bb.lhs) &&
           nodes_equal(*ba->rhs, *bb.rhs);
  }
  const auto& ca = std::get<ExprNode::Call>(a.v);
  const auto& cb = std::get<ExprNode::Call>(b.v);
  if (ca.fn != cb.fn || ca.args.size() != cb.args.size()) return false;
  for (std::size_t i = 0; i < ca.args.size(); ++i)
    if (!nodes_equal(*ca.args[i], *cb.args[i])) return false;
  return true;
}

inline double eval_node(const ExprNode& n, const Env& env) {
  struct V {
    const Env& env;
    const ExprNode& self;
    double operator()(const ExprNode::Num& x) const { return x.value; }
    double operator()(const ExprNode::Var& x) const {
      const double* p = env.find(x.name);
      if (!p) throw EvalError("unbound variable '" + x.name + "'", "");
      return *p;
    }
    double operator()(const ExprNode::Neg& x) const {
      return -eval_node(*x.operand, env);
    }
    double operator()(const ExprNode::Binary& b) const {
      const double l = eval_node(*b.lhs, env);
      const double r = eval_node(*b.rhs, env);
      switch (b.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div:
          if (r == 0.0) throw EvalError("division by zero", print_tree(self));
          return l / r;
        case BinaryOp::Pow:
          if (l == 0.0 && r < 0.0)
            throw EvalError("zero raised to a negative power",
                            print_tree(self));
          if (l < 0.0 && r != std::floor(r))
            throw EvalError("negative base with non-integer exponent",
                            print_tree(self));
          return std::pow(l, r);
      }
      return 0.0;
    }
    double operator()(const ExprNode::Call& c) const {
      const double a0 = eval_node(*c.args[0], env);
      switch (c.fn) {
        case FuncOp::Sin: return std::sin(a0);
        case FuncOp::Cos: return std::cos(a0);
        case FuncOp::Exp: return std::exp(a0);
        case FuncOp::Abs: return std::fabs(a0);
        case FuncOp::Sqrt:
          if (a0 < 0.0)
            throw EvalError("square root of a negative value",
                            print_tree(self));
          return std::sqrt(a0);
        case FuncOp::Ln:
          if (a0 <= 0.0)
            throw EvalError("logarithm of a non-positive value",
                            print_tree(self));
          return std::log(a0);
        case FuncOp::Min: return std::min(a0, eval_node(*c.args[1], env));
        case FuncOp::Max: return std::max(a0, eval_node(*c.args[1], env));
      }
      return 0.0;
    }
  };
  return std::visit(V{env, n}, n.v);
}

inline void collect_vars(const ExprNode& n, std::vector<std::string>& out) {
  struct V {
    std::vector<std::string>& out;
    void operator()(const ExprNode::Num&) const {}
    void operator()(const ExprNode::Var& x) const {
      for (const auto& s : out)
        if (s == x.name) return;
      out.push_back(x.name);
    }
    void operator()(const ExprNode::Neg& x) const { collect_vars(*x.operand, out); }
    void operator()(const ExprNode::Binary& b) const {
      collect_vars(*b.lhs, out);
      collect_vars(*b.rhs, out);
    }
    void operator()(const ExprNode::Call& c) const {
      for (const auto& a : c.args) collect_vars(*a, out);
    }
  };
  std::visit(V{out}, n.v);
}

inline ExprPtr substitute_node(const ExprPtr& n, std::string_view name,
                               const ExprPtr& replacement) {
  struct V {
    const ExprPtr& self;
    std::string_view name;
    const ExprPtr& repl;
    ExprPtr operator()(const ExprNode::Num&) const { return self; }
    ExprPtr operator()(const ExprNode::Var& x) const {
      return x.name == name ? repl : self;
    }
    ExprPtr operator()(const ExprNode::Neg& x) const {
      ExprPtr sub = substitute_node(x.operand, name, repl);
      if (sub == x.operand) return self;
      return std::make_shared<const ExprNode>(ExprNode{ExprNode::Neg{sub}});
    }
    ExprPtr operator()(const ExprNode::Binary& b) const {
      ExprPtr l = substitute_node(b.lhs, name, repl);
      ExprPtr r = substitute_node(b.rhs, name, repl);
      if (l == b.lhs && r == b.rhs) return self;
      return std::make_shared<const ExprNode>(
          ExprNode{ExprNode::Binary{b.op, l, r}});
    }
    ExprPtr operator()(const ExprNode::Call& c) const {
      std::vector<ExprPtr> args;
      args.reserve(c.args.size());
      bool changed = false;
      for (const auto& a : c.args) {
        args.push_back(substitute_node(a, name, repl));
        changed = changed || args.back() != a;
      }
      if (!changed) return self;
      return std::make_shared<const ExprNode>(
          ExprNode{ExprNode::Call{c.fn, std::move(args)}});
    }
  };
  return std::visit(V{n, name, replacement}, n->v);
}

}  // namespace detail

/// Immutable parsed expression. Copies share the underlying tree.
class Expr {
public:
  Expr() = default;
  explicit Expr(ExprPtr root) : root_(std::move(root)) {}

  bool empty() const { return root_ == nullptr; }
  const ExprNode& root() const {
    if (!root_) throw std::logic_error("empty expression");
    return *root_;
  }
  ExprPtr share() const { return root_; }

  double operator()(const Env& env) const { return detail::eval_node(root(), env); }

  /// Printed form; parsing it back yields a structurally identical tree.
  std::string str() const { return detail::print_tree(root()); }

  std::vector<std::string> free_variables() const {
    std::vector<std::string> out;
    if (root_) detail::collect_vars(*root_, out);
    return out;
  }

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.empty() || b.empty()) return a.empty() && b.empty();
    return detail::nodes_equal(*a.root_, *b.root_);
  }

  static Expr number(double x) {
    return Expr(std::make_shared<const ExprNode>(ExprNode{ExprNode::Num{x}}));
  }
  static Expr variable(std::string name) {
    return Expr(std::make_shared<const ExprNode>(
        ExprNode{ExprNode::Var{std::move(name)}}));
  }
  static Expr negate(const Expr& e) {
    return Expr(
        std::make_shared<const ExprNode>(ExprNode{ExprNode::Neg{e.share()}}));
  }
  static Expr binary(BinaryOp op, const Expr& l, const Expr& r) {
    return Expr(std::make_shared<const ExprNode>(
        ExprNode{ExprNode::Binary{op, l.share(), r.share()}}));
  }
  static Expr call(FuncOp fn, std::vector<Expr> args) {
    std::vector<ExprPtr> ps;
    ps.reserve(args.size());
    for (const auto& a : args) ps.push_back(a.share());
    return Expr(std::make_shared<const ExprNode>(
        ExprNode{ExprNode::Call{fn, std::move(ps)}}));
  }

private:
  ExprPtr root_;
};

inline double eval(const Expr& e, const Env& env) { return e(env); }

/// Replace every occurrence of variable `name` by `replacement`.
inline Expr substitute(const Expr& e, std::string_view name,
                       const Expr& replacement) {
  return Expr(detail::substitute_node(e.share(), name, replacement.share()));
}

namespace detail {

struct Token {
  enum Kind { Number, Name, Plus, Minus, Star, Slash, Caret, LParen, RParen,
              Comma, End } kind;
  std::size_t pos;
  std::string_view text;
  double value = 0.0;
};

class Parser {
public:
  Parser(std::string_view src, const std::vector<std::string_view>& allowed)
      : src_(src), allowed_(allowed) {
    advance();
  }

  Expr run() {
    Expr e = parse_expr();
    if (cur_.kind != Token::End)
      fail("unexpected trailing input");
    return e;
  }

private:
  std::string_view src_;
  const std::vector<std::string_view>& allowed_;
  std::size_t at_ = 0;
  Token cur_;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(cur_.pos, msg, std::string(cur_.text));
  }
  [[noreturn]] void fail_at(const Token& t, const std::string& msg) const {
    throw ParseError(t.pos, msg, std::string(t.text));
  }

  void advance() {
    while (at_ < src_.size() &&
           (src_[at_] == ' ' || src_[at_] == '\t' || src_[at_] == '\n' ||
            src_[at_] == '\r'))
      ++at_;
    cur_.pos = at_;
    if (at_ >= src_.size()) {
      cur_ = {Token::End, at_, {}, 0.0};
      return;
    }
    const char c = src_[at_];
    if ((c >= '0' && c <= '9') || c == '.') {
      double value = 0.0;
      const char* first = src_.data() + at_;
      const char* last = src_.data() + src_.size();
      auto [p, ec] = std::from_chars(first, last, value);
      if (ec == std::errc::result_out_of_range)
        throw ParseError(at_, "numeric literal out of range",
                         std::string(first, p));
      if (ec != std::errc() || p == first)
        throw ParseError(at_, "malformed numeric literal", std::string(1, c));
      cur_ = {Token::Number, at_,
              src_.substr(at_, static_cast<std::size_t>(p - first)), value};
      at_ += static_cast<std::size_t>(p - first);
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      std::size_t end = at_;
      while (end < src_.size() &&
             ((src_[end] >= 'a' && src_[end] <= 'z') ||
              (src_[end] >= 'A' && src_[end] <= 'Z') ||
              (src_[end] >= '0' && src_[end] <= '9') || src_[end] == '_'))
        ++end;
      cur_ = {Token::Name, at_, src_.substr(at_, end - at_), 0.0};
      at_ = end;
      return;
    }
    Token::Kind k;
    switch (c) {
      case '+': k = Token::Plus; break;
      case '-': k = Token::Minus; break;
      case '*': k = Token::Star; break;
      case '/': k = Token::Slash; break;
      case '^': k = Token::Caret; break;
      case '(': k = Token::LParen; break;
      case ')': k = Token::RParen; break;
      case ',': k = Token::Comma; break;
      default:
        throw ParseError(at_, "unexpected character", std::string(1, c));
    }
    cur_ = {k, at_, src_.substr(at_, 1), 0.0};
    ++at_;
  }

  bool accept(Token::Kind k) {
    if (cur_.kind != k) return false;
    advance();
    return true;
  }

  Expr parse_expr() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept(Token::Plus))
        lhs = Expr::binary(BinaryOp::Add, lhs, parse_product());
      else if (accept(Token::Minus))
        lhs = Expr::binary(BinaryOp::Sub, lhs, parse_product());
      else
        return lhs;
    }
  }

  Expr parse_product() {
    Expr lhs = parse_factor();
    for (;;) {
      if (accept(Token::Star))
        lhs = Expr::binary(BinaryOp::Mul, lhs, parse_factor());
      else if (accept(Token::Slash))
        lhs = Expr::binary(BinaryOp::Div, lhs, parse_factor());
      else
        return lhs;
    }
  }

  Expr parse_factor() {
    if (accept(Token::Minus)) return Expr::negate(parse_factor());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept(Token::Caret))
      return Expr::binary(BinaryOp::Pow, base, parse_factor());
    return base;
  }

  static bool lookup_func(std::string_view name, FuncOp& fn,
                          std::size_t& arity) {
    struct Entry {
      std::string_view name;
      FuncOp fn;
      std::size_t arity;
    };
    static constexpr Entry table[] = {
        {"sin", FuncOp::Sin, 1},  {"cos", FuncOp::Cos, 1},
        {"exp", FuncOp::Exp, 1},  {"abs", FuncOp::Abs, 1},
        {"sqrt", FuncOp::Sqrt, 1}, {"ln", FuncOp::Ln, 1},
        {"min", FuncOp::Min, 2},  {"max", FuncOp::Max, 2},
    };
    for (const auto& e : table)
      if (e.name == name) {
        fn = e.fn;
        arity = e.arity;
        return true;
      }
    return false;
  }

  Expr parse_primary() {
    if (cur_.kind == Token::Number) {
      Expr e = Expr::number(cur_.value);
      advance();
      return e;
    }
    if (cur_.kind == Token::Name) {
      Token name = cur_;
      advance();
      if (cur_.kind == Token::LParen) {
        FuncOp fn;
        std::size_t arity = 0;
        if (!lookup_func(name.text, fn, arity))
          fail_at(name, "unknown function '" + std::string(name.text) + "'");
        advance();
        std::vector<Expr> args;
        args.push_back(parse_expr());
        while (accept(Token::Comma)) args.push_back(parse_expr());
        if (cur_.kind != Token::RParen) fail("expected ')'");
        if (args.size() != arity)
          fail_at(name, "function '" + std::string(name.text) + "' expects " +
                            std::to_string(arity) + " argument" +
                            (arity == 1 ? "" : "s") + ", got " +
                            std::to_string(args.size()));
        advance();
        return Expr::call(fn, std::move(args));
      }
      for (const auto& v : allowed_)
        if (v == name.text) return Expr::variable(std::string(name.text));
      fail_at(name, "variable '" + std::string(name.text) +
                        "' is not allowed here");
    }
    if (accept(Token::LParen)) {
      Expr e = parse_expr();
      if (cur_.kind != Token::RParen) fail("expected ')'");
      advance();
      return e;
    }
    fail(cur_.kind == Token::End ? "unexpected end of input"
                                 : "expected a value");
  }
};

}  // namespace detail

/// Parse `input` admitting exactly the variables in `allowed_vars`.
/// Throws ParseError with a byte offset on any malformed input.
inline Expr parse(std::string_view input,
                  const std::vector<std::string_view>& allowed_vars) {
  return detail::Parser(input, allowed_vars).run();
}

inline Expr parse(std::string_view input,
                  std::initializer_list<std::string_view> allowed_vars) {
  std::vector<std::string_view> vs(allowed_vars);
  return detail::Parser(input, vs).run();
}

}  // namespace phifix
