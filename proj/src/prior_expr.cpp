#include "pmp/prior_expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace pmp {

struct PriorExpression::Node {
  enum class Kind { Number, Theta, Neg, Add, Sub, Mul, Div, Pow, Log, Exp, Sqrt, Abs };
  Kind kind = Kind::Number;
  double value = 0.0;
  int index = 0;
  std::shared_ptr<const Node> a, b;

  [[nodiscard]] double eval(const ParamVec& t) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::Theta: return t(index);
      case Kind::Neg: return -a->eval(t);
      case Kind::Add: return a->eval(t) + b->eval(t);
      case Kind::Sub: return a->eval(t) - b->eval(t);
      case Kind::Mul: return a->eval(t) * b->eval(t);
      case Kind::Div: return a->eval(t) / b->eval(t);
      case Kind::Pow: return std::pow(a->eval(t), b->eval(t));
      case Kind::Log: return std::log(a->eval(t));
      case Kind::Exp: return std::exp(a->eval(t));
      case Kind::Sqrt: return std::sqrt(a->eval(t));
      case Kind::Abs: return std::abs(a->eval(t));
    }
    return std::nan("");
  }
};

namespace {

using Node = PriorExpression::Node;
using NodePtr = std::shared_ptr<const Node>;
using Kind = Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->value = v;
  return n;
}

class Parser {
 public:
  Parser(const std::string& text, int param_dim) : s_(text), dim_(param_dim) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("prior expression, column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = make(Kind::Add, n, term());
      else if (accept('-')) n = make(Kind::Sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = make(Kind::Mul, n, unary());
      else if (accept('/')) n = make(Kind::Div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr n = expr();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return literal();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr literal() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return number(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    if (id == "pi") return number(std::numbers::pi);
    if (id == "e") return number(std::numbers::e);
    if (id.size() == 6 && id.starts_with("theta") && id[5] >= '1' && id[5] <= '3') {
      const int i = id[5] - '1';
      if (i >= dim_) {
        pos_ = start;
        fail(id + " exceeds the parameter dimension " + std::to_string(dim_));
      }
      auto n = std::make_shared<Node>();
      n->kind = Kind::Theta;
      n->index = i;
      return n;
    }
    Kind k;
    int arity = 1;
    if (id == "log") k = Kind::Log;
    else if (id == "exp") k = Kind::Exp;
    else if (id == "sqrt") k = Kind::Sqrt;
    else if (id == "abs") k = Kind::Abs;
    else if (id == "pow") k = Kind::Pow, arity = 2;
    else {
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    expect('(');
    NodePtr a = expr();
    NodePtr b;
    if (arity == 2) {
      expect(',');
      b = expr();
    }
    expect(')');
    return make(k, a, b);
  }

  const std::string& s_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

PriorExpression PriorExpression::parse(const std::string& text, int param_dim) {
  PriorExpression e;
  e.text_ = text;
  e.root_ = Parser(text, param_dim).parse();
  return e;
}

double PriorExpression::operator()(const ParamVec& theta) const { return root_->eval(theta); }

PriorField expression_prior(const std::string& name, const std::string& text, int param_dim,
                            const NumericsConfig& cfg) {
  const PriorExpression e = PriorExpression::parse(text, param_dim);
  return PriorField::from_log(name, [e](const ParamVec& t) { return e(t); }, cfg.fd_step_theta);
}

}  // namespace pmp
