#include "fluxforms/expr.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fluxforms {

namespace {

struct Dual {
  double v;
  Vec g;
};

class Node : public Expr {
 public:
  explicit Node(int dim) : dim_(dim) {}
  double value(const Vec& p) const override {
    double v;
    Vec g;
    eval(p, v, g);
    return v;
  }
  virtual Dual dual(const Vec& p) const = 0;
  void eval(const Vec& p, double& v, Vec& grad) const override {
    Dual d = dual(p);
    v = d.v;
    grad = d.g;
  }

 protected:
  int dim_;
};

class Const : public Node {
 public:
  Const(int dim, double c) : Node(dim), c_(c) {}
  Dual dual(const Vec&) const override { return {c_, Vec::Zero(dim_)}; }

 private:
  double c_;
};

class Coord : public Node {
 public:
  Coord(int dim, int axis) : Node(dim), axis_(axis) {
    if (axis < 0 || axis >= dim)
      throw std::invalid_argument("expression coordinate out of range for dimension");
  }
  Dual dual(const Vec& p) const override { return {p[axis_], Vec::Unit(dim_, axis_)}; }

 private:
  int axis_;
};

using NodePtr = std::shared_ptr<const Node>;

class Nary : public Node {
 public:
  enum Op { Add, Mul };
  Nary(int dim, Op op, std::vector<NodePtr> args)
      : Node(dim), op_(op), args_(std::move(args)) {}
  Dual dual(const Vec& p) const override {
    Dual acc = args_[0]->dual(p);
    for (size_t i = 1; i < args_.size(); ++i) {
      Dual d = args_[i]->dual(p);
      if (op_ == Add) {
        acc.v += d.v;
        acc.g += d.g;
      } else {
        acc.g = acc.g * d.v + d.g * acc.v;
        acc.v *= d.v;
      }
    }
    return acc;
  }

 private:
  Op op_;
  std::vector<NodePtr> args_;
};

class Binary : public Node {
 public:
  enum Op { Sub, Div };
  Binary(int dim, Op op, NodePtr a, NodePtr b)
      : Node(dim), op_(op), a_(std::move(a)), b_(std::move(b)) {}
  Dual dual(const Vec& p) const override {
    Dual a = a_->dual(p), b = b_->dual(p);
    if (op_ == Sub) return {a.v - b.v, a.g - b.g};
    if (b.v == 0.0) throw std::domain_error("expression division by zero");
    return {a.v / b.v, (a.g * b.v - b.g * a.v) / (b.v * b.v)};
  }

 private:
  Op op_;
  NodePtr a_, b_;
};

class Pow : public Node {
 public:
  Pow(int dim, NodePtr a, int k) : Node(dim), a_(std::move(a)), k_(k) {}
  Dual dual(const Vec& p) const override {
    Dual a = a_->dual(p);
    const double vk1 = std::pow(a.v, k_ - 1);
    return {vk1 * a.v, k_ * vk1 * a.g};
  }

 private:
  NodePtr a_;
  int k_;
};

class Unary : public Node {
 public:
  enum Op { Neg, Sin, Cos, Exp, Log, Sqrt };
  Unary(int dim, Op op, NodePtr a) : Node(dim), op_(op), a_(std::move(a)) {}
  Dual dual(const Vec& p) const override {
    Dual a = a_->dual(p);
    switch (op_) {
      case Neg:
        return {-a.v, -a.g};
      case Sin:
        return {std::sin(a.v), std::cos(a.v) * a.g};
      case Cos:
        return {std::cos(a.v), -std::sin(a.v) * a.g};
      case Exp: {
        const double e = std::exp(a.v);
        return {e, e * a.g};
      }
      case Log:
        if (a.v <= 0.0) throw std::domain_error("expression log of non-positive value");
        return {std::log(a.v), a.g / a.v};
      case Sqrt: {
        if (a.v < 0.0) throw std::domain_error("expression sqrt of negative value");
        const double s = std::sqrt(a.v);
        if (s == 0.0) throw std::domain_error("expression sqrt derivative at zero");
        return {s, a.g / (2.0 * s)};
      }
    }
    throw std::logic_error("unknown unary op");
  }

 private:
  Op op_;
  NodePtr a_;
};

NodePtr parse(const nlohmann::json& j, int dim);

std::vector<NodePtr> parse_list(const nlohmann::json& j, int dim, size_t min_args) {
  if (!j.is_array() || j.size() < min_args)
    throw std::invalid_argument("expression operator expects an argument array");
  std::vector<NodePtr> out;
  for (const auto& e : j) out.push_back(parse(e, dim));
  return out;
}

NodePtr parse(const nlohmann::json& j, int dim) {
  if (j.is_number()) return std::make_shared<Const>(dim, j.get<double>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    static const std::string named = "xyzwv";
    if (s.size() == 1) {
      const auto pos = named.find(s[0]);
      if (pos != std::string::npos) return std::make_shared<Coord>(dim, static_cast<int>(pos));
    }
    if (s.size() == 2 && s[0] == 'x' && s[1] >= '0' && s[1] <= '9')
      return std::make_shared<Coord>(dim, s[1] - '0');
    throw std::invalid_argument("unknown expression symbol: " + s);
  }
  if (!j.is_object() || j.size() != 1)
    throw std::invalid_argument("expression node must be a number, symbol, or single-key object");
  const std::string op = j.begin().key();
  const nlohmann::json& arg = j.begin().value();
  if (op == "add") return std::make_shared<Nary>(dim, Nary::Add, parse_list(arg, dim, 1));
  if (op == "mul") return std::make_shared<Nary>(dim, Nary::Mul, parse_list(arg, dim, 1));
  if (op == "sub" || op == "div") {
    auto args = parse_list(arg, dim, 2);
    if (args.size() != 2) throw std::invalid_argument(op + " expects two arguments");
    return std::make_shared<Binary>(dim, op == "sub" ? Binary::Sub : Binary::Div,
                                    args[0], args[1]);
  }
  if (op == "pow") {
    if (!arg.is_array() || arg.size() != 2 || !arg[1].is_number_integer())
      throw std::invalid_argument("pow expects [expr, integer]");
    return std::make_shared<Pow>(dim, parse(arg[0], dim), arg[1].get<int>());
  }
  const std::pair<const char*, Unary::Op> unary[] = {
      {"neg", Unary::Neg}, {"sin", Unary::Sin}, {"cos", Unary::Cos},
      {"exp", Unary::Exp}, {"log", Unary::Log}, {"sqrt", Unary::Sqrt}};
  for (const auto& [name, code] : unary)
    if (op == name) return std::make_shared<Unary>(dim, code, parse(arg, dim));
  throw std::invalid_argument("unknown expression operator: " + op);
}

}  // namespace

ExprPtr parse_expression(const nlohmann::json& j, int dimension) {
  return parse(j, dimension);
}

}  // namespace fluxforms
