#pragma once

#include "claw/rational.hpp"

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace claw {

/// Error raised when evaluation hits a vanishing quotient denominator.
/// Carries the text of the offending subexpression.
class EvalSingular : public std::runtime_error {
  public:
    explicit EvalSingular(const std::string& subexpr)
        : std::runtime_error("division by zero while evaluating: " + subexpr),
          subexpression(subexpr) {}
    std::string subexpression;
};

/// Immutable expression tree over indexed field variables.
///
/// Nodes are shared (the structure is a DAG); evaluation and differentiation
/// memoize on node identity, so heavily shared expressions -- symbolic
/// Jacobians, adjugates of derived systems -- stay cheap. Integer power
/// exponents are >= 0 by construction; negative powers are written as
/// quotients. Constants are exact rationals.
class Expr {
  public:
    enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow };

    struct Node {
        Kind kind;
        Rational value;                  // Constant
        int var_index = -1;              // Variable
        int exponent = 0;                // Pow
        std::shared_ptr<const Node> lhs; // unary operand or left operand
        std::shared_ptr<const Node> rhs; // right operand
    };
    using NodePtr = std::shared_ptr<const Node>;

    Expr() : node_(constant_node(Rational(0))) {}
    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    static Expr constant(Rational v) { return Expr(constant_node(v)); }
    static Expr constant(std::int64_t v) { return Expr(constant_node(Rational(v))); }
    static Expr variable(int index) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Variable;
        n->var_index = index;
        return Expr(n);
    }

    friend Expr operator+(const Expr& a, const Expr& b) { return binary(Kind::Add, a, b); }
    friend Expr operator-(const Expr& a, const Expr& b) { return binary(Kind::Sub, a, b); }
    friend Expr operator*(const Expr& a, const Expr& b) { return binary(Kind::Mul, a, b); }
    friend Expr operator/(const Expr& a, const Expr& b) { return binary(Kind::Div, a, b); }
    Expr operator-() const {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Neg;
        n->lhs = node_;
        return Expr(n);
    }
    static Expr pow(const Expr& base, int exponent) {
        if (exponent < 0) throw std::invalid_argument("negative exponent; write a quotient");
        auto n = std::make_shared<Node>();
        n->kind = Kind::Pow;
        n->lhs = base.node_;
        n->exponent = exponent;
        return Expr(n);
    }

    const NodePtr& node() const { return node_; }
    Kind kind() const { return node_->kind; }
    bool is_constant() const { return node_->kind == Kind::Constant; }
    const Rational& constant_value() const { return node_->value; }

    /// Largest variable index referenced, plus one (0 for constant trees).
    int max_variable_count() const;

    double evaluate(std::span<const double> point) const;

    /// Exact symbolic partial derivative; constant folding and the trivial
    /// 0*x / x+0 / x^1 rewrites run on the result, nothing more.
    Expr differentiate(int var_index) const;

    /// The post-differentiation folding pass, exposed for reuse.
    Expr folded() const;

    std::string str() const;

    static bool structurally_equal(const Expr& a, const Expr& b);

  private:
    friend class ExprEvaluator;
    friend class Differentiator;

    static NodePtr constant_node(Rational v) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Constant;
        n->value = v;
        return n;
    }
    static Expr binary(Kind k, const Expr& a, const Expr& b) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->lhs = a.node_;
        n->rhs = b.node_;
        return Expr(n);
    }

    NodePtr node_;
};

/// Evaluates a batch of expressions at one point with a shared memo table,
/// so expressions that share subtrees (a symbolic Jacobian, say) cost one
/// traversal of the underlying DAG.
class ExprEvaluator {
  public:
    explicit ExprEvaluator(std::span<const double> point) : point_(point) {}

    double value(const Expr& e) { return eval(e.node().get()); }

  private:
    double eval(const Expr::Node* n);

    std::span<const double> point_;
    std::unordered_map<const Expr::Node*, double> memo_;
};

inline double ExprEvaluator::eval(const Expr::Node* n) {
    auto it = memo_.find(n);
    if (it != memo_.end()) return it->second;
    double v = 0.0;
    switch (n->kind) {
        case Expr::Kind::Constant: v = n->value.to_double(); break;
        case Expr::Kind::Variable:
            if (n->var_index < 0 || static_cast<std::size_t>(n->var_index) >= point_.size())
                throw std::out_of_range("variable index out of range for evaluation point");
            v = point_[static_cast<std::size_t>(n->var_index)];
            break;
        case Expr::Kind::Add: v = eval(n->lhs.get()) + eval(n->rhs.get()); break;
        case Expr::Kind::Sub: v = eval(n->lhs.get()) - eval(n->rhs.get()); break;
        case Expr::Kind::Mul: v = eval(n->lhs.get()) * eval(n->rhs.get()); break;
        case Expr::Kind::Div: {
            double den = eval(n->rhs.get());
            if (den == 0.0) throw EvalSingular(Expr(n->rhs).str());
            v = eval(n->lhs.get()) / den;
            break;
        }
        case Expr::Kind::Neg: v = -eval(n->lhs.get()); break;
        case Expr::Kind::Pow: {
            double base = eval(n->lhs.get());
            v = 1.0;
            for (int i = 0; i < n->exponent; ++i) v *= base;
            break;
        }
    }
    memo_.emplace(n, v);
    return v;
}

inline double Expr::evaluate(std::span<const double> point) const {
    ExprEvaluator ev(point);
    return ev.value(*this);
}

} // namespace claw
