#include "claw/expr.hpp"

#include <functional>

namespace claw {

namespace {

using Node = Expr::Node;
using NodePtr = Expr::NodePtr;
using Kind = Expr::Kind;

bool is_const(const NodePtr& n, const Rational& v) {
    return n->kind == Kind::Constant && n->value == v;
}

} // namespace

// ---------------------------------------------------------------------------
// Folding
// ---------------------------------------------------------------------------

/// Bottom-up constant folding plus the trivial identities. Runs after
/// differentiation (and nowhere else); memoized on node identity so shared
/// subtrees fold once.
class Folder {
  public:
    NodePtr fold(const NodePtr& n) {
        auto it = memo_.find(n.get());
        if (it != memo_.end()) return it->second;
        NodePtr out = rewrite(n);
        memo_.emplace(n.get(), out);
        return out;
    }

  private:
    NodePtr rewrite(const NodePtr& n) {
        switch (n->kind) {
            case Kind::Constant:
            case Kind::Variable: return n;
            case Kind::Neg: {
                NodePtr a = fold(n->lhs);
                if (a->kind == Kind::Constant) return Expr::constant(-a->value).node();
                if (a->kind == Kind::Neg) return a->lhs;
                return rebuild_unary(n, a);
            }
            case Kind::Pow: {
                NodePtr a = fold(n->lhs);
                if (n->exponent == 0) return Expr::constant(1).node();
                if (n->exponent == 1) return a;
                if (a->kind == Kind::Constant)
                    return Expr::constant(a->value.pow(n->exponent)).node();
                return rebuild_unary(n, a);
            }
            case Kind::Add: {
                NodePtr a = fold(n->lhs), b = fold(n->rhs);
                if (a->kind == Kind::Constant && b->kind == Kind::Constant)
                    return Expr::constant(a->value + b->value).node();
                if (is_const(a, Rational(0))) return b;
                if (is_const(b, Rational(0))) return a;
                return rebuild(n, a, b);
            }
            case Kind::Sub: {
                NodePtr a = fold(n->lhs), b = fold(n->rhs);
                if (a->kind == Kind::Constant && b->kind == Kind::Constant)
                    return Expr::constant(a->value - b->value).node();
                if (is_const(b, Rational(0))) return a;
                if (is_const(a, Rational(0))) return (-Expr(b)).node();
                return rebuild(n, a, b);
            }
            case Kind::Mul: {
                NodePtr a = fold(n->lhs), b = fold(n->rhs);
                if (a->kind == Kind::Constant && b->kind == Kind::Constant)
                    return Expr::constant(a->value * b->value).node();
                if (is_const(a, Rational(0)) || is_const(b, Rational(0)))
                    return Expr::constant(0).node();
                if (is_const(a, Rational(1))) return b;
                if (is_const(b, Rational(1))) return a;
                return rebuild(n, a, b);
            }
            case Kind::Div: {
                NodePtr a = fold(n->lhs), b = fold(n->rhs);
                if (a->kind == Kind::Constant && b->kind == Kind::Constant &&
                    !b->value.is_zero())
                    return Expr::constant(a->value / b->value).node();
                if (is_const(a, Rational(0)) && !is_const(b, Rational(0)))
                    return Expr::constant(0).node();
                if (is_const(b, Rational(1))) return a;
                return rebuild(n, a, b);
            }
        }
        return n;
    }

    static NodePtr rebuild(const NodePtr& orig, const NodePtr& a, const NodePtr& b) {
        if (a == orig->lhs && b == orig->rhs) return orig;
        auto m = std::make_shared<Node>(*orig);
        m->lhs = a;
        m->rhs = b;
        return m;
    }
    static NodePtr rebuild_unary(const NodePtr& orig, const NodePtr& a) {
        if (a == orig->lhs) return orig;
        auto m = std::make_shared<Node>(*orig);
        m->lhs = a;
        return m;
    }

    std::unordered_map<const Node*, NodePtr> memo_;
};

Expr Expr::folded() const {
    Folder f;
    return Expr(f.fold(node_));
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

class Differentiator {
  public:
    explicit Differentiator(int var) : var_(var) {}

    NodePtr diff(const NodePtr& n) {
        auto it = memo_.find(n.get());
        if (it != memo_.end()) return it->second;
        NodePtr out = rules(n);
        memo_.emplace(n.get(), out);
        return out;
    }

  private:
    NodePtr rules(const NodePtr& n) {
        Expr e(n);
        switch (n->kind) {
            case Kind::Constant: return Expr::constant(0).node();
            case Kind::Variable:
                return Expr::constant(n->var_index == var_ ? 1 : 0).node();
            case Kind::Add: return (Expr(diff(n->lhs)) + Expr(diff(n->rhs))).node();
            case Kind::Sub: return (Expr(diff(n->lhs)) - Expr(diff(n->rhs))).node();
            case Kind::Mul: {
                Expr da(diff(n->lhs)), db(diff(n->rhs));
                return (da * Expr(n->rhs) + Expr(n->lhs) * db).node();
            }
            case Kind::Div: {
                Expr a(n->lhs), b(n->rhs);
                Expr da(diff(n->lhs)), db(diff(n->rhs));
                return ((da * b - a * db) / Expr::pow(b, 2)).node();
            }
            case Kind::Neg: return (-Expr(diff(n->lhs))).node();
            case Kind::Pow: {
                if (n->exponent == 0) return Expr::constant(0).node();
                Expr base(n->lhs), db(diff(n->lhs));
                if (n->exponent == 1) return db.node();
                return (Expr::constant(n->exponent) * Expr::pow(base, n->exponent - 1) * db)
                    .node();
            }
        }
        return Expr::constant(0).node();
    }

    int var_;
    std::unordered_map<const Node*, NodePtr> memo_;
};

Expr Expr::differentiate(int var_index) const {
    if (var_index < 0) throw std::out_of_range("negative variable index");
    Differentiator d(var_index);
    return Expr(d.diff(node_)).folded();
}

// ---------------------------------------------------------------------------
// Printing, equality, introspection
// ---------------------------------------------------------------------------

namespace {

// Precedence: + - (1), * / (2), unary - (3), ^ (4), atoms (5).
// A constant printed as "p/q" re-parses as a division, and "-p" as a
// negation, so constants carry the precedence of their printed form.
int precedence(const Node* n) {
    switch (n->kind) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Neg: return 3;
        case Kind::Pow: return 4;
        case Kind::Constant:
            if (!n->value.is_integer()) return 2;
            return n->value.is_negative() ? 3 : 5;
        case Kind::Variable: return 5;
    }
    return 5;
}

void print_node(const Node* n, std::string& out, const std::vector<std::string>* names);

void print_child(const Node* c, int min_prec, std::string& out,
                 const std::vector<std::string>* names) {
    bool parens = precedence(c) < min_prec;
    if (parens) out += '(';
    print_node(c, out, names);
    if (parens) out += ')';
}

void print_node(const Node* n, std::string& out, const std::vector<std::string>* names) {
    switch (n->kind) {
        case Kind::Constant:
            if (n->value.is_negative()) {
                out += '-';
                out += (-n->value).str();
            } else {
                out += n->value.str();
            }
            break;
        case Kind::Variable:
            if (names && n->var_index >= 0 &&
                static_cast<std::size_t>(n->var_index) < names->size())
                out += (*names)[static_cast<std::size_t>(n->var_index)];
            else
                out += "u" + std::to_string(n->var_index + 1);
            break;
        case Kind::Add:
            print_child(n->lhs.get(), 1, out, names);
            out += " + ";
            print_child(n->rhs.get(), 2, out, names);
            break;
        case Kind::Sub:
            print_child(n->lhs.get(), 1, out, names);
            out += " - ";
            print_child(n->rhs.get(), 2, out, names);
            break;
        case Kind::Mul:
            print_child(n->lhs.get(), 2, out, names);
            out += "*";
            print_child(n->rhs.get(), 3, out, names);
            break;
        case Kind::Div:
            print_child(n->lhs.get(), 2, out, names);
            out += "/";
            print_child(n->rhs.get(), 3, out, names);
            break;
        case Kind::Neg:
            out += '-';
            print_child(n->lhs.get(), 4, out, names);
            break;
        case Kind::Pow:
            print_child(n->lhs.get(), 5, out, names);
            out += '^';
            out += std::to_string(n->exponent);
            break;
    }
}

} // namespace

std::string Expr::str() const {
    std::string out;
    print_node(node_.get(), out, nullptr);
    return out;
}

std::string expr_str_named(const Expr& e, const std::vector<std::string>& names) {
    std::string out;
    print_node(e.node().get(), out, &names);
    return out;
}

bool Expr::structurally_equal(const Expr& a, const Expr& b) {
    std::function<bool(const Node*, const Node*)> eq = [&](const Node* x,
                                                           const Node* y) -> bool {
        if (x == y) return true;
        if (x->kind != y->kind) return false;
        switch (x->kind) {
            case Kind::Constant: return x->value == y->value;
            case Kind::Variable: return x->var_index == y->var_index;
            case Kind::Pow:
                return x->exponent == y->exponent && eq(x->lhs.get(), y->lhs.get());
            case Kind::Neg: return eq(x->lhs.get(), y->lhs.get());
            default: return eq(x->lhs.get(), y->lhs.get()) && eq(x->rhs.get(), y->rhs.get());
        }
    };
    return eq(a.node().get(), b.node().get());
}

int Expr::max_variable_count() const {
    int count = 0;
    std::unordered_map<const Node*, bool> seen;
    std::function<void(const Node*)> walk = [&](const Node* n) {
        if (seen.count(n)) return;
        seen.emplace(n, true);
        if (n->kind == Kind::Variable) count = std::max(count, n->var_index + 1);
        if (n->lhs) walk(n->lhs.get());
        if (n->rhs) walk(n->rhs.get());
    };
    walk(node_.get());
    return count;
}

} // namespace claw
