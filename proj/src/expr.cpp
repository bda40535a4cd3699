#include "magflow/expr.hpp"

#include <cctype>
#include <cmath>

namespace magflow {

enum class NodeKind : unsigned char { Const, VarU, VarV, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };

struct Expr::Node {
    NodeKind kind;
    double value = 0.0;
    NodePtr a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_node(NodeKind k, double value, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->value = value;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

bool const_val(const NodePtr& n, double* out) {
    if (n->kind == NodeKind::Const) {
        if (out) *out = n->value;
        return true;
    }
    return false;
}

NodePtr make_const(double c) { return make_node(NodeKind::Const, c); }

// Smart constructors with constant folding.
NodePtr fold_add(NodePtr a, NodePtr b) {
    double ca, cb;
    if (const_val(a, &ca) && const_val(b, &cb)) return make_const(ca + cb);
    if (const_val(a, &ca) && ca == 0.0) return b;
    if (const_val(b, &cb) && cb == 0.0) return a;
    return make_node(NodeKind::Add, 0, std::move(a), std::move(b));
}

NodePtr fold_sub(NodePtr a, NodePtr b) {
    double ca, cb;
    if (const_val(a, &ca) && const_val(b, &cb)) return make_const(ca - cb);
    if (const_val(b, &cb) && cb == 0.0) return a;
    if (const_val(a, &ca) && ca == 0.0) return make_node(NodeKind::Neg, 0, std::move(b));
    return make_node(NodeKind::Sub, 0, std::move(a), std::move(b));
}

NodePtr fold_mul(NodePtr a, NodePtr b) {
    double ca, cb;
    if (const_val(a, &ca) && const_val(b, &cb)) return make_const(ca * cb);
    if (const_val(a, &ca)) {
        if (ca == 0.0) return make_const(0.0);
        if (ca == 1.0) return b;
    }
    if (const_val(b, &cb)) {
        if (cb == 0.0) return make_const(0.0);
        if (cb == 1.0) return a;
    }
    return make_node(NodeKind::Mul, 0, std::move(a), std::move(b));
}

NodePtr fold_div(NodePtr a, NodePtr b) {
    double ca, cb;
    if (const_val(a, &ca) && const_val(b, &cb)) return make_const(ca / cb);
    if (const_val(a, &ca) && ca == 0.0) return make_const(0.0);
    if (const_val(b, &cb) && cb == 1.0) return a;
    return make_node(NodeKind::Div, 0, std::move(a), std::move(b));
}

NodePtr fold_neg(NodePtr a) {
    double ca;
    if (const_val(a, &ca)) return make_const(-ca);
    if (a->kind == NodeKind::Neg) return a->a;
    return make_node(NodeKind::Neg, 0, std::move(a));
}

NodePtr fold_fn(NodeKind k, NodePtr a) {
    double ca;
    if (const_val(a, &ca)) {
        switch (k) {
        case NodeKind::Sin: return make_const(std::sin(ca));
        case NodeKind::Cos: return make_const(std::cos(ca));
        case NodeKind::Exp: return make_const(std::exp(ca));
        default: break;
        }
    }
    return make_node(k, 0, std::move(a));
}

double eval_node(const Expr::Node* n, double u, double v) {
    switch (n->kind) {
    case NodeKind::Const: return n->value;
    case NodeKind::VarU: return u;
    case NodeKind::VarV: return v;
    case NodeKind::Add: return eval_node(n->a.get(), u, v) + eval_node(n->b.get(), u, v);
    case NodeKind::Sub: return eval_node(n->a.get(), u, v) - eval_node(n->b.get(), u, v);
    case NodeKind::Mul: return eval_node(n->a.get(), u, v) * eval_node(n->b.get(), u, v);
    case NodeKind::Div: return eval_node(n->a.get(), u, v) / eval_node(n->b.get(), u, v);
    case NodeKind::Neg: return -eval_node(n->a.get(), u, v);
    case NodeKind::Sin: return std::sin(eval_node(n->a.get(), u, v));
    case NodeKind::Cos: return std::cos(eval_node(n->a.get(), u, v));
    case NodeKind::Exp: return std::exp(eval_node(n->a.get(), u, v));
    }
    return 0.0;
}

NodePtr diff_node(const NodePtr& n, NodeKind var) {
    switch (n->kind) {
    case NodeKind::Const: return make_const(0.0);
    case NodeKind::VarU: return make_const(var == NodeKind::VarU ? 1.0 : 0.0);
    case NodeKind::VarV: return make_const(var == NodeKind::VarV ? 1.0 : 0.0);
    case NodeKind::Add: return fold_add(diff_node(n->a, var), diff_node(n->b, var));
    case NodeKind::Sub: return fold_sub(diff_node(n->a, var), diff_node(n->b, var));
    case NodeKind::Mul:
        return fold_add(fold_mul(diff_node(n->a, var), n->b),
                        fold_mul(n->a, diff_node(n->b, var)));
    case NodeKind::Div:
        // (a'b - ab') / b^2
        return fold_div(fold_sub(fold_mul(diff_node(n->a, var), n->b),
                                 fold_mul(n->a, diff_node(n->b, var))),
                        fold_mul(n->b, n->b));
    case NodeKind::Neg: return fold_neg(diff_node(n->a, var));
    case NodeKind::Sin: return fold_mul(fold_fn(NodeKind::Cos, n->a), diff_node(n->a, var));
    case NodeKind::Cos: return fold_neg(fold_mul(fold_fn(NodeKind::Sin, n->a), diff_node(n->a, var)));
    case NodeKind::Exp: return fold_mul(fold_fn(NodeKind::Exp, n->a), diff_node(n->a, var));
    }
    return make_const(0.0);
}

std::string str_node(const Expr::Node* n) {
    auto bin = [&](const char* op) {
        return "(" + str_node(n->a.get()) + op + str_node(n->b.get()) + ")";
    };
    switch (n->kind) {
    case NodeKind::Const: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n->value);
        return std::string(buf);
    }
    case NodeKind::VarU: return "u";
    case NodeKind::VarV: return "v";
    case NodeKind::Add: return bin("+");
    case NodeKind::Sub: return bin("-");
    case NodeKind::Mul: return bin("*");
    case NodeKind::Div: return bin("/");
    case NodeKind::Neg: return "(-" + str_node(n->a.get()) + ")";
    case NodeKind::Sin: return "sin(" + str_node(n->a.get()) + ")";
    case NodeKind::Cos: return "cos(" + str_node(n->a.get()) + ")";
    case NodeKind::Exp: return "exp(" + str_node(n->a.get()) + ")";
    }
    return "";
}

// Recursive-descent parser.
class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != text_.size())
            fail("unexpected trailing input");
        return e;
    }

private:
    std::string_view text_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) {
        throw ExprError(msg + " at position " + std::to_string(pos_) + " in \"" +
                        std::string(text_) + "\"");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    NodePtr expr() {
        NodePtr e = term();
        for (;;) {
            if (eat('+')) e = fold_add(e, term());
            else if (eat('-')) e = fold_sub(e, term());
            else return e;
        }
    }

    NodePtr term() {
        NodePtr e = factor();
        for (;;) {
            if (eat('*')) e = fold_mul(e, factor());
            else if (eat('/')) e = fold_div(e, factor());
            else return e;
        }
    }

    NodePtr factor() {
        if (eat('-')) return fold_neg(factor());
        if (eat('+')) return factor();
        return primary();
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        fail("unexpected character");
    }

    NodePtr number() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                text_[pos_] == 'e' || text_[pos_] == 'E' ||
                ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
                 (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
            ++pos_;
        std::string tok(text_.substr(start, pos_ - start));
        try {
            size_t used = 0;
            double val = std::stod(tok, &used);
            if (used != tok.size()) fail("bad numeric literal '" + tok + "'");
            return make_const(val);
        } catch (const std::exception&) {
            fail("bad numeric literal '" + tok + "'");
        }
    }

    NodePtr identifier() {
        size_t start = pos_;
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (name == "u") return make_node(NodeKind::VarU, 0);
        if (name == "v") return make_node(NodeKind::VarV, 0);
        if (name == "pi") return make_const(M_PI);
        if (name == "sin" || name == "cos" || name == "exp") {
            if (!eat('(')) fail("expected '(' after " + name);
            NodePtr arg = expr();
            if (!eat(')')) fail("expected ')'");
            if (name == "sin") return fold_fn(NodeKind::Sin, arg);
            if (name == "cos") return fold_fn(NodeKind::Cos, arg);
            return fold_fn(NodeKind::Exp, arg);
        }
        fail("unknown identifier '" + name + "'");
    }
};

} // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::constant(double c) { return Expr(make_const(c)); }
Expr Expr::var_u() { return Expr(make_node(NodeKind::VarU, 0)); }
Expr Expr::var_v() { return Expr(make_node(NodeKind::VarV, 0)); }

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse()); }

Expr operator+(const Expr& a, const Expr& b) { return Expr(fold_add(a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(fold_sub(a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(fold_mul(a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(fold_div(a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(fold_neg(a.node_)); }
Expr sin(const Expr& a) { return Expr(fold_fn(NodeKind::Sin, a.node_)); }
Expr cos(const Expr& a) { return Expr(fold_fn(NodeKind::Cos, a.node_)); }
Expr exp(const Expr& a) { return Expr(fold_fn(NodeKind::Exp, a.node_)); }

double Expr::eval(double u, double v) const { return eval_node(node_.get(), u, v); }

Expr Expr::derivative_u() const { return Expr(diff_node(node_, NodeKind::VarU)); }
Expr Expr::derivative_v() const { return Expr(diff_node(node_, NodeKind::VarV)); }

bool Expr::is_constant(double* value) const { return const_val(node_, value); }

std::string Expr::str() const { return str_node(node_.get()); }

ExprTape Expr::compile() const {
    ExprTape tape;
    // Post-order emit.
    struct Emit {
        std::vector<ExprTape::Instr>* out;
        void visit(const Node* n) {
            using I = ExprTape::Instr;
            switch (n->kind) {
            case NodeKind::Const: out->push_back(I{ExprTape::Op::Const, n->value}); return;
            case NodeKind::VarU: out->push_back(I{ExprTape::Op::PushU, 0}); return;
            case NodeKind::VarV: out->push_back(I{ExprTape::Op::PushV, 0}); return;
            case NodeKind::Add: visit(n->a.get()); visit(n->b.get()); out->push_back(I{ExprTape::Op::Add, 0}); return;
            case NodeKind::Sub: visit(n->a.get()); visit(n->b.get()); out->push_back(I{ExprTape::Op::Sub, 0}); return;
            case NodeKind::Mul: visit(n->a.get()); visit(n->b.get()); out->push_back(I{ExprTape::Op::Mul, 0}); return;
            case NodeKind::Div: visit(n->a.get()); visit(n->b.get()); out->push_back(I{ExprTape::Op::Div, 0}); return;
            case NodeKind::Neg: visit(n->a.get()); out->push_back(I{ExprTape::Op::Neg, 0}); return;
            case NodeKind::Sin: visit(n->a.get()); out->push_back(I{ExprTape::Op::Sin, 0}); return;
            case NodeKind::Cos: visit(n->a.get()); out->push_back(I{ExprTape::Op::Cos, 0}); return;
            case NodeKind::Exp: visit(n->a.get()); out->push_back(I{ExprTape::Op::Exp, 0}); return;
            }
        }
    };
    Emit e{&tape.ops_};
    e.visit(node_.get());
    return tape;
}

double ExprTape::eval(double u, double v) const {
    double stack[128];
    int top = -1;
    for (const Instr& ins : ops_) {
        switch (ins.op) {
        case Op::Const: stack[++top] = ins.value; break;
        case Op::PushU: stack[++top] = u; break;
        case Op::PushV: stack[++top] = v; break;
        case Op::Add: --top; stack[top] += stack[top + 1]; break;
        case Op::Sub: --top; stack[top] -= stack[top + 1]; break;
        case Op::Mul: --top; stack[top] *= stack[top + 1]; break;
        case Op::Div: --top; stack[top] /= stack[top + 1]; break;
        case Op::Neg: stack[top] = -stack[top]; break;
        case Op::Sin: stack[top] = std::sin(stack[top]); break;
        case Op::Cos: stack[top] = std::cos(stack[top]); break;
        case Op::Exp: stack[top] = std::exp(stack[top]); break;
        }
    }
    return top >= 0 ? stack[top] : 0.0;
}

} // namespace magflow
