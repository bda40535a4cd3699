#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace magflow {

class ExprError : public std::runtime_error {
public:
    explicit ExprError(const std::string& msg) : std::runtime_error(msg) {}
};

// Flattened postfix program for fast repeated evaluation of an expression.
class ExprTape {
public:
    double eval(double u, double v) const;
    bool empty() const { return ops_.empty(); }

private:
    enum class Op : unsigned char { Const, PushU, PushV, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };
    struct Instr {
        Op op;
        double value; // Const only
    };
    std::vector<Instr> ops_;
    friend class Expr;
};

// Immutable expression in the variables u, v built from +, -, *, /, sin, cos,
// exp, numeric constants and pi. Supports exact symbolic differentiation, so
// metric derivatives carry no interpolation or finite-difference error.
class Expr {
public:
    Expr(); // the constant 0

    static Expr constant(double c);
    static Expr var_u();
    static Expr var_v();

    // Throws ExprError with a position on malformed input.
    static Expr parse(std::string_view text);

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);
    friend Expr exp(const Expr& a);

    double eval(double u, double v) const;

    // d/du or d/dv, as a new expression.
    Expr derivative_u() const;
    Expr derivative_v() const;

    // True (and fills *value) when the expression folded to a constant.
    bool is_constant(double* value = nullptr) const;

    ExprTape compile() const;

    std::string str() const;

    struct Node; // implementation detail, defined in expr.cpp
    using NodePtr = std::shared_ptr<const Node>;

private:
    explicit Expr(NodePtr n) : node_(std::move(n)) {}
    NodePtr node_;
};

} // namespace magflow
