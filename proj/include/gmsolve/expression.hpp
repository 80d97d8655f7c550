#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gmsolve/geometry.hpp"

namespace gmsolve {

/// Closed arithmetic grammar for data functions of a point:
/// variables x, y, r (= |(x,y)|), constant pi, numbers, + - * / ^,
/// unary minus, parentheses, and sin cos exp abs sqrt.
///
/// Compiled once to a postfix program; evaluation allocates nothing.
class Expression {
public:
    Expression() = default;

    /// Throws ConfigError naming `field` and the column of the first bad token.
    static Expression parse(std::string_view text, const std::string& field = "expression");
    static Expression constant(double value);

    double operator()(Point p) const;
    double evaluate(double x, double y) const { return (*this)(Point{x, y}); }

    const std::string& text() const noexcept { return text_; }
    /// False when no variable appears.
    bool depends_on_position() const noexcept { return uses_position_; }

private:
    enum class Op : unsigned char { Push, X, Y, R, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Abs, Sqrt };
    struct Instr {
        Op op;
        double value;
    };
    friend class ExpressionParser;

    std::string text_;
    std::vector<Instr> program_;
    int max_depth_ = 0;
    bool uses_position_ = false;
};

}  // namespace gmsolve
