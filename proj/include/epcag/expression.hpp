#pragma once

#include "epcag/error.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epcag {

/// Parsed arithmetic expression over t, y1..yn, w1..wn.
///
/// Grammar (ASCII, case-sensitive):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('+' | '-') unary | power
///     power   := primary ('^' unary)?          right-associative
///     primary := number | 'pi' | variable | func '(' expr ')' | '(' expr ')'
///     func    := sin | cos | exp | log | abs
///
/// Evaluation is pure and reentrant; an Expression is a copyable value.
class Expression {
public:
    /// Parses `text` for a system of dimension `n`. `origin` is the position of
    /// the first character in the enclosing document, used for error locations.
    static Expression parse(std::string_view text, int n, SourceLocation origin = {});

    /// Constant expression (used for registry systems and defaults).
    static Expression constant(double value);

    /// `y` and `w` must have at least n entries.
    double evaluate(double t, std::span<const double> y, std::span<const double> w) const;

    bool uses_time() const { return uses_time_; }
    bool uses_state() const { return uses_y_ || uses_w_; }
    bool uses_current_state() const { return uses_y_; }
    bool uses_frozen_state() const { return uses_w_; }
    int dimension() const { return n_; }
    const std::string& text() const { return text_; }

private:
    enum class Op { Number, Time, Y, W, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Abs };

    struct Node {
        Op op;
        double value = 0.0;  // Number
        int slot = 0;        // Y/W index, 0-based
        int lhs = -1;
        int rhs = -1;
        SourceLocation where;
    };

    class Parser;

    double eval_node(int id, double t, std::span<const double> y, std::span<const double> w) const;

    std::vector<Node> nodes_;
    int root_ = -1;
    int n_ = 0;
    bool uses_time_ = false;
    bool uses_y_ = false;
    bool uses_w_ = false;
    std::string text_;
};

}  // namespace epcag
