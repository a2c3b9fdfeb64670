#include "epcag/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

namespace epcag {

class Expression::Parser {
public:
    Parser(Expression& out, std::string_view text, SourceLocation origin)
        : out_(out), text_(text), origin_(origin) {}

    int parse_all() {
        skip_space();
        int root = parse_expr();
        skip_space();
        if (pos_ < text_.size()) {
            fail(std::string("unexpected '") + text_[pos_] + "'");
        }
        return root;
    }

private:
    SourceLocation here() const {
        return SourceLocation{origin_.line, origin_.column + static_cast<int>(pos_)};
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, here()); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Node node) {
        out_.nodes_.push_back(node);
        return static_cast<int>(out_.nodes_.size()) - 1;
    }

    int binary(Op op, int lhs, int rhs, SourceLocation at) {
        Node n{op};
        n.lhs = lhs;
        n.rhs = rhs;
        n.where = at;
        return add(n);
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            skip_space();
            SourceLocation at = here();
            if (accept('+')) {
                lhs = binary(Op::Add, lhs, parse_term(), at);
            } else if (accept('-')) {
                lhs = binary(Op::Sub, lhs, parse_term(), at);
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            skip_space();
            SourceLocation at = here();
            if (accept('*')) {
                lhs = binary(Op::Mul, lhs, parse_unary(), at);
            } else if (accept('/')) {
                lhs = binary(Op::Div, lhs, parse_unary(), at);
            } else {
                return lhs;
            }
        }
    }

    int parse_unary() {
        skip_space();
        SourceLocation at = here();
        if (accept('-')) {
            Node n{Op::Neg};
            n.lhs = parse_unary();
            n.where = at;
            return add(n);
        }
        if (accept('+')) {
            return parse_unary();
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        skip_space();
        SourceLocation at = here();
        if (accept('^')) {
            return binary(Op::Pow, base, parse_unary(), at);
        }
        return base;
    }

    int parse_primary() {
        skip_space();
        SourceLocation at = here();
        if (pos_ >= text_.size()) {
            fail("unexpected end of expression");
        }
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = parse_expr();
            if (!accept(')')) {
                fail("expected ')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number(at);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            return parse_identifier(text_.substr(start, pos_ - start), at);
        }
        fail(std::string("unexpected '") + c + "'");
    }

    int parse_number(SourceLocation at) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    ++pos_;
                }
            } else {
                pos_ = save;
            }
        }
        std::string token(text_.substr(start, pos_ - start));
        char* end = nullptr;
        double value = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size()) {
            throw ParseError("malformed number '" + token + "'", at);
        }
        Node n{Op::Number};
        n.value = value;
        n.where = at;
        return add(n);
    }

    int parse_identifier(std::string_view name, SourceLocation at) {
        static constexpr std::pair<std::string_view, Op> functions[] = {
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"abs", Op::Abs}};
        for (const auto& [fname, op] : functions) {
            if (name == fname) {
                if (!accept('(')) {
                    fail("expected '(' after " + std::string(name));
                }
                Node n{op};
                n.lhs = parse_expr();
                n.where = at;
                if (!accept(')')) {
                    fail("expected ')'");
                }
                return add(n);
            }
        }
        if (name == "t") {
            out_.uses_time_ = true;
            Node n{Op::Time};
            n.where = at;
            return add(n);
        }
        if (name == "pi") {
            Node n{Op::Number};
            n.value = 3.14159265358979323846;
            n.where = at;
            return add(n);
        }
        if ((name.front() == 'y' || name.front() == 'w') && name.size() > 1) {
            int index = 0;
            auto digits = name.substr(1);
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
            if (ec == std::errc{} && ptr == digits.data() + digits.size() && digits.front() != '0') {
                if (index < 1 || index > out_.n_) {
                    throw ParseError("variable '" + std::string(name) + "' out of range for n = " +
                                         std::to_string(out_.n_),
                                     at);
                }
                Node n{name.front() == 'y' ? Op::Y : Op::W};
                n.slot = index - 1;
                n.where = at;
                (name.front() == 'y' ? out_.uses_y_ : out_.uses_w_) = true;
                return add(n);
            }
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", at);
    }

    Expression& out_;
    std::string_view text_;
    SourceLocation origin_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text, int n, SourceLocation origin) {
    if (n < 1) {
        throw InvalidParameter("expression dimension must be positive");
    }
    Expression e;
    e.n_ = n;
    e.text_ = std::string(text);
    Parser parser(e, text, origin);
    e.root_ = parser.parse_all();
    return e;
}

Expression Expression::constant(double value) {
    Expression e;
    e.n_ = 1;
    Node node{Op::Number};
    node.value = value;
    e.nodes_.push_back(node);
    e.root_ = 0;
    e.text_ = std::to_string(value);
    return e;
}

double Expression::evaluate(double t, std::span<const double> y, std::span<const double> w) const {
    return eval_node(root_, t, y, w);
}

double Expression::eval_node(int id, double t, std::span<const double> y, std::span<const double> w) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    switch (node.op) {
        case Op::Number: return node.value;
        case Op::Time: return t;
        case Op::Y: return y[static_cast<std::size_t>(node.slot)];
        case Op::W: return w[static_cast<std::size_t>(node.slot)];
        case Op::Neg: return -eval_node(node.lhs, t, y, w);
        case Op::Add: return eval_node(node.lhs, t, y, w) + eval_node(node.rhs, t, y, w);
        case Op::Sub: return eval_node(node.lhs, t, y, w) - eval_node(node.rhs, t, y, w);
        case Op::Mul: return eval_node(node.lhs, t, y, w) * eval_node(node.rhs, t, y, w);
        case Op::Div: {
            double num = eval_node(node.lhs, t, y, w);
            double den = eval_node(node.rhs, t, y, w);
            if (den == 0.0) {
                throw EvaluationError("division by zero", node.where);
            }
            return num / den;
        }
        case Op::Pow: {
            double base = eval_node(node.lhs, t, y, w);
            double ex = eval_node(node.rhs, t, y, w);
            double r = std::pow(base, ex);
            if (std::isnan(r)) {
                throw EvaluationError("power of negative base with non-integer exponent", node.where);
            }
            return r;
        }
        case Op::Sin: return std::sin(eval_node(node.lhs, t, y, w));
        case Op::Cos: return std::cos(eval_node(node.lhs, t, y, w));
        case Op::Exp: return std::exp(eval_node(node.lhs, t, y, w));
        case Op::Log: {
            double x = eval_node(node.lhs, t, y, w);
            if (!(x > 0.0)) {
                throw EvaluationError("log of non-positive value", node.where);
            }
            return std::log(x);
        }
        case Op::Abs: return std::abs(eval_node(node.lhs, t, y, w));
    }
    return 0.0;
}

}  // namespace epcag
