#pragma once

// Small arithmetic-expression evaluator for custom problem data.
//
// Grammar: + - * / ^ (right associative), unary +/-, parentheses, numbers,
// the functions sin cos sqrt exp, the constants pi and e, and the variables
// x, t, u.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace fracwave {

class ExpressionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExprVars {
    double x = 0.0;
    double t = 0.0;
    double u = 0.0;
};

class Expression {
public:
    Expression() = default;

    explicit Expression(std::string text) : text_(std::move(text)) {
        pos_ = 0;
        root_ = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    }

    [[nodiscard]] double operator()(const ExprVars& v) const {
        if (!root_) throw ExpressionError("empty expression");
        return root_->eval(v);
    }

    [[nodiscard]] const std::string& text() const noexcept { return text_; }
    [[nodiscard]] bool uses(char var) const { return root_ && root_->uses(var); }

private:
    struct Node {
        enum class Kind { num, var, neg, add, sub, mul, div, pow, sin, cos, sqrt, exp } kind = Kind::num;
        double value = 0.0;
        char var = 0;
        std::shared_ptr<const Node> a, b;

        [[nodiscard]] double eval(const ExprVars& v) const {
            switch (kind) {
                case Kind::num: return value;
                case Kind::var: return var == 'x' ? v.x : var == 't' ? v.t : v.u;
                case Kind::neg: return -a->eval(v);
                case Kind::add: return a->eval(v) + b->eval(v);
                case Kind::sub: return a->eval(v) - b->eval(v);
                case Kind::mul: return a->eval(v) * b->eval(v);
                case Kind::div: return a->eval(v) / b->eval(v);
                case Kind::pow: return std::pow(a->eval(v), b->eval(v));
                case Kind::sin: return std::sin(a->eval(v));
                case Kind::cos: return std::cos(a->eval(v));
                case Kind::sqrt: return std::sqrt(a->eval(v));
                case Kind::exp: return std::exp(a->eval(v));
            }
            return 0.0;
        }

        [[nodiscard]] bool uses(char c) const {
            if (kind == Kind::var) return var == c;
            return (a && a->uses(c)) || (b && b->uses(c));
        }
    };
    using Ptr = std::shared_ptr<const Node>;

    static Ptr make(Node::Kind k, Ptr a = nullptr, Ptr b = nullptr) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ExpressionError("expression \"" + text_ + "\" at offset " + std::to_string(pos_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Ptr parse_sum() {
        Ptr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = make(Node::Kind::add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = make(Node::Kind::sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    Ptr parse_product() {
        Ptr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = make(Node::Kind::mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = make(Node::Kind::div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Ptr parse_unary() {
        if (accept('-')) return make(Node::Kind::neg, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    // base ^ unary, so that 2^-1 and -2^2 = -(2^2) both parse as usual
    Ptr parse_power() {
        Ptr base = parse_primary();
        if (accept('^')) return make(Node::Kind::pow, base, parse_unary());
        return base;
    }

    Ptr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (accept('(')) {
            Ptr inner = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            auto n = std::make_shared<Node>();
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            const std::string id = text_.substr(start, pos_ - start);
            if (id == "x" || id == "t" || id == "u") {
                auto n = std::make_shared<Node>();
                n->kind = Node::Kind::var;
                n->var = id[0];
                return n;
            }
            if (id == "pi" || id == "e") {
                auto n = std::make_shared<Node>();
                n->value = id == "pi" ? std::numbers::pi : std::numbers::e;
                return n;
            }
            Node::Kind k;
            if (id == "sin") {
                k = Node::Kind::sin;
            } else if (id == "cos") {
                k = Node::Kind::cos;
            } else if (id == "sqrt") {
                k = Node::Kind::sqrt;
            } else if (id == "exp") {
                k = Node::Kind::exp;
            } else {
                pos_ = start;
                fail("unknown identifier '" + id + "'");
            }
            if (!accept('(')) fail("expected '(' after " + id);
            Ptr arg = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return make(k, arg);
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    std::string text_;
    std::size_t pos_ = 0;
    Ptr root_;
};

}  // namespace fracwave
