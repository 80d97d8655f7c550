#include "gmsolve/expression.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "gmsolve/errors.hpp"

namespace gmsolve {

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, const std::string& field) : text_(text), field_(field) {}

    Expression run() {
        Expression e;
        e.text_ = std::string(text_);
        out_ = &e;
        skip();
        if (pos_ >= text_.size()) fail("empty expression");
        parse_sum();
        skip();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        // Stack depth for the evaluator.
        int depth = 0;
        for (const auto& in : e.program_) {
            switch (in.op) {
                case Expression::Op::Push:
                case Expression::Op::X:
                case Expression::Op::Y:
                case Expression::Op::R: ++depth; break;
                case Expression::Op::Add:
                case Expression::Op::Sub:
                case Expression::Op::Mul:
                case Expression::Op::Div:
                case Expression::Op::Pow: --depth; break;
                default: break;
            }
            e.max_depth_ = std::max(e.max_depth_, depth);
        }
        return e;
    }

private:
    using Op = Expression::Op;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(msg + " at column " + std::to_string(pos_ + 1) + " in '" + std::string(text_) + "'", field_);
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(Op op, double v = 0.0) { out_->program_.push_back({op, v}); }

    void parse_sum() {
        parse_product();
        for (;;) {
            if (accept('+')) {
                parse_product();
                emit(Op::Add);
            } else if (accept('-')) {
                parse_product();
                emit(Op::Sub);
            } else {
                return;
            }
        }
    }

    void parse_product() {
        parse_unary();
        for (;;) {
            if (accept('*')) {
                parse_unary();
                emit(Op::Mul);
            } else if (accept('/')) {
                parse_unary();
                emit(Op::Div);
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        if (accept('-')) {
            parse_unary();
            emit(Op::Neg);
            return;
        }
        if (accept('+')) {
            parse_unary();
            return;
        }
        parse_power();
    }

    void parse_power() {
        parse_primary();
        if (accept('^')) {
            parse_unary();  // right associative, binds tighter than unary minus on the left
            emit(Op::Pow);
        }
    }

    void parse_primary() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_sum();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::string rest(text_.substr(pos_));
            char* end = nullptr;
            const double v = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str()) fail("bad number");
            pos_ += static_cast<std::size_t>(end - rest.c_str());
            emit(Op::Push, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string_view name = text_.substr(start, pos_ - start);
            if (name == "x") return emit_var(Op::X);
            if (name == "y") return emit_var(Op::Y);
            if (name == "r") return emit_var(Op::R);
            if (name == "pi") return emit(Op::Push, kPi);
            static constexpr std::array<std::pair<std::string_view, Op>, 5> functions{
                {{"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"abs", Op::Abs}, {"sqrt", Op::Sqrt}}};
            for (const auto& [fname, op] : functions) {
                if (name == fname) {
                    if (!accept('(')) fail("expected '(' after " + std::string(name));
                    parse_sum();
                    if (!accept(')')) fail("expected ')'");
                    emit(op);
                    return;
                }
            }
            pos_ = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    void emit_var(Op op) {
        out_->uses_position_ = true;
        emit(op);
    }

    std::string_view text_;
    std::string field_;
    std::size_t pos_ = 0;
    Expression* out_ = nullptr;
};

Expression Expression::parse(std::string_view text, const std::string& field) {
    return ExpressionParser(text, field).run();
}

Expression Expression::constant(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return parse(buf);
}

double Expression::operator()(Point p) const {
    constexpr int kInline = 32;
    double inline_stack[kInline];
    std::vector<double> heap;
    double* st = inline_stack;
    if (max_depth_ > kInline) {
        heap.resize(static_cast<std::size_t>(max_depth_));
        st = heap.data();
    }
    int top = 0;
    for (const Instr& in : program_) {
        switch (in.op) {
            case Op::Push: st[top++] = in.value; break;
            case Op::X: st[top++] = p.x; break;
            case Op::Y: st[top++] = p.y; break;
            case Op::R: st[top++] = std::hypot(p.x, p.y); break;
            case Op::Add: --top; st[top - 1] += st[top]; break;
            case Op::Sub: --top; st[top - 1] -= st[top]; break;
            case Op::Mul: --top; st[top - 1] *= st[top]; break;
            case Op::Div: --top; st[top - 1] /= st[top]; break;
            case Op::Pow: --top; st[top - 1] = std::pow(st[top - 1], st[top]); break;
            case Op::Neg: st[top - 1] = -st[top - 1]; break;
            case Op::Sin: st[top - 1] = std::sin(st[top - 1]); break;
            case Op::Cos: st[top - 1] = std::cos(st[top - 1]); break;
            case Op::Exp: st[top - 1] = std::exp(st[top - 1]); break;
            case Op::Abs: st[top - 1] = std::abs(st[top - 1]); break;
            case Op::Sqrt: st[top - 1] = std::sqrt(st[top - 1]); break;
        }
    }
    return top > 0 ? st[0] : 0.0;
}

}  // namespace gmsolve
