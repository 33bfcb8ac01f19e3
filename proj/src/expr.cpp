#include "ubsde/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <vector>

#include "ubsde/errors.hpp"

namespace ubsde {

namespace detail {

struct ExprNode {
    enum class Kind { constant, variable, unary, binary, call } kind;
    double value = 0.0;       // constant
    std::string name;         // variable / function
    char op = 0;              // binary operator
    std::shared_ptr<const ExprNode> lhs, rhs; // rhs unused for unary/call
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    NodePtr parse() {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != text_.size())
            fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("expression error at position " +
                          std::to_string(pos_) + ": " + why);
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
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

    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            if (eat('+'))
                lhs = binary('+', lhs, term());
            else if (eat('-'))
                lhs = binary('-', lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            if (eat('*'))
                lhs = binary('*', lhs, factor());
            else if (eat('/'))
                lhs = binary('/', lhs, factor());
            else
                return lhs;
        }
    }

    // Right-associative power binds tighter than unary minus on the left,
    // so -x^2 reads as -(x^2). A sign in exponent position still parses
    // because the exponent slot recurses through the sign handling.
    NodePtr factor() {
        if (eat('-')) {
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprNode::Kind::unary;
            n->lhs = factor();
            return n;
        }
        if (eat('+')) return factor();
        NodePtr base = primary();
        if (eat('^')) return binary('^', base, factor());
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("expected a value");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(text_.c_str() + pos_, &end);
            if (end == text_.c_str() + pos_) fail("bad numeric literal");
            pos_ = static_cast<std::size_t>(end - text_.c_str());
            auto n = std::make_shared<ExprNode>();
            n->kind = ExprNode::Kind::constant;
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string ident;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_'))
                ident += text_[pos_++];
            if (eat('(')) {
                auto n = std::make_shared<ExprNode>();
                n->kind = ExprNode::Kind::call;
                n->name = ident;
                n->lhs = expression();
                if (!eat(')')) fail("missing ')' after function argument");
                return n;
            }
            auto n = std::make_shared<ExprNode>();
            if (ident == "pi") {
                n->kind = ExprNode::Kind::constant;
                n->value = std::numbers::pi;
            } else if (ident == "e") {
                n->kind = ExprNode::Kind::constant;
                n->value = std::numbers::e;
            } else {
                n->kind = ExprNode::Kind::variable;
                n->name = ident;
            }
            return n;
        }
        if (eat('(')) {
            NodePtr e = expression();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    static NodePtr binary(char op, NodePtr lhs, NodePtr rhs) {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::binary;
        n->op = op;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

double eval_node(const ExprNode& n,
                 const std::map<std::string, double>& vars) {
    switch (n.kind) {
    case ExprNode::Kind::constant:
        return n.value;
    case ExprNode::Kind::variable: {
        auto it = vars.find(n.name);
        if (it == vars.end())
            throw ConfigError("unknown variable '" + n.name +
                              "' in expression");
        return it->second;
    }
    case ExprNode::Kind::unary:
        return -eval_node(*n.lhs, vars);
    case ExprNode::Kind::binary: {
        const double a = eval_node(*n.lhs, vars);
        const double b = eval_node(*n.rhs, vars);
        switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        case '^': return std::pow(a, b);
        }
        throw ConfigError("corrupt expression tree");
    }
    case ExprNode::Kind::call: {
        const double a = eval_node(*n.lhs, vars);
        if (n.name == "sin") return std::sin(a);
        if (n.name == "cos") return std::cos(a);
        if (n.name == "tan") return std::tan(a);
        if (n.name == "exp") return std::exp(a);
        if (n.name == "log") return std::log(a);
        if (n.name == "sqrt") return std::sqrt(a);
        if (n.name == "abs") return std::abs(a);
        if (n.name == "sinh") return std::sinh(a);
        if (n.name == "cosh") return std::cosh(a);
        if (n.name == "tanh") return std::tanh(a);
        throw ConfigError("unknown function '" + n.name + "' in expression");
    }
    }
    throw ConfigError("corrupt expression tree");
}

} // namespace

} // namespace detail

Expr Expr::parse(const std::string& text) {
    Expr e;
    e.root_ = detail::Parser(text).parse();
    e.text_ = text;
    return e;
}

double Expr::eval(const std::map<std::string, double>& vars) const {
    if (!root_) throw ConfigError("evaluating an empty expression");
    return detail::eval_node(*root_, vars);
}

} // namespace ubsde
