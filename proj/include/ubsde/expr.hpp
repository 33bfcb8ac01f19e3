#pragma once
// Tiny arithmetic expression parser for custom terminal conditions,
// e.g. "sin(b) + 0.5*c^2". Variables are resolved at evaluation time.

#include <map>
#include <memory>
#include <string>

namespace ubsde {

namespace detail {
struct ExprNode;
}

class Expr {
public:
    // Parses "+ - * / ^", unary minus, parentheses, numeric literals, the
    // constants pi and e, the functions sin cos tan exp log sqrt abs sinh
    // cosh tanh, and free variables. Throws ConfigError on syntax errors.
    static Expr parse(const std::string& text);

    // Unknown variables throw ConfigError naming the identifier.
    double eval(const std::map<std::string, double>& vars) const;

    const std::string& text() const { return text_; }

private:
    std::shared_ptr<const detail::ExprNode> root_;
    std::string text_;
};

} // namespace ubsde
