#include "homewatch/predicate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace homewatch {

std::string_view to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Less: return "<";
        case CompareOp::LessEqual: return "<=";
        case CompareOp::Equal: return "=";
        case CompareOp::GreaterEqual: return ">=";
        case CompareOp::Greater: return ">";
    }
    return "?";
}

bool apply_compare(CompareOp op, double lhs, double rhs) {
    switch (op) {
        case CompareOp::Less: return lhs < rhs;
        case CompareOp::LessEqual: return lhs <= rhs;
        case CompareOp::Equal: return lhs == rhs;
        case CompareOp::GreaterEqual: return lhs >= rhs;
        case CompareOp::Greater: return lhs > rhs;
    }
    return false;
}

double rounded_delta(double current, double previous) {
    return std::round((current - previous) * 1e6) / 1e6;
}

namespace {

constexpr int kMaxParseNesting = 256;

enum class TokenType { Identifier, Number, Op, LParen, RParen, End };

struct Token {
    TokenType type;
    std::string_view text;
    std::size_t pos;
};

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) { advance(); }

    Predicate parse() {
        Predicate p = parse_or(0);
        if (tok_.type != TokenType::End) fail(fmt::format("unexpected '{}'", tok_.text));
        return p;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw PredicateSyntaxError(fmt::format("{} at offset {}", what, tok_.pos), tok_.pos);
    }

    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::size_t start = pos_;
        if (pos_ >= src_.size()) {
            tok_ = {TokenType::End, {}, start};
            return;
        }
        const char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                ++pos_;
            }
            tok_ = {TokenType::Identifier, src_.substr(start, pos_ - start), start};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            ++pos_;
            while (pos_ < src_.size()) {
                const char d = src_[pos_];
                const bool exponent_sign =
                    (d == '-' || d == '+') && (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E');
                if (std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == 'e' ||
                    d == 'E' || exponent_sign) {
                    ++pos_;
                } else {
                    break;
                }
            }
            tok_ = {TokenType::Number, src_.substr(start, pos_ - start), start};
            return;
        }
        if (c == '(' || c == ')') {
            ++pos_;
            tok_ = {c == '(' ? TokenType::LParen : TokenType::RParen, src_.substr(start, 1), start};
            return;
        }
        if (c == '<' || c == '>' || c == '=') {
            ++pos_;
            if (c != '=' && pos_ < src_.size() && src_[pos_] == '=') ++pos_;
            tok_ = {TokenType::Op, src_.substr(start, pos_ - start), start};
            return;
        }
        tok_ = {TokenType::Op, src_.substr(start, 1), start};
        fail(fmt::format("unexpected character '{}'", c));
    }

    bool at_keyword(std::string_view kw) const {
        return tok_.type == TokenType::Identifier && tok_.text == kw;
    }

    static bool is_keyword(std::string_view s) {
        return s == "and" || s == "or" || s == "not" || s == "true" || s == "false" ||
               s == "no_previous" || s == "delta";
    }

    void enter(int nesting) const {
        if (nesting > kMaxParseNesting) fail("expression nested too deeply");
    }

    Predicate parse_or(int nesting) {
        enter(nesting);
        Predicate first = parse_and(nesting + 1);
        if (!at_keyword("or")) return first;
        Any any;
        any.operands.push_back(std::move(first));
        while (at_keyword("or")) {
            advance();
            any.operands.push_back(parse_and(nesting + 1));
        }
        return Predicate{std::move(any)};
    }

    Predicate parse_and(int nesting) {
        enter(nesting);
        Predicate first = parse_unary(nesting + 1);
        if (!at_keyword("and")) return first;
        All all;
        all.operands.push_back(std::move(first));
        while (at_keyword("and")) {
            advance();
            all.operands.push_back(parse_unary(nesting + 1));
        }
        return Predicate{std::move(all)};
    }

    Predicate parse_unary(int nesting) {
        enter(nesting);
        if (at_keyword("not")) {
            advance();
            Not n;
            n.operand.push_back(parse_unary(nesting + 1));
            return Predicate{std::move(n)};
        }
        return parse_primary(nesting + 1);
    }

    CompareOp parse_op() {
        if (tok_.type != TokenType::Op) fail("expected comparison operator");
        CompareOp op;
        if (tok_.text == "<") {
            op = CompareOp::Less;
        } else if (tok_.text == "<=") {
            op = CompareOp::LessEqual;
        } else if (tok_.text == "=") {
            op = CompareOp::Equal;
        } else if (tok_.text == ">=") {
            op = CompareOp::GreaterEqual;
        } else if (tok_.text == ">") {
            op = CompareOp::Greater;
        } else {
            fail(fmt::format("unknown operator '{}'", tok_.text));
        }
        advance();
        return op;
    }

    double parse_number() {
        if (tok_.type != TokenType::Number) fail("expected number");
        const std::string text(tok_.text);
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size() || !std::isfinite(v)) {
            fail(fmt::format("malformed number '{}'", text));
        }
        advance();
        return v;
    }

    std::string parse_key() {
        if (tok_.type != TokenType::Identifier || is_keyword(tok_.text)) fail("expected item key");
        std::string key(tok_.text);
        advance();
        return key;
    }

    Predicate parse_primary(int nesting) {
        enter(nesting);
        if (tok_.type == TokenType::LParen) {
            advance();
            Predicate inner = parse_or(nesting + 1);
            if (tok_.type != TokenType::RParen) fail("expected ')'");
            advance();
            return inner;
        }
        if (tok_.type != TokenType::Identifier) fail("expected predicate");
        if (at_keyword("true") || at_keyword("false")) {
            const bool v = tok_.text == "true";
            advance();
            return Predicate{Constant{v}};
        }
        if (at_keyword("no_previous")) {
            advance();
            return Predicate{NoPrevious{}};
        }
        if (at_keyword("delta")) {
            advance();
            if (tok_.type != TokenType::LParen) fail("expected '(' after delta");
            advance();
            std::string key = parse_key();
            if (tok_.type != TokenType::RParen) fail("expected ')'");
            advance();
            const CompareOp op = parse_op();
            const double c = parse_number();
            return Predicate{Delta{std::move(key), op, c}};
        }
        std::string key = parse_key();
        if (tok_.type == TokenType::Op) {
            const CompareOp op = parse_op();
            const double c = parse_number();
            return Predicate{Compare{std::move(key), op, c}};
        }
        return Predicate{BoolItem{std::move(key)}};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_{TokenType::End, {}, 0};
};

std::string render_operand(const Predicate& p) {
    const bool compound =
        std::holds_alternative<All>(p.node) || std::holds_alternative<Any>(p.node);
    return compound ? "(" + render(p) + ")" : render(p);
}

template <typename F>
void visit_tree(const Predicate& p, F&& f) {
    f(p);
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Not>) {
                for (const auto& c : node.operand) visit_tree(c, f);
            } else if constexpr (std::is_same_v<T, All> || std::is_same_v<T, Any>) {
                for (const auto& c : node.operands) visit_tree(c, f);
            }
        },
        p.node);
}

}  // namespace

Predicate parse_predicate(std::string_view text) { return Parser(text).parse(); }

std::string render(const Predicate& p) {
    return std::visit(
        [](const auto& node) -> std::string {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return node.value ? "true" : "false";
            } else if constexpr (std::is_same_v<T, Compare>) {
                return fmt::format("{} {} {}", node.key, to_string(node.op), node.constant);
            } else if constexpr (std::is_same_v<T, Delta>) {
                return fmt::format("delta({}) {} {}", node.key, to_string(node.op), node.constant);
            } else if constexpr (std::is_same_v<T, BoolItem>) {
                return node.key;
            } else if constexpr (std::is_same_v<T, NoPrevious>) {
                return "no_previous";
            } else if constexpr (std::is_same_v<T, Not>) {
                return "not " + render_operand(node.operand.front());
            } else {
                const char* sep = std::is_same_v<T, All> ? " and " : " or ";
                std::string out;
                for (std::size_t i = 0; i < node.operands.size(); ++i) {
                    if (i) out += sep;
                    out += render_operand(node.operands[i]);
                }
                return out;
            }
        },
        p.node);
}

int depth(const Predicate& p) {
    return std::visit(
        [](const auto& node) -> int {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Not>) {
                return 1 + depth(node.operand.front());
            } else if constexpr (std::is_same_v<T, All> || std::is_same_v<T, Any>) {
                int deepest = 0;
                for (const auto& c : node.operands) deepest = std::max(deepest, depth(c));
                return 1 + deepest;
            } else {
                return 1;
            }
        },
        p.node);
}

std::vector<std::string> referenced_keys(const Predicate& p) {
    std::vector<std::string> keys;
    auto add = [&](const std::string& k) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    };
    visit_tree(p, [&](const Predicate& n) {
        if (const auto* c = std::get_if<Compare>(&n.node)) add(c->key);
        if (const auto* d = std::get_if<Delta>(&n.node)) add(d->key);
        if (const auto* b = std::get_if<BoolItem>(&n.node)) add(b->key);
    });
    return keys;
}

}  // namespace homewatch
