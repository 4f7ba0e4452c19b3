#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace homewatch {

// Rule predicate language.
//
//   expr    := or
//   or      := and ("or" and)*
//   and     := unary ("and" unary)*
//   unary   := "not" unary | primary
//   primary := "(" expr ")" | "true" | "false" | "no_previous"
//            | "delta" "(" key ")" op number      change since the previous report
//            | key op number                       current value
//            | key                                 boolean item is true
//   op      := "<" | "<=" | "=" | ">=" | ">"
//
// A comparison over an item that is absent from the report is false. Delta atoms are false
// when there is no previous report or either value is absent; deltas are rounded to six
// decimals before comparing.

enum class CompareOp : std::uint8_t { Less, LessEqual, Equal, GreaterEqual, Greater };

std::string_view to_string(CompareOp op);
bool apply_compare(CompareOp op, double lhs, double rhs);

/// Rounds a current-minus-previous difference to six decimals.
double rounded_delta(double current, double previous);

struct Predicate;

struct Constant {
    bool value = true;
};
struct Compare {
    std::string key;
    CompareOp op = CompareOp::Equal;
    double constant = 0.0;
};
struct Delta {
    std::string key;
    CompareOp op = CompareOp::Equal;
    double constant = 0.0;
};
struct BoolItem {
    std::string key;
};
struct NoPrevious {};
struct Not {
    std::vector<Predicate> operand;  // exactly one
};
struct All {
    std::vector<Predicate> operands;
};
struct Any {
    std::vector<Predicate> operands;
};

struct Predicate {
    std::variant<Constant, Compare, Delta, BoolItem, NoPrevious, Not, All, Any> node;
};

class PredicateSyntaxError : public std::runtime_error {
public:
    PredicateSyntaxError(std::string message, std::size_t position)
        : std::runtime_error(std::move(message)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

Predicate parse_predicate(std::string_view text);

/// Canonical text form; parse_predicate(render(p)) yields an equivalent tree.
std::string render(const Predicate& p);

/// Leaves have depth 1; each connective adds one.
int depth(const Predicate& p);

/// Item keys referenced anywhere in the tree, in first-seen order.
std::vector<std::string> referenced_keys(const Predicate& p);

}  // namespace homewatch
