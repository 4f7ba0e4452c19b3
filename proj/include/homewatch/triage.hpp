#pragma once

#include "homewatch/domain.hpp"
#include "homewatch/predicate.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homewatch {

inline constexpr int kMaxPredicateDepth = 16;

enum class RuleSetErrorKind : std::uint8_t {
    InvalidConfig,
    UnknownItem,
    MalformedPredicate,
    MissingFallback,
    MissingCategory,
    DepthExceeded,
};

template <>
struct EnumNames<RuleSetErrorKind> {
    static constexpr std::string_view type_name = "ruleset error";
    static constexpr std::array<std::pair<RuleSetErrorKind, std::string_view>, 6> entries{{
        {RuleSetErrorKind::InvalidConfig, "invalid_config"},
        {RuleSetErrorKind::UnknownItem, "unknown_item"},
        {RuleSetErrorKind::MalformedPredicate, "malformed_predicate"},
        {RuleSetErrorKind::MissingFallback, "missing_fallback"},
        {RuleSetErrorKind::MissingCategory, "missing_category"},
        {RuleSetErrorKind::DepthExceeded, "depth_exceeded"},
    }};
};

class RuleSetError : public std::runtime_error {
public:
    RuleSetError(RuleSetErrorKind kind, std::string detail, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind), detail_(std::move(detail)) {}

    RuleSetErrorKind kind() const { return kind_; }
    /// The offending item key or rule name.
    const std::string& detail() const { return detail_; }

private:
    RuleSetErrorKind kind_;
    std::string detail_;
};

/// Flattened postfix form of a predicate bound to questionnaire slots.
class CompiledPredicate {
public:
    enum class Code : std::uint8_t { Const, Compare, Delta, BoolItem, NoPrevious, Not, And, Or };

    struct Instr {
        Code code;
        CompareOp op;
        std::uint8_t slot;
        std::uint16_t arity;  // And/Or operand count; Const value (0/1)
        double constant;
    };

    std::vector<Instr> program;
    std::size_t max_stack = 0;
};

/// Item values of one report laid out by questionnaire slot.
struct SlotValues {
    std::array<double, kMaxQuestionnaireItems> values{};
    std::array<bool, kMaxQuestionnaireItems> present{};
};

struct Rule {
    std::string name;
    TriageCategory category = TriageCategory::Yellow;
    std::string source;
    Predicate predicate;
    CompiledPredicate compiled;
    bool fallback = false;  // unconditional Yellow rule
};

/// An immutable, validated set of triage rules. Every validated report matches at least the
/// unconditional Yellow fallback, so classification is total.
class RuleSet {
public:
    const std::string& version() const { return version_; }
    const std::vector<Rule>& rules() const { return rules_; }

    /// Questionnaire keys in slot order.
    const std::vector<std::string>& slot_keys() const { return slot_keys_; }
    SlotValues bind(const SymptomReport& report) const;

    /// Indices of the conditional rules of one category, in file order.
    const std::vector<std::size_t>& rules_of(TriageCategory c) const {
        return by_category_[index_of(c)];
    }
    /// Indices of the unconditional Yellow rules. They decide only when nothing else matches.
    const std::vector<std::size_t>& fallback_rules() const { return fallbacks_; }

private:
    friend RuleSet load_ruleset(std::string_view, const QuestionnaireDefinition&);

    std::string version_;
    std::vector<Rule> rules_;
    std::vector<std::string> slot_keys_;
    std::array<std::vector<std::size_t>, 4> by_category_;
    std::vector<std::size_t> fallbacks_;
};

/// Parses and validates a ruleset (JSON). Each rule is {name, category, when}, where `when` is
/// written in the predicate language. Throws RuleSetError.
RuleSet load_ruleset(std::string_view config_text, const QuestionnaireDefinition& questionnaire);
RuleSet load_ruleset_file(const std::string& path, const QuestionnaireDefinition& questionnaire);

bool evaluate(const CompiledPredicate& predicate, const SlotValues& current,
              const SlotValues* previous);

struct TriageResult {
    TriageCategory category = TriageCategory::Yellow;
    /// Names of the satisfied rules of the winning category, in file order.
    std::vector<std::string> fired_rules;
};

/// Highest-severity category with a satisfied conditional rule, else Yellow via the fallback.
TriageResult triage(const RuleSet& rules, const SymptomReport& current,
                    const SymptomReport* previous);

TriageCategory classify(const RuleSet& rules, const SymptomReport& current,
                        const std::optional<SymptomReport>& previous);

struct RuleExplanation {
    std::string rule;
    bool fired = false;

    friend bool operator==(const RuleExplanation&, const RuleExplanation&) = default;
};

/// Satisfied rules of the winning category. Never empty.
std::vector<RuleExplanation> explain(const RuleSet& rules, const SymptomReport& current,
                                     const std::optional<SymptomReport>& previous);

}  // namespace homewatch
