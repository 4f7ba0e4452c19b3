#include "homewatch/triage.hpp"

#include <fmt/format.h>

#include <fstream>
#include <memory>
#include <sstream>

namespace homewatch {

using nlohmann::json;

namespace {

class Compiler {
public:
    Compiler(const QuestionnaireDefinition& q, const std::string& rule_name)
        : questionnaire_(q), rule_name_(rule_name) {}

    CompiledPredicate compile(const Predicate& p) {
        emit(p);
        out_.max_stack = max_stack_;
        return std::move(out_);
    }

private:
    std::uint8_t slot_of(const std::string& key, bool want_boolean, bool allow_boolean) const {
        for (std::size_t i = 0; i < questionnaire_.items.size(); ++i) {
            const Item& item = questionnaire_.items[i];
            if (item.key != key) continue;
            const bool is_boolean = item.kind == ItemKind::Boolean;
            if (want_boolean && !is_boolean) {
                throw RuleSetError(RuleSetErrorKind::MalformedPredicate, rule_name_,
                                   fmt::format("rule '{}': '{}' is not a boolean item",
                                               rule_name_, key));
            }
            if (!want_boolean && is_boolean && !allow_boolean) {
                throw RuleSetError(RuleSetErrorKind::MalformedPredicate, rule_name_,
                                   fmt::format("rule '{}': boolean item '{}' cannot be compared",
                                               rule_name_, key));
            }
            return static_cast<std::uint8_t>(i);
        }
        throw RuleSetError(RuleSetErrorKind::UnknownItem, key,
                           fmt::format("rule '{}' references unknown item '{}'", rule_name_, key));
    }

    void push(CompiledPredicate::Instr instr, int stack_effect) {
        out_.program.push_back(instr);
        stack_ += stack_effect;
        max_stack_ = std::max(max_stack_, static_cast<std::size_t>(stack_));
    }

    void emit(const Predicate& p) {
        using Code = CompiledPredicate::Code;
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Constant>) {
                    push({Code::Const, CompareOp::Equal, 0,
                          static_cast<std::uint16_t>(node.value ? 1 : 0), 0.0},
                         1);
                } else if constexpr (std::is_same_v<T, Compare>) {
                    push({Code::Compare, node.op, slot_of(node.key, false, false), 0,
                          node.constant},
                         1);
                } else if constexpr (std::is_same_v<T, Delta>) {
                    push({Code::Delta, node.op, slot_of(node.key, false, true), 0, node.constant},
                         1);
                } else if constexpr (std::is_same_v<T, BoolItem>) {
                    push({Code::BoolItem, CompareOp::Equal, slot_of(node.key, true, true), 0, 0.0},
                         1);
                } else if constexpr (std::is_same_v<T, NoPrevious>) {
                    push({Code::NoPrevious, CompareOp::Equal, 0, 0, 0.0}, 1);
                } else if constexpr (std::is_same_v<T, Not>) {
                    emit(node.operand.front());
                    push({Code::Not, CompareOp::Equal, 0, 0, 0.0}, 0);
                } else {
                    if (node.operands.size() > 0xFFFF) {
                        throw RuleSetError(RuleSetErrorKind::MalformedPredicate, rule_name_,
                                           "too many operands");
                    }
                    for (const auto& c : node.operands) emit(c);
                    const auto n = static_cast<std::uint16_t>(node.operands.size());
                    push({std::is_same_v<T, All> ? Code::And : Code::Or, CompareOp::Equal, 0, n,
                          0.0},
                         1 - static_cast<int>(n));
                }
            },
            p.node);
    }

    const QuestionnaireDefinition& questionnaire_;
    const std::string& rule_name_;
    CompiledPredicate out_;
    int stack_ = 0;
    std::size_t max_stack_ = 0;
};

bool run_program(const CompiledPredicate& pred, const SlotValues& cur, const SlotValues* prev,
                 bool* stack) {
    using Code = CompiledPredicate::Code;
    std::size_t top = 0;
    for (const auto& in : pred.program) {
        switch (in.code) {
            case Code::Const:
                stack[top++] = in.arity != 0;
                break;
            case Code::Compare:
                stack[top++] =
                    cur.present[in.slot] && apply_compare(in.op, cur.values[in.slot], in.constant);
                break;
            case Code::Delta:
                stack[top++] = prev != nullptr && cur.present[in.slot] && prev->present[in.slot] &&
                               apply_compare(in.op,
                                             rounded_delta(cur.values[in.slot],
                                                           prev->values[in.slot]),
                                             in.constant);
                break;
            case Code::BoolItem:
                stack[top++] = cur.present[in.slot] && cur.values[in.slot] != 0.0;
                break;
            case Code::NoPrevious:
                stack[top++] = prev == nullptr;
                break;
            case Code::Not:
                stack[top - 1] = !stack[top - 1];
                break;
            case Code::And: {
                bool acc = true;
                for (std::size_t i = top - in.arity; i < top; ++i) acc = acc && stack[i];
                top -= in.arity;
                stack[top++] = acc;
                break;
            }
            case Code::Or: {
                bool acc = false;
                for (std::size_t i = top - in.arity; i < top; ++i) acc = acc || stack[i];
                top -= in.arity;
                stack[top++] = acc;
                break;
            }
        }
    }
    return top == 1 && stack[0];
}

bool is_unconditional(const Predicate& p) {
    const auto* c = std::get_if<Constant>(&p.node);
    return c != nullptr && c->value;
}

}  // namespace

bool evaluate(const CompiledPredicate& predicate, const SlotValues& current,
              const SlotValues* previous) {
    constexpr std::size_t kInline = 64;
    if (predicate.max_stack <= kInline) {
        std::array<bool, kInline> stack{};
        return run_program(predicate, current, previous, stack.data());
    }
    auto heap = std::make_unique<bool[]>(predicate.max_stack);
    return run_program(predicate, current, previous, heap.get());
}

SlotValues RuleSet::bind(const SymptomReport& report) const {
    SlotValues out;
    for (std::size_t i = 0; i < slot_keys_.size(); ++i) {
        if (auto v = report.value(slot_keys_[i])) {
            out.values[i] = *v;
            out.present[i] = true;
        }
    }
    return out;
}

RuleSet load_ruleset(std::string_view config_text, const QuestionnaireDefinition& questionnaire) {
    json doc;
    try {
        doc = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw RuleSetError(RuleSetErrorKind::InvalidConfig, "",
                           fmt::format("ruleset: invalid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
        throw RuleSetError(RuleSetErrorKind::InvalidConfig, "",
                           "ruleset: expected an object with a 'rules' array");
    }

    RuleSet rs;
    rs.version_ = doc.value("version", "");
    if (rs.version_.empty()) {
        throw RuleSetError(RuleSetErrorKind::InvalidConfig, "", "ruleset: missing version");
    }
    for (const auto& item : questionnaire.items) rs.slot_keys_.push_back(item.key);

    bool has_fallback = false;
    for (const auto& raw : doc["rules"]) {
        Rule rule;
        try {
            rule.name = raw.at("name").get<std::string>();
            rule.category = parse_enum<TriageCategory>(raw.at("category").get<std::string>());
            rule.source = raw.at("when").get<std::string>();
        } catch (const std::exception& e) {
            throw RuleSetError(RuleSetErrorKind::InvalidConfig, "",
                               fmt::format("ruleset: bad rule entry: {}", e.what()));
        }
        try {
            rule.predicate = parse_predicate(rule.source);
        } catch (const PredicateSyntaxError& e) {
            throw RuleSetError(RuleSetErrorKind::MalformedPredicate, rule.name,
                               fmt::format("rule '{}': {}", rule.name, e.what()));
        }
        if (depth(rule.predicate) > kMaxPredicateDepth) {
            throw RuleSetError(RuleSetErrorKind::DepthExceeded, rule.name,
                               fmt::format("rule '{}' nests deeper than {}", rule.name,
                                           kMaxPredicateDepth));
        }
        rule.compiled = Compiler(questionnaire, rule.name).compile(rule.predicate);
        rule.fallback = rule.category == TriageCategory::Yellow && is_unconditional(rule.predicate);
        if (rule.fallback) {
            has_fallback = true;
            rs.fallbacks_.push_back(rs.rules_.size());
        } else {
            rs.by_category_[index_of(rule.category)].push_back(rs.rules_.size());
        }
        rs.rules_.push_back(std::move(rule));
    }

    if (!has_fallback) {
        throw RuleSetError(RuleSetErrorKind::MissingFallback, "",
                           "ruleset has no unconditional Yellow fallback rule");
    }
    if (rs.by_category_[index_of(TriageCategory::Green)].empty()) {
        throw RuleSetError(RuleSetErrorKind::MissingFallback, "Green",
                           "ruleset has no explicit Green rule");
    }
    for (const TriageCategory c : kAllCategories) {
        if (rs.by_category_[index_of(c)].empty() && c != TriageCategory::Yellow) {
            const auto name = std::string(to_string(c));
            throw RuleSetError(RuleSetErrorKind::MissingCategory, name,
                               fmt::format("ruleset has no {} rule", name));
        }
    }
    return rs;
}

RuleSet load_ruleset_file(const std::string& path, const QuestionnaireDefinition& questionnaire) {
    std::ifstream in(path);
    if (!in) {
        throw RuleSetError(RuleSetErrorKind::InvalidConfig, path,
                           fmt::format("cannot open ruleset file '{}'", path));
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_ruleset(buffer.str(), questionnaire);
}

TriageResult triage(const RuleSet& rules, const SymptomReport& current,
                    const SymptomReport* previous) {
    const SlotValues cur = rules.bind(current);
    SlotValues prev_values;
    const SlotValues* prev = nullptr;
    if (previous != nullptr) {
        prev_values = rules.bind(*previous);
        prev = &prev_values;
    }

    for (auto it = kAllCategories.rbegin(); it != kAllCategories.rend(); ++it) {
        TriageResult result{*it, {}};
        for (const std::size_t idx : rules.rules_of(*it)) {
            const Rule& rule = rules.rules()[idx];
            if (evaluate(rule.compiled, cur, prev)) result.fired_rules.push_back(rule.name);
        }
        if (!result.fired_rules.empty()) return result;
    }
    TriageResult fallback{TriageCategory::Yellow, {}};
    for (const std::size_t idx : rules.fallback_rules()) {
        fallback.fired_rules.push_back(rules.rules()[idx].name);
    }
    return fallback;
}

TriageCategory classify(const RuleSet& rules, const SymptomReport& current,
                        const std::optional<SymptomReport>& previous) {
    return triage(rules, current, previous ? &*previous : nullptr).category;
}

std::vector<RuleExplanation> explain(const RuleSet& rules, const SymptomReport& current,
                                     const std::optional<SymptomReport>& previous) {
    const TriageResult r = triage(rules, current, previous ? &*previous : nullptr);
    std::vector<RuleExplanation> out;
    out.reserve(r.fired_rules.size());
    for (const auto& name : r.fired_rules) out.push_back({name, true});
    return out;
}

}  // namespace homewatch
