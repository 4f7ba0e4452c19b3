#include "homewatch/reference.hpp"

#include <algorithm>

namespace homewatch {

namespace {

struct TreeEvaluator {
    const SymptomReport& current;
    const SymptomReport* previous;

    bool operator()(const Constant& c) const { return c.value; }

    bool operator()(const Compare& c) const {
        const auto v = current.value(c.key);
        return v && apply_compare(c.op, *v, c.constant);
    }

    bool operator()(const Delta& d) const {
        if (!previous) return false;
        const auto now = current.value(d.key);
        const auto before = previous->value(d.key);
        return now && before && apply_compare(d.op, rounded_delta(*now, *before), d.constant);
    }

    bool operator()(const BoolItem& b) const {
        const auto v = current.value(b.key);
        return v && *v != 0.0;
    }

    bool operator()(const NoPrevious&) const { return previous == nullptr; }

    bool operator()(const Not& n) const { return !std::visit(*this, n.operand.front().node); }

    bool operator()(const All& a) const {
        return std::all_of(a.operands.begin(), a.operands.end(),
                           [&](const Predicate& p) { return std::visit(*this, p.node); });
    }

    bool operator()(const Any& a) const {
        return std::any_of(a.operands.begin(), a.operands.end(),
                           [&](const Predicate& p) { return std::visit(*this, p.node); });
    }
};

}  // namespace

bool evaluate_tree(const Predicate& p, const SymptomReport& current, const SymptomReport* previous) {
    return std::visit(TreeEvaluator{current, previous}, p.node);
}

TriageCategory reference_classify(const RuleSet& rules, const SymptomReport& current,
                                  const SymptomReport* previous) {
    TriageCategory best = TriageCategory::Yellow;
    bool any = false;
    for (const Rule& r : rules.rules()) {
        if (r.fallback) continue;
        if (evaluate_tree(r.predicate, current, previous) && (!any || r.category > best)) {
            best = r.category;
            any = true;
        }
    }
    return best;
}

}  // namespace homewatch
