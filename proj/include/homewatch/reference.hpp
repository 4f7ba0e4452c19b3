#pragma once

#include "homewatch/triage.hpp"

namespace homewatch {

/// Direct tree-walking evaluation of a parsed predicate against answer maps. Slow and simple;
/// the simulator uses it as an offline second opinion on the compiled evaluator.
bool evaluate_tree(const Predicate& p, const SymptomReport& current, const SymptomReport* previous);

/// Highest category with a matching conditional rule, else Yellow; computed with evaluate_tree.
TriageCategory reference_classify(const RuleSet& rules, const SymptomReport& current,
                                  const SymptomReport* previous);

}  // namespace homewatch
