#pragma once

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <random>
#include <string>
#include <vector>

namespace gen {

struct NumericKey {
    const char* key;
    double lo;
    double hi;
    bool integral;
};

inline const std::vector<NumericKey>& numeric_keys() {
    static const std::vector<NumericKey> k = {
        {"temperature_c", 30.0, 45.0, false},
        {"dyspnea", 0, 10, true},
        {"pain", 0, 10, true},
        {"distress", 0, 10, true},
    };
    return k;
}

inline const std::vector<const char*>& boolean_keys() {
    static const std::vector<const char*> k = {"quarantine_problem", "household_change"};
    return k;
}

inline const char* random_op(std::mt19937_64& rng) {
    static const char* ops[] = {"<", "<=", "=", ">=", ">"};
    return ops[rng() % 5];
}

inline double pick_value(std::mt19937_64& rng, const NumericKey& k) {
    if (k.integral) return static_cast<double>(std::uniform_int_distribution<int>(0, 10)(rng));
    return std::round(std::uniform_real_distribution<double>(35.0, 41.5)(rng) * 10.0) / 10.0;
}

/// A random expression in the rule language, at most `depth` levels deep.
inline std::string predicate(std::mt19937_64& rng, int depth) {
    const int pick = depth <= 1 ? static_cast<int>(rng() % 6) : static_cast<int>(rng() % 10);
    switch (pick) {
        case 0:
        case 1: {
            const auto& k = numeric_keys()[rng() % numeric_keys().size()];
            return fmt::format("{} {} {}", k.key, random_op(rng), pick_value(rng, k));
        }
        case 2: {
            const auto& k = numeric_keys()[rng() % numeric_keys().size()];
            const double d = k.integral ? static_cast<double>(static_cast<int>(rng() % 9) - 4)
                                        : std::round(std::uniform_real_distribution<double>(-3, 3)(rng) * 10) / 10;
            return fmt::format("delta({}) {} {}", k.key, random_op(rng), d);
        }
        case 3: return boolean_keys()[rng() % boolean_keys().size()];
        case 4: return (rng() % 4 == 0) ? "no_previous" : fmt::format("delta({}) = {}", boolean_keys()[rng() % 2], static_cast<int>(rng() % 3) - 1);
        case 5: return (rng() % 2) ? "true" : "false";
        case 6: return "not " + predicate(rng, depth - 1);
        case 7: return "(" + predicate(rng, depth - 1) + ")";
        case 8: {
            std::string s = predicate(rng, depth - 1);
            const int n = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < n; ++i) s += " and " + predicate(rng, depth - 1);
            return "(" + s + ")";
        }
        default: {
            std::string s = predicate(rng, depth - 1);
            const int n = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < n; ++i) s += " or " + predicate(rng, depth - 1);
            return "(" + s + ")";
        }
    }
}

/// Valid answers for the shipped questionnaire. Values cluster around rule thresholds.
inline nlohmann::json answers(std::mt19937_64& rng) {
    const double temp = std::round(std::uniform_real_distribution<double>(35.0, 41.5)(rng) * 10.0) / 10.0;
    auto scale = [&] {
        return (rng() % 3 == 0) ? 0 : std::uniform_int_distribution<int>(0, 10)(rng);
    };
    return {{"temperature_c", temp},
            {"dyspnea", scale()},
            {"pain", scale()},
            {"distress", scale()},
            {"quarantine_problem", rng() % 4 == 0},
            {"household_change", rng() % 6 == 0}};
}

/// A random ruleset with at least one rule per category plus the unconditional fallback.
inline nlohmann::json ruleset(std::mt19937_64& rng, int max_rules = 8) {
    static const char* cats[] = {"Green", "Yellow", "Orange", "Red"};
    nlohmann::json rules = nlohmann::json::array();
    int id = 0;
    for (const char* c : cats) {
        rules.push_back({{"name", fmt::format("r{}", id++)}, {"category", c}, {"when", predicate(rng, 4)}});
    }
    const int extra = static_cast<int>(rng() % static_cast<unsigned>(max_rules));
    for (int i = 0; i < extra; ++i) {
        rules.push_back({{"name", fmt::format("r{}", id++)}, {"category", cats[rng() % 4]}, {"when", predicate(rng, 5)}});
    }
    rules.push_back({{"name", "fallback"}, {"category", "Yellow"}, {"when", "true"}});
    std::shuffle(rules.begin(), rules.end(), rng);
    return {{"version", "random"}, {"rules", rules}};
}

}  // namespace gen
