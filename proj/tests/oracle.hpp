#pragma once

// Brute-force reference interpreter for the rule language. It re-reads the predicate source
// character by character on every evaluation and shares no code with the production parser,
// compiler or evaluator.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

using Values = std::map<std::string, double>;

enum class Category { Green = 0, Yellow = 1, Orange = 2, Red = 3 };

inline const char* name_of(Category c) {
    switch (c) {
        case Category::Green: return "Green";
        case Category::Yellow: return "Yellow";
        case Category::Orange: return "Orange";
        case Category::Red: return "Red";
    }
    return "?";
}

inline Category category_from(std::string_view s) {
    if (s == "Green") return Category::Green;
    if (s == "Yellow") return Category::Yellow;
    if (s == "Orange") return Category::Orange;
    if (s == "Red") return Category::Red;
    throw std::invalid_argument("oracle: bad category");
}

class Interpreter {
public:
    Interpreter(std::string_view src, const Values& cur, const Values* prev)
        : s_(src), cur_(cur), prev_(prev) {}

    bool run() {
        const bool v = disjunction();
        skip();
        if (i_ != s_.size()) throw std::invalid_argument("oracle: trailing input");
        return v;
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;
    const Values& cur_;
    const Values* prev_;

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }

    std::string word() {
        skip();
        std::size_t j = i_;
        while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_')) ++j;
        return std::string(s_.substr(i_, j - i_));
    }

    bool eat_word(const char* w) {
        skip();
        const std::string got = word();
        if (got == w) {
            i_ += got.size();
            return true;
        }
        return false;
    }

    bool eat_char(char c) {
        skip();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }

    bool disjunction() {
        bool v = conjunction();
        while (eat_word("or")) {
            const bool rhs = conjunction();
            v = v || rhs;
        }
        return v;
    }

    bool conjunction() {
        bool v = negation();
        while (eat_word("and")) {
            const bool rhs = negation();
            v = v && rhs;
        }
        return v;
    }

    bool negation() {
        if (eat_word("not")) return !negation();
        return atom();
    }

    std::string op() {
        skip();
        static const char* ops[] = {"<=", ">=", "<", ">", "="};
        for (const char* o : ops) {
            const std::size_t n = std::char_traits<char>::length(o);
            if (s_.substr(i_, n) == o) {
                i_ += n;
                return o;
            }
        }
        throw std::invalid_argument("oracle: expected operator");
    }

    double number() {
        skip();
        const std::string rest(s_.substr(i_));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) throw std::invalid_argument("oracle: expected number");
        i_ += static_cast<std::size_t>(end - rest.c_str());
        return v;
    }

    static bool compare(double a, const std::string& o, double b) {
        if (o == "<") return a < b;
        if (o == "<=") return a <= b;
        if (o == "=") return a == b;
        if (o == ">=") return a >= b;
        return a > b;
    }

    static std::optional<double> lookup(const Values& v, const std::string& k) {
        auto it = v.find(k);
        if (it == v.end()) return std::nullopt;
        return it->second;
    }

    bool atom() {
        if (eat_char('(')) {
            const bool v = disjunction();
            if (!eat_char(')')) throw std::invalid_argument("oracle: expected )");
            return v;
        }
        if (eat_word("true")) return true;
        if (eat_word("false")) return false;
        if (eat_word("no_previous")) return prev_ == nullptr;
        if (eat_word("delta")) {
            if (!eat_char('(')) throw std::invalid_argument("oracle: expected (");
            const std::string key = word();
            i_ += key.size();
            if (!eat_char(')')) throw std::invalid_argument("oracle: expected )");
            const std::string o = op();
            const double k = number();
            if (prev_ == nullptr) return false;
            const auto c = lookup(cur_, key);
            const auto p = lookup(*prev_, key);
            if (!c || !p) return false;
            const double d = std::round((*c - *p) * 1000000.0) / 1000000.0;
            return compare(d, o, k);
        }
        const std::string key = word();
        if (key.empty()) throw std::invalid_argument("oracle: expected atom");
        i_ += key.size();
        skip();
        const bool has_op = i_ < s_.size() && (s_[i_] == '<' || s_[i_] == '>' || s_[i_] == '=');
        const auto value = lookup(cur_, key);
        if (!has_op) return value.has_value() && *value != 0.0;
        const std::string o = op();
        const double k = number();
        return value.has_value() && compare(*value, o, k);
    }
};

inline bool eval(std::string_view source, const Values& current, const Values* previous) {
    return Interpreter(source, current, previous).run();
}

struct Rule {
    std::string name;
    Category category;
    std::string when;
};

inline bool is_fallback(const Rule& r) {
    if (r.category != Category::Yellow) return false;
    std::string t;
    for (char c : r.when) {
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    }
    while (t.size() >= 2 && t.front() == '(' && t.back() == ')') t = t.substr(1, t.size() - 2);
    return t == "true";
}

struct Verdict {
    Category category;
    std::vector<std::string> fired;
};

// Every conditional rule is evaluated; the most severe satisfied category wins. The
// unconditional Yellow rule decides only when no conditional rule is satisfied.
inline Verdict classify(const std::vector<Rule>& rules, const Values& current, const Values* previous) {
    std::optional<Category> best;
    std::vector<std::pair<Category, std::string>> hits;
    for (const Rule& r : rules) {
        if (is_fallback(r)) continue;
        if (eval(r.when, current, previous)) {
            hits.emplace_back(r.category, r.name);
            if (!best || static_cast<int>(r.category) > static_cast<int>(*best)) best = r.category;
        }
    }
    Verdict v{best.value_or(Category::Yellow), {}};
    if (best) {
        for (const auto& [c, n] : hits) {
            if (c == *best) v.fired.push_back(n);
        }
    } else {
        for (const Rule& r : rules) {
            if (is_fallback(r)) v.fired.push_back(r.name);
        }
    }
    return v;
}

// The shipped default ruleset, transcribed by hand from its published thresholds.
inline std::vector<Rule> default_v1() {
    return {
        {"severe_fever", Category::Red, "temperature_c >= 40.0"},
        {"severe_dyspnea", Category::Red, "dyspnea >= 7"},
        {"rapid_temperature_rise", Category::Red, "delta(temperature_c) >= 2.0"},
        {"persistent_quarantine_problem", Category::Red, "quarantine_problem and delta(quarantine_problem) = 0"},
        {"temperature_rise", Category::Orange, "delta(temperature_c) >= 1.0"},
        {"dyspnea_worsening", Category::Orange, "delta(dyspnea) >= 2"},
        {"new_quarantine_problem", Category::Orange,
         "quarantine_problem and (no_previous or delta(quarantine_problem) = 1)"},
        {"asymptomatic", Category::Green,
         "temperature_c < 37.5 and dyspnea = 0 and pain = 0 and distress = 0 and not quarantine_problem"},
        {"fallback_symptomatic", Category::Yellow, "true"},
    };
}

}  // namespace oracle
