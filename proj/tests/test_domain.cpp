#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace homewatch;
using namespace testing_support;
using nlohmann::json;

namespace {

std::string questionnaire_with(std::size_t n) {
    json items = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        items.push_back({{"key", fmt::format("item_{}", i)}, {"label", "x"}, {"kind", "boolean"}});
    }
    return json{{"items", items}}.dump();
}

}  // namespace

TEST(Eligibility, AllSixteenCombinations) {
    for (int mask = 0; mask < 16; ++mask) {
        const Eligibility e{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0};
        EXPECT_EQ(check_eligibility(e), mask == 15) << mask;
        EXPECT_EQ(first_unmet_criterion(e).has_value(), mask != 15);
    }
    EXPECT_EQ(*first_unmet_criterion({true, true, false, true}), "can_self_monitor");
}

TEST(Questionnaire, ShippedDefinitionHasSixItems) {
    ASSERT_EQ(questionnaire().items.size(), 6u);
    const Item* t = questionnaire().find("temperature_c");
    ASSERT_NE(t, nullptr);
    EXPECT_EQ(t->kind, ItemKind::Numeric);
    EXPECT_DOUBLE_EQ(t->min, 30.0);
    EXPECT_DOUBLE_EQ(t->max, 45.0);
}

TEST(Questionnaire, RejectsTenOrMoreItems) {
    EXPECT_NO_THROW(load_questionnaire(questionnaire_with(9)));
    EXPECT_THROW(load_questionnaire(questionnaire_with(10)), ConfigError);
    EXPECT_THROW(load_questionnaire(questionnaire_with(25)), ConfigError);
}

TEST(Questionnaire, RejectsDuplicateKeysAndBadKinds) {
    EXPECT_THROW(load_questionnaire(R"({"items":[{"key":"a","label":"a","kind":"boolean"},
                                                 {"key":"a","label":"b","kind":"boolean"}]})"),
                 ConfigError);
    EXPECT_THROW(load_questionnaire(R"({"items":[{"key":"a","label":"a","kind":"colour"}]})"), ConfigError);
    EXPECT_THROW(load_questionnaire(R"({"items":[{"key":"a","label":"a","kind":"numeric","min":5,"max":1}]})"),
                 ConfigError);
    EXPECT_THROW(load_questionnaire("not json"), ConfigError);
}

TEST(Questionnaire, RoundTripsThroughJson) {
    const json j = questionnaire_to_json(questionnaire());
    const QuestionnaireDefinition again = load_questionnaire(j.dump());
    EXPECT_EQ(questionnaire_to_json(again), j);
}

TEST(ValidateReport, AcceptsInRangeAnswers) {
    const Timestamp now = make_utc(2020, 3, 16, 9);
    const SymptomReport r = validate_report(questionnaire(), answers(36.8), now, "p-1");
    EXPECT_EQ(r.received_at, now);
    EXPECT_EQ(r.patient_id, "p-1");
    EXPECT_DOUBLE_EQ(*r.value("temperature_c"), 36.8);
    EXPECT_DOUBLE_EQ(*r.value("quarantine_problem"), 0.0);
    EXPECT_FALSE(r.value("oxygen").has_value());
}

TEST(ValidateReport, OutOfRangeIsReportedNotClamped) {
    json a = answers(46.2);
    try {
        validate_report(questionnaire(), a, {}, "p");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.kind(), ValidationErrorKind::OutOfRange);
        EXPECT_EQ(e.key(), "temperature_c");
        EXPECT_DOUBLE_EQ(e.value(), 46.2);
        EXPECT_DOUBLE_EQ(e.min(), 30.0);
        EXPECT_DOUBLE_EQ(e.max(), 45.0);
    }
}

TEST(ValidateReport, MissingRequiredItem) {
    json a = answers(37.0);
    a.erase("dyspnea");
    try {
        validate_report(questionnaire(), a, {}, "p");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.kind(), ValidationErrorKind::MissingRequiredItem);
        EXPECT_EQ(e.key(), "dyspnea");
    }
}

TEST(ValidateReport, UnknownItemAndWrongType) {
    json a = answers(37.0);
    a["oxygen"] = 95;
    try {
        validate_report(questionnaire(), a, {}, "p");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.kind(), ValidationErrorKind::UnknownItem);
        EXPECT_EQ(e.key(), "oxygen");
    }
    json b = answers(37.0);
    b["quarantine_problem"] = "yes";
    try {
        validate_report(questionnaire(), b, {}, "p");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.kind(), ValidationErrorKind::WrongType);
    }
    json c = answers(37.0);
    c["pain"] = 2.5;
    EXPECT_THROW(validate_report(questionnaire(), c, {}, "p"), ValidationError);
}

TEST(ValidateReport, TotalOverRandomRawMaps) {
    std::mt19937_64 rng(11);
    const std::vector<std::string> keys = {"temperature_c", "dyspnea", "pain", "distress",
                                           "quarantine_problem", "household_change", "oxygen"};
    for (int i = 0; i < 5000; ++i) {
        json raw = json::object();
        for (const auto& k : keys) {
            switch (rng() % 6) {
                case 0: break;
                case 1: raw[k] = static_cast<int>(rng() % 60) - 5; break;
                case 2: raw[k] = std::uniform_real_distribution<double>(25, 50)(rng); break;
                case 3: raw[k] = (rng() % 2) == 0; break;
                case 4: raw[k] = "x"; break;
                default: raw[k] = nullptr; break;
            }
        }
        try {
            const SymptomReport r = validate_report(questionnaire(), raw, {}, "p");
            for (const Item& item : questionnaire().items) {
                const auto v = r.value(item.key);
                ASSERT_TRUE(v.has_value());
                if (item.kind != ItemKind::Boolean) {
                    EXPECT_GE(*v, item.min);
                    EXPECT_LE(*v, item.max);
                }
            }
        } catch (const ValidationError&) {
        }
    }
}

TEST(Categories, TotalSeverityOrder) {
    EXPECT_LT(TriageCategory::Green, TriageCategory::Yellow);
    EXPECT_LT(TriageCategory::Yellow, TriageCategory::Orange);
    EXPECT_LT(TriageCategory::Orange, TriageCategory::Red);
    EXPECT_EQ(kAllCategories.size(), 4u);
    for (const auto c : kAllCategories) EXPECT_EQ(parse_enum<TriageCategory>(to_string(c)), c);
    EXPECT_THROW(parse_enum<TriageCategory>("Purple"), std::invalid_argument);
}

TEST(Time, Iso8601RoundTrip) {
    const Timestamp t = make_utc(2020, 3, 16, 20, 5, 7);
    EXPECT_EQ(format_iso8601(t), "2020-03-16T20:05:07Z");
    EXPECT_EQ(parse_iso8601("2020-03-16T20:05:07Z"), t);
    EXPECT_THROW(parse_iso8601("2020-03-16T20:05:07"), std::invalid_argument);
    EXPECT_THROW(parse_iso8601("yesterday"), std::invalid_argument);
}

TEST(Actions, InitialKindPerTrigger) {
    EXPECT_EQ(initial_kind(ActionTrigger::NonResponder), ActionKind::Call);
    EXPECT_EQ(initial_kind(ActionTrigger::PatientInitiated), ActionKind::Call);
    EXPECT_EQ(initial_kind(ActionTrigger::OrangeFlag), ActionKind::Review);
}
