#include "support.hpp"

#include "homewatch/http_api.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace homewatch;
using namespace testing_support;

namespace {

CohortSpec small_spec(std::uint64_t seed = 11) {
    CohortSpec s;
    s.n_patients = 60;
    s.days = 3;
    s.seed = seed;
    s.mix = parse_mix("stable=0.25,deteriorating=0.2,quarantine=0.1,nonresponder=0.15");
    s.contact_probability = 0.05;
    return s;
}

SimulationReport run_in_process(const CohortSpec& spec) {
    Harness h;
    InProcessTarget target(h.svc(), h.gateway);
    return run_simulation(generate_cohort(spec), target, default_rules(), questionnaire());
}

}  // namespace

TEST(Mix, ParsesAndRejects) {
    const CohortMix m = parse_mix("stable=0.3, deteriorating=0.1,quarantine=0.05,nonresponder=0.1");
    EXPECT_DOUBLE_EQ(m.stable, 0.3);
    EXPECT_DOUBLE_EQ(m.deteriorating, 0.1);
    EXPECT_DOUBLE_EQ(m.quarantine, 0.05);
    EXPECT_DOUBLE_EQ(m.nonresponder, 0.1);
    EXPECT_EQ(parse_mix(""), CohortMix{});
    EXPECT_THROW(parse_mix("stable"), InvalidSpec);
    EXPECT_THROW(parse_mix("stable=lots"), InvalidSpec);
    EXPECT_THROW(parse_mix("zombie=0.1"), InvalidSpec);
}

TEST(Spec, ValidateRejectsBadRanges) {
    EXPECT_NO_THROW(validate(small_spec()));
    CohortSpec s = small_spec();
    s.mix.stable = 1.5;
    EXPECT_THROW(validate(s), InvalidSpec);
    s = small_spec();
    s.mix = parse_mix("stable=0.6,deteriorating=0.6");
    EXPECT_THROW(validate(s), InvalidSpec);
    s = small_spec();
    s.n_patients = 0;
    EXPECT_THROW(validate(s), InvalidSpec);
    s = small_spec();
    s.days = 0;
    EXPECT_THROW(validate(s), InvalidSpec);
    s = small_spec();
    s.latency_min_minutes = 10;
    s.latency_max_minutes = 5;
    EXPECT_THROW(validate(s), InvalidSpec);
    s = small_spec();
    s.reports_per_day = 4;
    EXPECT_THROW(validate(s), InvalidSpec);
}

TEST(Cohort, DeterministicForSeed) {
    const Cohort a = generate_cohort(small_spec(5));
    const Cohort b = generate_cohort(small_spec(5));
    const Cohort c = generate_cohort(small_spec(6));
    EXPECT_EQ(a.patients, b.patients);
    EXPECT_NE(a.patients, c.patients);
    for (const auto& p : a.patients) {
        for (std::size_t k = 0; k < 6; ++k) {
            EXPECT_EQ(answers_for(a, p, k), answers_for(b, p, k));
            EXPECT_NO_THROW(validate_report(questionnaire(), answers_for(a, p, k), a.spec.start, "p"));
        }
    }
}

TEST(Cohort, ArchetypeProportionsFollowMix) {
    CohortSpec s = small_spec();
    s.n_patients = 4000;
    const Cohort c = generate_cohort(s);
    std::array<int, 5> n{};
    for (const auto& p : c.patients) ++n[static_cast<std::size_t>(p.archetype)];
    EXPECT_NEAR(n[static_cast<std::size_t>(Archetype::Stable)] / 4000.0, 0.25, 0.03);
    EXPECT_NEAR(n[static_cast<std::size_t>(Archetype::Deteriorating)] / 4000.0, 0.2, 0.03);
    EXPECT_NEAR(n[static_cast<std::size_t>(Archetype::QuarantineIssue)] / 4000.0, 0.1, 0.03);
    EXPECT_NEAR(n[static_cast<std::size_t>(Archetype::NonResponder)] / 4000.0, 0.15, 0.03);
}

TEST(Sms, TokenExtraction) {
    EXPECT_EQ(token_from_sms("Please answer: https://c.example/q/abc_DEF-1 thanks"), "abc_DEF-1");
    EXPECT_EQ(token_from_sms("https://c.example/q/xyz"), "xyz");
    EXPECT_EQ(token_from_sms("no link here"), "");
}

TEST(Run, ConservationHoldsAndReportIsDeterministic) {
    const SimulationReport a = run_in_process(small_spec());
    const SimulationReport b = run_in_process(small_spec());
    EXPECT_TRUE(a.invariant_violations.empty());
    EXPECT_EQ(report_to_json(a, false), report_to_json(b, false));

    const auto& h = a.category_histogram;
    EXPECT_EQ(h[0] + h[1] + h[2] + h[3], a.total_reports);
    EXPECT_EQ(a.automatic_messages, h[index_of(TriageCategory::Green)] + h[index_of(TriageCategory::Yellow)]);
    const auto& t = a.actions_by_trigger;
    EXPECT_EQ(t[static_cast<std::size_t>(ActionTrigger::OrangeFlag)], h[index_of(TriageCategory::Orange)]);
    EXPECT_EQ(t[static_cast<std::size_t>(ActionTrigger::RedFlag)], h[index_of(TriageCategory::Red)]);
    EXPECT_EQ(t[static_cast<std::size_t>(ActionTrigger::NonResponder)], a.overdue_detections);
    EXPECT_EQ(t[static_cast<std::size_t>(ActionTrigger::PatientInitiated)], a.patient_contacts);
    EXPECT_EQ(a.gp_summaries, a.total_reports);
    EXPECT_EQ(a.gp_enrollment_notices, 60u);
    EXPECT_GT(a.overdue_detections, 0u);
    EXPECT_GT(a.escalations, 0u);
    for (const auto c : kAllCategories) EXPECT_GT(h[index_of(c)], 0u) << to_string(c);
}

TEST(Run, JsonRoundTripAndFormats) {
    const SimulationReport r = run_in_process(small_spec());
    EXPECT_EQ(report_from_json(report_to_json(r)), r);

    std::ostringstream csv;
    report_out(r, ReportFormat::Csv, csv);
    EXPECT_EQ(csv.str().rfind("section,key,value\n", 0), 0u);
    EXPECT_NE(csv.str().find(fmt::format("category,Green,{}\n", r.category_histogram[0])), std::string::npos);
    EXPECT_NE(csv.str().find(fmt::format("total,reports,{}\n", r.total_reports)), std::string::npos);

    std::ostringstream text;
    report_out(r, ReportFormat::Text, text);
    EXPECT_NE(text.str().find("Automation ratio"), std::string::npos);

    std::ostringstream js;
    report_out(r, ReportFormat::Json, js);
    EXPECT_EQ(nlohmann::json::parse(js.str()), report_to_json(r));
}

TEST(Run, HttpTargetMatchesInProcess) {
    CohortSpec spec = small_spec(21);
    spec.n_patients = 25;
    spec.days = 2;
    const SimulationReport local = run_in_process(spec);

    Harness h({}, true);
    ManualClock clock(spec.start);
    ServerOptions o;
    o.operator_token = "sim";
    o.simulated_clock = &clock;
    o.capture = h.capture.get();
    CentreServer server(h.svc(), clock, o);
    const int port = server.start_background();
    HttpTarget target(fmt::format("http://127.0.0.1:{}", port), std::string("sim"));
    const SimulationReport remote = run_simulation(generate_cohort(spec), target, default_rules(), questionnaire());
    server.stop();
    EXPECT_EQ(report_to_json(remote, false), report_to_json(local, false));
}

TEST(Run, UnreachableEndpointIsReported) {
    CohortSpec spec = small_spec();
    spec.n_patients = 2;
    spec.days = 1;
    HttpTarget target("http://127.0.0.1:1");
    EXPECT_THROW(run_simulation(generate_cohort(spec), target, default_rules(), questionnaire()), ServiceUnreachable);
}
