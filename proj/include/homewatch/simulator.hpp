#pragma once

#include "homewatch/centre_state.hpp"
#include "homewatch/service.hpp"
#include "homewatch/time.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace homewatch {

class InvalidSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ServiceUnreachable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when the run breaks a conservation law or the oracle cross-check.
class InvariantViolation : public std::runtime_error {
public:
    explicit InvariantViolation(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

enum class Archetype : std::uint8_t { Asymptomatic, Stable, Deteriorating, QuarantineIssue, NonResponder };

template <>
struct EnumNames<Archetype> {
    static constexpr std::string_view type_name = "archetype";
    static constexpr std::array<std::pair<Archetype, std::string_view>, 5> entries{{
        {Archetype::Asymptomatic, "asymptomatic"},
        {Archetype::Stable, "stable"},
        {Archetype::Deteriorating, "deteriorating"},
        {Archetype::QuarantineIssue, "quarantine"},
        {Archetype::NonResponder, "nonresponder"},
    }};
};

struct CohortMix {
    double stable = 0.0;
    double deteriorating = 0.0;
    double quarantine = 0.0;
    double nonresponder = 0.0;  // the remainder is asymptomatic
    friend bool operator==(const CohortMix&, const CohortMix&) = default;
};

/// Parses "stable=0.3,deteriorating=0.1,quarantine=0.05,nonresponder=0.1". Throws InvalidSpec.
CohortMix parse_mix(std::string_view text);

struct CohortSpec {
    int n_patients = 100;
    int days = 7;
    std::uint64_t seed = 1;
    CohortMix mix;
    int latency_min_minutes = 2;  // response delay, uniform in [min, max]
    int latency_max_minutes = 180;
    double skip_probability = 0.5;      // per dispatch, non-responders only
    double contact_probability = 0.01;  // per submitted report, any patient
    int reports_per_day = 2;
    Timestamp start = make_utc(2020, 3, 16, 0, 0, 0);
    friend bool operator==(const CohortSpec&, const CohortSpec&) = default;
};

/// Throws InvalidSpec.
void validate(const CohortSpec& spec);

struct SimPatient {
    std::size_t index = 0;
    std::string external_ref;
    Archetype archetype = Archetype::Asymptomatic;
    double base_temperature = 36.6;
    int base_dyspnea = 0;
    int base_pain = 0;
    int base_distress = 0;
    bool abrupt = false;      // deteriorating: one jump on top of the ramp
    int jump_at = 0;          // report ordinal of the jump
    double jump_temperature = 0.0;
    int jump_dyspnea = 0;
    int problem_from = 0;     // quarantine: first report ordinal with a problem
    int problem_length = 0;
    friend bool operator==(const SimPatient&, const SimPatient&) = default;
};

struct Cohort {
    CohortSpec spec;
    std::vector<SimPatient> patients;
};

Cohort generate_cohort(const CohortSpec& spec);

/// Scripted answers for a patient's `ordinal`-th submitted report (0-based).
nlohmann::json answers_for(const Cohort& cohort, const SimPatient& patient, std::size_t ordinal);

struct ResponsePlan {
    bool respond = true;
    int latency_minutes = 0;
    bool contact = false;  // follows the report with an emergency contact
};

/// What the patient does with their `dispatch_ordinal`-th questionnaire link (0-based).
ResponsePlan response_for(const Cohort& cohort, const SimPatient& patient,
                          std::size_t dispatch_ordinal);

/// Category sequence the reference interpreter assigns to the first `count` scripted reports.
std::vector<TriageCategory> oracle_categories(const Cohort& cohort, const SimPatient& patient,
                                              const RuleSet& rules,
                                              const QuestionnaireDefinition& questionnaire,
                                              std::size_t count);

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

struct SubmitOutcome {
    TriageCategory category = TriageCategory::Green;
    std::vector<std::string> fired_rules;
};

struct DispatchNotice {
    std::string patient_id;
    std::string token;
};

/// The service under simulation, reached in-process or over HTTP.
class SimTarget {
public:
    virtual ~SimTarget() = default;
    virtual std::string enroll(const EnrollmentForm& form, Timestamp now) = 0;
    /// Runs the scheduler at `now` and returns the questionnaire links it sent.
    virtual std::vector<DispatchNotice> tick(Timestamp now) = 0;
    virtual SubmitOutcome submit(const std::string& token, const nlohmann::json& answers,
                                 Timestamp now) = 0;
    virtual void contact(const std::string& patient_id, Timestamp now) = 0;
    virtual CentreTotals totals() = 0;
    /// Category of every report, per patient, in log order.
    virtual std::map<std::string, std::vector<TriageCategory>> category_sequences() = 0;
    virtual CentreStats stats() = 0;
    /// Extra target-specific checks run after the simulation; returns problems found.
    virtual std::vector<std::string> final_checks() { return {}; }
};

/// Extracts the token from a questionnaire SMS body; empty if there is no link.
std::string token_from_sms(std::string_view body);

class InProcessTarget final : public SimTarget {
public:
    InProcessTarget(Service& service, MemoryGateway& gateway, bool check_replay = true)
        : service_(service), gateway_(gateway), check_replay_(check_replay) {}

    std::string enroll(const EnrollmentForm& form, Timestamp now) override;
    std::vector<DispatchNotice> tick(Timestamp now) override;
    SubmitOutcome submit(const std::string& token, const nlohmann::json& answers,
                         Timestamp now) override;
    void contact(const std::string& patient_id, Timestamp now) override;
    CentreTotals totals() override;
    std::map<std::string, std::vector<TriageCategory>> category_sequences() override;
    CentreStats stats() override;
    std::vector<std::string> final_checks() override;

private:
    Service& service_;
    MemoryGateway& gateway_;
    bool check_replay_;
};

class HttpTarget final : public SimTarget {
public:
    /// `endpoint` like "http://127.0.0.1:8080". The server must run with a simulated clock.
    explicit HttpTarget(const std::string& endpoint, std::optional<std::string> operator_token = {});
    ~HttpTarget() override;

    std::string enroll(const EnrollmentForm& form, Timestamp now) override;
    std::vector<DispatchNotice> tick(Timestamp now) override;
    SubmitOutcome submit(const std::string& token, const nlohmann::json& answers,
                         Timestamp now) override;
    void contact(const std::string& patient_id, Timestamp now) override;
    CentreTotals totals() override;
    std::map<std::string, std::vector<TriageCategory>> category_sequences() override;
    CentreStats stats() override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Run and report
// ---------------------------------------------------------------------------

struct SimulationReport {
    CohortSpec spec;
    std::uint64_t total_reports = 0;
    std::uint64_t dispatches = 0;
    std::array<std::uint64_t, 4> category_histogram{};
    std::array<std::uint64_t, 5> actions_by_trigger{};
    std::uint64_t action_items = 0;
    std::uint64_t automatic_messages = 0;  // reassurance replies sent without a clinician
    std::uint64_t gp_summaries = 0;
    std::uint64_t gp_enrollment_notices = 0;
    double automation_ratio = 1.0;
    std::uint64_t overdue_detections = 0;
    std::uint64_t patient_contacts = 0;
    std::uint64_t escalations = 0;
    std::uint64_t deescalations = 0;
    std::map<std::string, std::uint64_t> rule_coverage;  // rule name -> reports it fired on
    std::array<std::uint64_t, 5> patients_by_archetype{};
    std::vector<std::string> invariant_violations;
    double runtime_seconds = 0.0;

    friend bool operator==(const SimulationReport&, const SimulationReport&) = default;
};

/// Drives `target` through the cohort's simulated days. Throws InvariantViolation (after the
/// day it was detected on) and ServiceUnreachable. `rules` and `questionnaire` feed the offline
/// oracle pass.
SimulationReport run_simulation(const Cohort& cohort, SimTarget& target, const RuleSet& rules,
                                const QuestionnaireDefinition& questionnaire);

/// Without the runtime the JSON depends only on the spec and seed.
nlohmann::json report_to_json(const SimulationReport& report, bool include_runtime = true);
SimulationReport report_from_json(const nlohmann::json& j);

enum class ReportFormat : std::uint8_t { Json, Text, Csv };

template <>
struct EnumNames<ReportFormat> {
    static constexpr std::string_view type_name = "report format";
    static constexpr std::array<std::pair<ReportFormat, std::string_view>, 3> entries{{
        {ReportFormat::Json, "json"},
        {ReportFormat::Text, "text"},
        {ReportFormat::Csv, "csv"},
    }};
};

void report_out(const SimulationReport& report, ReportFormat format, std::ostream& out);

}  // namespace homewatch
