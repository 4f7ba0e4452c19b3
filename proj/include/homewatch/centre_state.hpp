#pragma once

#include "homewatch/domain.hpp"
#include "homewatch/events.hpp"
#include "homewatch/json_support.hpp"
#include "homewatch/scheduler.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace homewatch {

/// Everything the centre knows about one patient, folded from events.
struct PatientRecord {
    Patient patient;
    std::vector<PendingDispatch> pending;  // unanswered, not yet flagged overdue
    std::optional<SymptomReport> last_report;
    std::optional<std::string> last_report_id;
    bool has_report = false;
    std::vector<TriageCategory> categories_since_escalation;
    std::vector<std::string> decisions_since_summary;
    std::size_t open_actions = 0;
    bool gp_enrollment_notified = false;
    std::size_t reports = 0;
    std::vector<std::uint64_t> timeline;  // seqs of this patient's events
};

struct CentreCounters {
    std::uint64_t dispatches = 0;
    std::uint64_t reports = 0;
    std::uint64_t actions = 0;
    std::uint64_t messages = 0;
    std::uint64_t contacts = 0;
};

/// Totals over the whole log, used by the simulator and conservation checks.
struct CentreTotals {
    std::array<std::uint64_t, 4> reports_by_category{};
    std::array<std::uint64_t, 5> actions_by_trigger{};
    std::uint64_t reassurance_messages = 0;
    std::uint64_t gp_enrollment_notices = 0;
    std::uint64_t gp_summaries = 0;
    std::uint64_t overdue_detections = 0;
    std::uint64_t reports_received = 0;
    std::uint64_t dispatches = 0;
    std::uint64_t escalations = 0;
    std::uint64_t deescalations = 0;
    std::uint64_t failed_commands = 0;

    friend bool operator==(const CentreTotals&, const CentreTotals&) = default;
};

struct CentreStats {
    std::array<std::size_t, 4> categories{};  // Monitoring patients only
    std::size_t overdue = 0;
    std::size_t open_actions = 0;
    std::size_t monitoring = 0;
    std::size_t enrolled_total = 0;
    std::size_t hospitalized = 0;
    std::size_t discharged = 0;

    friend bool operator==(const CentreStats&, const CentreStats&) = default;
};

nlohmann::json to_json(const CentreStats& s);

struct PatientQuery {
    std::optional<TriageCategory> category;
    std::optional<bool> overdue;
    std::optional<bool> needs_action;
    std::optional<LifecycleStatus> status;
    std::string search;
    std::size_t offset = 0;
    std::size_t limit = 50;
};

struct DashboardRow {
    std::string patient_id;
    TriageCategory category = TriageCategory::Green;
    bool overdue = false;
    LifecycleStatus status = LifecycleStatus::Monitoring;
    std::optional<Timestamp> last_report_at;
    Answers key_symptoms;
    std::size_t open_actions = 0;
    int reports_per_day = 0;
};

nlohmann::json to_json(const DashboardRow& row);

struct PatientPage {
    std::vector<DashboardRow> rows;
    std::size_t total = 0;  // matches before paging
    std::optional<std::size_t> next_offset;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MonitoringSchedule, reports_per_day, baseline_per_day,
                                   escalated, next_dispatch_at, overdue_after)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Patient, patient_id, external_ref, phone, gp_contact,
                                   enrolled_at, eligibility, schedule, current_category, overdue,
                                   status)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PendingDispatch, dispatch_id, dispatched_at, overdue_flagged)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SymptomReport, patient_id, received_at, answers)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ActionItem, action_id, patient_id, created_at, trigger, kind,
                                   status, resolution_note)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PatientRecord, patient, pending, last_report, last_report_id,
                                   has_report, categories_since_escalation,
                                   decisions_since_summary, open_actions, gp_enrollment_notified,
                                   reports, timeline)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CentreCounters, dispatches, reports, actions, messages, contacts)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CentreTotals, reports_by_category, actions_by_trigger,
                                   reassurance_messages, gp_enrollment_notices, gp_summaries,
                                   overdue_detections, reports_received, dispatches, escalations,
                                   deescalations, failed_commands)

/// The centre's read model. Mutated only through apply(); replaying a log into a fresh
/// instance reproduces the live instance exactly.
class CentreState {
public:
    void apply(const Event& event);

    std::uint64_t last_seq() const { return last_seq_; }
    const PatientRecord* find(const std::string& patient_id) const;
    const std::string* patient_by_external_ref(const std::string& ref) const;
    const ActionItem* find_action(const std::string& action_id) const;

    const std::map<std::string, PatientRecord>& patients() const { return patients_; }
    const std::map<std::string, ActionItem>& actions() const { return actions_; }
    const CentreCounters& counters() const { return counters_; }
    const CentreTotals& totals() const { return totals_; }
    /// Seqs of events that produce a dashboard update, ascending.
    const std::vector<std::uint64_t>& feed() const { return feed_; }

    CentreStats stats() const;
    PatientPage list_patients(const PatientQuery& query) const;

    /// Patients whose dispatch or overdue deadline is due at `now`.
    std::vector<PatientScheduleState> due_for_tick(Timestamp now) const;

    nlohmann::json to_json() const;
    static CentreState from_json(const nlohmann::json& j);

    static bool feed_relevant(const Event& event);

    /// Line added to the patient's next GP summary for this event, if any.
    std::optional<std::string> decision_text(const Event& event) const;

private:
    void index_patient(const std::string& patient_id);
    void unindex_patient(const std::string& patient_id);

    std::uint64_t last_seq_ = 0;
    std::map<std::string, PatientRecord> patients_;
    std::map<std::string, ActionItem> actions_;
    std::unordered_map<std::string, std::string> by_external_ref_;
    CentreCounters counters_;
    CentreTotals totals_;
    std::vector<std::uint64_t> feed_;

    // Derived indexes for the scheduler tick; rebuilt on load, never serialized.
    std::set<std::pair<Timestamp, std::string>> dispatch_due_;
    std::set<std::pair<Timestamp, std::string>> overdue_due_;
    std::unordered_map<std::string, std::pair<Timestamp, std::optional<Timestamp>>> indexed_;
};

}  // namespace homewatch
