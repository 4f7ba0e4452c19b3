#pragma once

#include "homewatch/centre_state.hpp"
#include "homewatch/domain.hpp"
#include "homewatch/event_store.hpp"
#include "homewatch/notifier.hpp"
#include "homewatch/scheduler.hpp"
#include "homewatch/tokens.hpp"
#include "homewatch/triage.hpp"

#include <nlohmann/json.hpp>

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace homewatch {

enum class ErrorCode : std::uint8_t {
    NotEligible,
    DuplicatePatient,
    InvalidRequest,
    NotFound,
    IllegalTransition,
    PatientNotMonitoring,
    StorageFailure,
    Internal,
};

template <>
struct EnumNames<ErrorCode> {
    static constexpr std::string_view type_name = "error code";
    static constexpr std::array<std::pair<ErrorCode, std::string_view>, 8> entries{{
        {ErrorCode::NotEligible, "not_eligible"},
        {ErrorCode::DuplicatePatient, "duplicate_patient"},
        {ErrorCode::InvalidRequest, "invalid_request"},
        {ErrorCode::NotFound, "not_found"},
        {ErrorCode::IllegalTransition, "illegal_transition"},
        {ErrorCode::PatientNotMonitoring, "patient_not_monitoring"},
        {ErrorCode::StorageFailure, "storage_failure"},
        {ErrorCode::Internal, "internal"},
    }};
};

class ServiceError : public std::runtime_error {
public:
    ServiceError(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct EnrollmentForm {
    std::string external_ref;
    std::string phone;
    std::optional<std::string> gp_contact;
    Eligibility eligibility;
    std::optional<int> reports_per_day;  // 1 or 2; deployment default otherwise
};

struct SubmitResult {
    std::string report_id;
    TriageCategory category = TriageCategory::Green;
    std::vector<std::string> fired_rules;
    std::optional<std::string> message_to_patient;
    std::optional<std::string> action_id;
};

struct ActionTransition {
    enum class Type : std::uint8_t { Acknowledge, Resolve };
    Type type = Type::Acknowledge;
    ActionKind kind = ActionKind::Review;  // Resolve only
    std::string note;                       // Resolve only; required
};

struct TickResult {
    std::size_t dispatches = 0;
    std::size_t overdue = 0;
    std::size_t failures = 0;
};

struct PatientDetail {
    DashboardRow row;
    Patient patient;
    std::vector<nlohmann::json> timeline;  // pseudonymized events, oldest first
    std::vector<ActionItem> actions;
};

struct ServiceOptions {
    std::string base_url = "http://localhost:8080";
    SchedulerConfig scheduler;
    int default_reports_per_day = 2;
    /// Minimum number of events between state snapshots (0 = off). The gap also grows to a
    /// quarter of the log length, so the tail replayed after a restart stays under a fifth of it.
    std::uint64_t snapshot_interval = 10000;
    /// Deliver outbound messages inline after each command instead of on a worker thread.
    bool synchronous_delivery = true;
    std::function<std::string()> patient_id_generator;
    TokenStore::Generator token_generator;
    /// Test hook invoked at named pipeline stages; throwing aborts the command.
    std::function<void(std::string_view stage)> fault_hook;
};

/// The Command Centre. Commands are serialized and each one commits a batch of events before
/// touching the read model; queries run concurrently under a shared lock.
class Service {
public:
    /// Rebuilds state from the log (snapshot plus tail). Throws CorruptEvent on a damaged log.
    Service(QuestionnaireDefinition questionnaire, RuleSet rules, EventLog& log, Notifier& notifier,
            ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Commands --------------------------------------------------------------

    std::string enroll(const EnrollmentForm& form, Timestamp now);

    /// Token checks, validation, triage, escalation, action or reassurance, GP summary; all or
    /// nothing. Throws TokenError, ValidationError or ServiceError; a refused submission only
    /// leaves a command_failed event behind.
    SubmitResult submit_report(std::string_view token, const nlohmann::json& answers, Timestamp now);

    ActionItem act(const std::string& action_id, const ActionTransition& transition, Timestamp now);

    /// Patient-initiated emergency contact. Returns the created action id.
    std::string contact(const std::string& patient_id, Timestamp now);

    void discharge(const std::string& patient_id, Timestamp now);

    TickResult tick(Timestamp now);

    // Queries ---------------------------------------------------------------

    /// Questionnaire for a live link; throws TokenError. Does not consume the token.
    nlohmann::json questionnaire_for(std::string_view token, Timestamp now) const;

    PatientPage list_patients(const PatientQuery& query) const;
    PatientDetail patient_detail(const std::string& patient_id) const;
    CentreStats stats() const;
    CentreTotals totals() const;

    /// Feed items with seq > since, oldest first, at most `limit`.
    std::vector<nlohmann::json> updates(std::uint64_t since, std::size_t limit = 1000) const;
    /// Blocks until a feed item with seq > since exists or the timeout passes.
    bool wait_for_updates(std::uint64_t since, std::chrono::milliseconds timeout) const;

    std::vector<OutboundMessage> dead_letters() const;

    /// Sends queued outbound messages. Returns how many were attempted.
    std::size_t deliver_pending();
    void start_delivery_worker();
    void stop_delivery_worker();

    CentreState state_copy() const;
    nlohmann::json state_json() const;
    nlohmann::json token_json() const { return tokens_.to_json(); }

    const QuestionnaireDefinition& questionnaire() const { return questionnaire_; }
    const RuleSet& rules() const { return rules_; }
    const EventLog& log() const { return log_; }

private:
    void commit(std::vector<Event>& events, std::vector<OutboundMessage> outbound);
    void apply_event(const Event& e, bool replaying);
    void record_failure(const std::string& patient_id, std::string_view operation,
                        std::string_view code, const std::string& detail, Timestamp now);
    void after_command();
    void fault(std::string_view stage) const;
    void maybe_snapshot(std::uint64_t after);

    QuestionnaireDefinition questionnaire_;
    RuleSet rules_;
    EventLog& log_;
    Notifier& notifier_;
    ServiceOptions options_;
    TokenStore tokens_;

    mutable std::shared_mutex state_mutex_;
    std::mutex command_mutex_;
    bool storage_degraded_ = false;
    std::uint64_t last_snapshot_seq_ = 0;
    CentreState state_;

    mutable std::mutex feed_mutex_;
    mutable std::condition_variable feed_cv_;

    std::mutex outbox_mutex_;
    std::condition_variable outbox_cv_;
    std::deque<OutboundMessage> outbox_;
    std::mutex delivery_mutex_;
    std::thread worker_;
    bool stop_worker_ = false;
};

/// Folds a log into a fresh read model.
CentreState replay(const EventLog& log);

}  // namespace homewatch
