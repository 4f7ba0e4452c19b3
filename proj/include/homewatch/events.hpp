#pragma once

#include "homewatch/domain.hpp"
#include "homewatch/json_support.hpp"
#include "homewatch/notifier.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace homewatch {

// One payload type per event kind. Every state change in the centre is one of these.

struct Enrolled {
    std::string external_ref;
    std::string phone;
    std::optional<std::string> gp_contact;
    Eligibility eligibility;
    int reports_per_day = 2;
    Timestamp next_dispatch_at{};
};

struct Dispatched {
    std::string dispatch_id;
    std::string message_id;
    std::string token_hash;
    Timestamp expires_at{};
    Timestamp next_dispatch_at{};
};

struct ReportReceived {
    std::string report_id;
    std::string dispatch_id;
    std::string token_hash;
    Answers answers;
};

struct FlagChanged {
    std::string report_id;
    std::optional<TriageCategory> from;  // absent on the first report
    TriageCategory to = TriageCategory::Green;
    std::string ruleset_version;
    std::vector<std::string> fired_rules;
};

struct ScheduleChanged {
    int reports_per_day = 2;
    bool escalated = false;
    Timestamp next_dispatch_at{};
    std::string reason;
};

struct OverdueDetected {
    std::string dispatch_id;
    Timestamp dispatched_at{};
};

struct ActionCreated {
    std::string action_id;
    ActionTrigger trigger = ActionTrigger::OrangeFlag;
    ActionKind kind = ActionKind::Review;
    std::string source_id;  // report, dispatch or contact that caused it
};

struct ActionAcknowledged {
    std::string action_id;
};

struct ActionResolved {
    std::string action_id;
    ActionKind kind = ActionKind::Review;
    std::string note;
};

struct StatusChanged {
    LifecycleStatus status = LifecycleStatus::Monitoring;
    std::string reason;
};

struct MessageSent {
    std::string message_id;
    Channel channel = Channel::SMS;
    MessagePurpose purpose = MessagePurpose::Reassurance;
};

struct GpSummarySent {
    std::string report_id;
    std::string message_id;
    TriageCategory category = TriageCategory::Green;
    bool category_change = false;
    std::vector<std::string> fired_rules;
    std::vector<std::string> actions;
    bool delivered = true;  // false when no GP contact exists
};

/// A command that was refused or failed part-way. Carries no state change.
struct CommandFailed {
    std::string operation;
    std::string code;
    std::string detail;
};

using EventPayload =
    std::variant<Enrolled, Dispatched, ReportReceived, FlagChanged, ScheduleChanged,
                 OverdueDetected, ActionCreated, ActionAcknowledged, ActionResolved,
                 StatusChanged, MessageSent, GpSummarySent, CommandFailed>;

/// Wire names, indexed like EventPayload alternatives.
inline constexpr std::array<std::string_view, std::variant_size_v<EventPayload>> kEventKinds = {
    "enrolled",         "dispatched",      "report_received",     "flag_changed",
    "schedule_changed", "overdue_detected", "action_created",     "action_acknowledged",
    "action_resolved",  "status_changed",  "message_sent",        "gp_summary_sent",
    "command_failed"};

struct Event {
    std::uint64_t seq = 0;  // assigned by the event store
    std::string patient_id;
    Timestamp at{};
    EventPayload payload;

    std::string_view kind() const { return kEventKinds[payload.index()]; }

    template <typename T>
    const T* as() const {
        return std::get_if<T>(&payload);
    }
};

nlohmann::json event_to_json(const Event& e);
/// Throws std::exception subclasses on malformed input.
Event event_from_json(const nlohmann::json& j);

/// The same JSON with direct identifiers (phone, GP handle, external reference, token digest)
/// removed. Used for research exports.
nlohmann::json pseudonymized_event_json(const Event& e);

}  // namespace homewatch
