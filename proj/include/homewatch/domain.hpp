#pragma once

#include "homewatch/enum_names.hpp"
#include "homewatch/time.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homewatch {

// ---------------------------------------------------------------------------
// Triage categories
// ---------------------------------------------------------------------------

/// Severity flag. The enumerator order is the severity order: Green < Yellow < Orange < Red.
enum class TriageCategory : std::uint8_t { Green, Yellow, Orange, Red };

inline constexpr std::array<TriageCategory, 4> kAllCategories = {
    TriageCategory::Green, TriageCategory::Yellow, TriageCategory::Orange, TriageCategory::Red};

template <>
struct EnumNames<TriageCategory> {
    static constexpr std::string_view type_name = "category";
    static constexpr std::array<std::pair<TriageCategory, std::string_view>, 4> entries{{
        {TriageCategory::Green, "Green"},
        {TriageCategory::Yellow, "Yellow"},
        {TriageCategory::Orange, "Orange"},
        {TriageCategory::Red, "Red"},
    }};
};

constexpr std::size_t index_of(TriageCategory c) { return static_cast<std::size_t>(c); }

/// Orange and Red hand the patient over to clinicians.
constexpr bool needs_clinician(TriageCategory c) { return c >= TriageCategory::Orange; }

// ---------------------------------------------------------------------------
// Enrollment
// ---------------------------------------------------------------------------

enum class LifecycleStatus : std::uint8_t { Enrolled, Monitoring, Hospitalized, Discharged };

template <>
struct EnumNames<LifecycleStatus> {
    static constexpr std::string_view type_name = "status";
    static constexpr std::array<std::pair<LifecycleStatus, std::string_view>, 4> entries{{
        {LifecycleStatus::Enrolled, "Enrolled"},
        {LifecycleStatus::Monitoring, "Monitoring"},
        {LifecycleStatus::Hospitalized, "Hospitalized"},
        {LifecycleStatus::Discharged, "Discharged"},
    }};
};

struct Eligibility {
    bool no_initial_severity = false;
    bool quarantine_capable = false;
    bool can_self_monitor = false;
    bool consent = false;

    friend bool operator==(const Eligibility&, const Eligibility&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Eligibility, no_initial_severity, quarantine_capable,
                                   can_self_monitor, consent)

/// True iff every criterion holds.
bool check_eligibility(const Eligibility& e);

/// Name of the first criterion that is not met, in declaration order.
std::optional<std::string_view> first_unmet_criterion(const Eligibility& e);

// ---------------------------------------------------------------------------
// Questionnaire
// ---------------------------------------------------------------------------

enum class ItemKind : std::uint8_t { Numeric, Boolean, Scale0To10 };

template <>
struct EnumNames<ItemKind> {
    static constexpr std::string_view type_name = "item kind";
    static constexpr std::array<std::pair<ItemKind, std::string_view>, 3> entries{{
        {ItemKind::Numeric, "numeric"},
        {ItemKind::Boolean, "boolean"},
        {ItemKind::Scale0To10, "scale_0_10"},
    }};
};

struct Item {
    std::string key;
    std::string label;
    ItemKind kind = ItemKind::Numeric;
    double min = 0.0;  // numeric and scale only
    double max = 0.0;
    std::string unit;
    bool required = true;
};

/// Questionnaires are kept short: strictly fewer than this many items.
inline constexpr std::size_t kMaxQuestionnaireItems = 10;

struct QuestionnaireDefinition {
    std::vector<Item> items;

    const Item* find(std::string_view key) const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses and checks a questionnaire definition (JSON). Throws ConfigError on any violation,
/// including a definition with 10 or more items.
QuestionnaireDefinition load_questionnaire(std::string_view json_text);
QuestionnaireDefinition load_questionnaire_file(const std::string& path);

nlohmann::json questionnaire_to_json(const QuestionnaireDefinition& def);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Answers are stored numerically; boolean items hold 0.0 or 1.0.
using Answers = std::map<std::string, double, std::less<>>;

struct SymptomReport {
    std::string patient_id;
    Timestamp received_at{};
    Answers answers;

    std::optional<double> value(std::string_view key) const;
};

enum class ValidationErrorKind : std::uint8_t { MissingRequiredItem, OutOfRange, UnknownItem, WrongType };

template <>
struct EnumNames<ValidationErrorKind> {
    static constexpr std::string_view type_name = "validation error";
    static constexpr std::array<std::pair<ValidationErrorKind, std::string_view>, 4> entries{{
        {ValidationErrorKind::MissingRequiredItem, "missing_required_item"},
        {ValidationErrorKind::OutOfRange, "out_of_range"},
        {ValidationErrorKind::UnknownItem, "unknown_item"},
        {ValidationErrorKind::WrongType, "wrong_type"},
    }};
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(ValidationErrorKind kind, std::string key, std::string message,
                    double value = 0.0, double min = 0.0, double max = 0.0)
        : std::runtime_error(std::move(message)),
          kind_(kind),
          key_(std::move(key)),
          value_(value),
          min_(min),
          max_(max) {}

    ValidationErrorKind kind() const { return kind_; }
    const std::string& key() const { return key_; }
    double value() const { return value_; }
    double min() const { return min_; }
    double max() const { return max_; }

private:
    ValidationErrorKind kind_;
    std::string key_;
    double value_;
    double min_;
    double max_;
};

/// Checks raw answers (a JSON object) against the questionnaire. Throws exactly one
/// ValidationError on the first problem found: unknown keys first, then items in definition
/// order (missing, wrong type, out of range). Values are never clamped.
SymptomReport validate_report(const QuestionnaireDefinition& def, const nlohmann::json& raw_answers,
                              Timestamp now, std::string patient_id);

// ---------------------------------------------------------------------------
// Monitoring schedule
// ---------------------------------------------------------------------------

struct MonitoringSchedule {
    int reports_per_day = 2;
    int baseline_per_day = 2;
    bool escalated = false;
    Timestamp next_dispatch_at{};
    Duration overdue_after = 8h;

    friend bool operator==(const MonitoringSchedule&, const MonitoringSchedule&) = default;
};

// ---------------------------------------------------------------------------
// Action items
// ---------------------------------------------------------------------------

enum class ActionTrigger : std::uint8_t {
    OrangeFlag,
    RedFlag,
    NonResponder,
    PatientInitiated,
    MissingGPContact,
};

template <>
struct EnumNames<ActionTrigger> {
    static constexpr std::string_view type_name = "trigger";
    static constexpr std::array<std::pair<ActionTrigger, std::string_view>, 5> entries{{
        {ActionTrigger::OrangeFlag, "OrangeFlag"},
        {ActionTrigger::RedFlag, "RedFlag"},
        {ActionTrigger::NonResponder, "NonResponder"},
        {ActionTrigger::PatientInitiated, "PatientInitiated"},
        {ActionTrigger::MissingGPContact, "MissingGPContact"},
    }};
};

enum class ActionKind : std::uint8_t { Review, Call, IntensifyMonitoring, DispatchAssistance, Hospitalize };

template <>
struct EnumNames<ActionKind> {
    static constexpr std::string_view type_name = "action kind";
    static constexpr std::array<std::pair<ActionKind, std::string_view>, 5> entries{{
        {ActionKind::Review, "Review"},
        {ActionKind::Call, "Call"},
        {ActionKind::IntensifyMonitoring, "IntensifyMonitoring"},
        {ActionKind::DispatchAssistance, "DispatchAssistance"},
        {ActionKind::Hospitalize, "Hospitalize"},
    }};
};

enum class ActionStatus : std::uint8_t { Open, Acknowledged, Resolved };

template <>
struct EnumNames<ActionStatus> {
    static constexpr std::string_view type_name = "action status";
    static constexpr std::array<std::pair<ActionStatus, std::string_view>, 3> entries{{
        {ActionStatus::Open, "Open"},
        {ActionStatus::Acknowledged, "Acknowledged"},
        {ActionStatus::Resolved, "Resolved"},
    }};
};

/// Kind of work an action starts with, before a clinician resolves it.
ActionKind initial_kind(ActionTrigger trigger);

struct ActionItem {
    std::string action_id;
    std::string patient_id;
    Timestamp created_at{};
    ActionTrigger trigger = ActionTrigger::OrangeFlag;
    ActionKind kind = ActionKind::Review;
    ActionStatus status = ActionStatus::Open;
    std::optional<std::string> resolution_note;
};

// ---------------------------------------------------------------------------
// Patient
// ---------------------------------------------------------------------------

struct Patient {
    std::string patient_id;
    std::string external_ref;
    std::string phone;                      // pseudonymized contact handle
    std::optional<std::string> gp_contact;  // opaque GP notification handle
    Timestamp enrolled_at{};
    Eligibility eligibility;
    MonitoringSchedule schedule;
    TriageCategory current_category = TriageCategory::Green;
    bool overdue = false;
    LifecycleStatus status = LifecycleStatus::Enrolled;
};

}  // namespace homewatch
