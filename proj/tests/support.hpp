#pragma once

#include "homewatch/config.hpp"
#include "homewatch/domain.hpp"
#include "homewatch/event_store.hpp"
#include "homewatch/http_api.hpp"
#include "homewatch/notifier.hpp"
#include "homewatch/service.hpp"
#include "homewatch/simulator.hpp"
#include "homewatch/triage.hpp"
#include "oracle.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <memory>
#include <string>

namespace testing_support {

using namespace homewatch;

inline std::string config_file(const std::string& name) {
    return std::string(HOMEWATCH_SOURCE_DIR) + "/config/" + name;
}

inline const QuestionnaireDefinition& questionnaire() {
    static const QuestionnaireDefinition q = load_questionnaire_file(config_file("questionnaire.json"));
    return q;
}

inline const RuleSet& default_rules() {
    static const RuleSet rs = load_ruleset_file(config_file("ruleset-default-v1.json"), questionnaire());
    return rs;
}

inline nlohmann::json answers(double temp, int dyspnea = 0, int pain = 0, int distress = 0,
                              bool quarantine_problem = false, bool household_change = false) {
    return {{"temperature_c", temp},
            {"dyspnea", dyspnea},
            {"pain", pain},
            {"distress", distress},
            {"quarantine_problem", quarantine_problem},
            {"household_change", household_change}};
}

inline SymptomReport report(const nlohmann::json& a, Timestamp at = make_utc(2020, 3, 16, 9)) {
    return validate_report(questionnaire(), a, at, "p");
}

inline oracle::Values values_of(const nlohmann::json& a) {
    oracle::Values v;
    for (const auto& [k, x] : a.items()) v[k] = x.is_boolean() ? (x.get<bool>() ? 1.0 : 0.0) : x.get<double>();
    return v;
}

inline Eligibility all_eligible() { return {true, true, true, true}; }

inline EnrollmentForm form(int i, std::optional<int> per_day = std::nullopt) {
    EnrollmentForm f;
    f.external_ref = fmt::format("ext-{:04}", i);
    f.phone = fmt::format("+4477009{:05}", i);
    f.gp_contact = fmt::format("gp-{:04}", i);
    f.eligibility = all_eligible();
    f.reports_per_day = per_day;
    return f;
}

/// A service over an in-memory log and gateway with deterministic ids.
struct Harness {
    MemoryEventLog log;
    MemoryGateway gateway;
    /// Set when the harness serves HTTP; questionnaire links then reach /admin/tick responses.
    std::unique_ptr<CaptureGateway> capture;
    Notifier notifier;
    std::unique_ptr<Service> service;
    int next_patient = 0;
    int next_token = 0;

    explicit Harness(ServiceOptions options = {}, bool capture_links = false)
        : capture(capture_links ? std::make_unique<CaptureGateway>(gateway) : nullptr),
          notifier(capture ? static_cast<MessageGateway&>(*capture) : gateway, RetryPolicy{3, {}},
                   [](Duration) {}) {
        options.patient_id_generator = [this] { return fmt::format("p-{:04}", ++next_patient); };
        options.token_generator = [this] { return fmt::format("tok{:06}", ++next_token); };
        service = std::make_unique<Service>(questionnaire(), default_rules(), log, notifier, options);
    }

    Service& svc() { return *service; }

    /// Tokens of questionnaire SMS delivered since the last call, keyed by patient.
    std::vector<std::pair<std::string, std::string>> drain_links() {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& m : gateway.drain()) {
            if (m.purpose == MessagePurpose::Questionnaire) {
                out.emplace_back(m.related_patient_id, token_from_sms(m.body));
            }
        }
        return out;
    }

    /// Ticks at `now` and returns the single link sent to `patient_id`, or "".
    std::string dispatch(const std::string& patient_id, Timestamp now) {
        service->tick(now);
        service->deliver_pending();
        std::string token;
        for (const auto& [pid, t] : drain_links()) {
            if (pid == patient_id) token = t;
        }
        return token;
    }
};

}  // namespace testing_support
