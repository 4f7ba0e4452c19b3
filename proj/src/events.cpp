#include "homewatch/events.hpp"

#include <stdexcept>

namespace homewatch {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Enrolled, external_ref, phone, gp_contact, eligibility,
                                   reports_per_day, next_dispatch_at)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Dispatched, dispatch_id, message_id, token_hash, expires_at,
                                   next_dispatch_at)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReportReceived, report_id, dispatch_id, token_hash, answers)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FlagChanged, report_id, from, to, ruleset_version, fired_rules)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScheduleChanged, reports_per_day, escalated, next_dispatch_at,
                                   reason)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(OverdueDetected, dispatch_id, dispatched_at)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ActionCreated, action_id, trigger, kind, source_id)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ActionAcknowledged, action_id)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ActionResolved, action_id, kind, note)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StatusChanged, status, reason)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MessageSent, message_id, channel, purpose)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GpSummarySent, report_id, message_id, category,
                                   category_change, fired_rules, actions, delivered)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CommandFailed, operation, code, detail)

namespace {

template <std::size_t I = 0>
EventPayload payload_from(std::size_t index, const json& j) {
    if constexpr (I < std::variant_size_v<EventPayload>) {
        if (index == I) {
            return EventPayload{std::in_place_index<I>,
                                j.get<std::variant_alternative_t<I, EventPayload>>()};
        }
        return payload_from<I + 1>(index, j);
    } else {
        throw std::invalid_argument("unknown event kind");
    }
}

}  // namespace

json event_to_json(const Event& e) {
    json payload;
    std::visit([&](const auto& p) { payload = p; }, e.payload);
    return json{{"seq", e.seq},
                {"patient_id", e.patient_id},
                {"at", format_iso8601(e.at)},
                {"kind", e.kind()},
                {"payload", std::move(payload)}};
}

Event event_from_json(const json& j) {
    Event e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.patient_id = j.at("patient_id").get<std::string>();
    e.at = parse_iso8601(j.at("at").get<std::string>());
    const auto kind = j.at("kind").get<std::string>();
    std::size_t index = kEventKinds.size();
    for (std::size_t i = 0; i < kEventKinds.size(); ++i) {
        if (kEventKinds[i] == kind) index = i;
    }
    e.payload = payload_from(index, j.at("payload"));
    return e;
}

json pseudonymized_event_json(const Event& e) {
    json j = event_to_json(e);
    auto& payload = j["payload"];
    for (const char* field : {"phone", "gp_contact", "external_ref", "token_hash"}) {
        payload.erase(field);
    }
    return j;
}

}  // namespace homewatch
