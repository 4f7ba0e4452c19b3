#include "homewatch/centre_state.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace homewatch {

using nlohmann::json;

json to_json(const CentreStats& s) {
    json categories = json::object();
    for (const TriageCategory c : kAllCategories) {
        categories[std::string(to_string(c))] = s.categories[index_of(c)];
    }
    return json{{"categories", std::move(categories)},
                {"overdue", s.overdue},
                {"open_actions", s.open_actions},
                {"monitoring", s.monitoring},
                {"enrolled_total", s.enrolled_total},
                {"hospitalized", s.hospitalized},
                {"discharged", s.discharged}};
}

json to_json(const DashboardRow& row) {
    return json{{"patient_id", row.patient_id},
                {"category", row.category},
                {"overdue", row.overdue},
                {"status", row.status},
                {"last_report_at", row.last_report_at},
                {"key_symptoms", row.key_symptoms},
                {"open_actions", row.open_actions},
                {"reports_per_day", row.reports_per_day}};
}

bool CentreState::feed_relevant(const Event& event) {
    return event.as<Enrolled>() || event.as<FlagChanged>() || event.as<OverdueDetected>() ||
           event.as<ActionCreated>() || event.as<ActionAcknowledged>() ||
           event.as<ActionResolved>() || event.as<StatusChanged>() ||
           event.as<ScheduleChanged>();
}

const PatientRecord* CentreState::find(const std::string& patient_id) const {
    auto it = patients_.find(patient_id);
    return it == patients_.end() ? nullptr : &it->second;
}

const std::string* CentreState::patient_by_external_ref(const std::string& ref) const {
    auto it = by_external_ref_.find(ref);
    return it == by_external_ref_.end() ? nullptr : &it->second;
}

const ActionItem* CentreState::find_action(const std::string& action_id) const {
    auto it = actions_.find(action_id);
    return it == actions_.end() ? nullptr : &it->second;
}

void CentreState::unindex_patient(const std::string& patient_id) {
    auto it = indexed_.find(patient_id);
    if (it == indexed_.end()) return;
    dispatch_due_.erase({it->second.first, patient_id});
    if (it->second.second) overdue_due_.erase({*it->second.second, patient_id});
    indexed_.erase(it);
}

void CentreState::index_patient(const std::string& patient_id) {
    unindex_patient(patient_id);
    const PatientRecord& r = patients_.at(patient_id);
    if (r.patient.status != LifecycleStatus::Monitoring) return;
    std::optional<Timestamp> deadline;
    for (const auto& d : r.pending) {
        if (d.overdue_flagged) continue;
        const Timestamp due = d.dispatched_at + r.patient.schedule.overdue_after;
        if (!deadline || due < *deadline) deadline = due;
    }
    dispatch_due_.insert({r.patient.schedule.next_dispatch_at, patient_id});
    if (deadline) overdue_due_.insert({*deadline, patient_id});
    indexed_[patient_id] = {r.patient.schedule.next_dispatch_at, deadline};
}

std::optional<std::string> CentreState::decision_text(const Event& event) const {
    if (const auto* p = event.as<ScheduleChanged>()) {
        return fmt::format("questionnaire frequency set to {}/day", p->reports_per_day);
    }
    if (const auto* p = event.as<ActionCreated>()) {
        return fmt::format("{} action opened ({})", to_string(p->kind), to_string(p->trigger));
    }
    if (const auto* p = event.as<ActionAcknowledged>()) {
        return fmt::format("action {} acknowledged", p->action_id);
    }
    if (const auto* p = event.as<ActionResolved>()) {
        return fmt::format("action {} resolved as {}", p->action_id, to_string(p->kind));
    }
    if (const auto* p = event.as<StatusChanged>()) {
        return fmt::format("status changed to {}", to_string(p->status));
    }
    return std::nullopt;
}

void CentreState::apply(const Event& event) {
    last_seq_ = event.seq;
    const std::optional<std::string> decision = decision_text(event);
    PatientRecord* record = nullptr;
    if (!event.patient_id.empty()) {
        if (auto it = patients_.find(event.patient_id); it != patients_.end()) {
            record = &it->second;
        }
    }
    bool reindex = false;

    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Enrolled>) {
                PatientRecord r;
                r.patient.patient_id = event.patient_id;
                r.patient.external_ref = p.external_ref;
                r.patient.phone = p.phone;
                r.patient.gp_contact = p.gp_contact;
                r.patient.enrolled_at = event.at;
                r.patient.eligibility = p.eligibility;
                r.patient.schedule.reports_per_day = p.reports_per_day;
                r.patient.schedule.baseline_per_day = p.reports_per_day;
                r.patient.schedule.escalated = false;
                r.patient.schedule.next_dispatch_at = p.next_dispatch_at;
                r.patient.current_category = TriageCategory::Green;
                r.patient.status = LifecycleStatus::Monitoring;
                by_external_ref_[p.external_ref] = event.patient_id;
                record = &(patients_[event.patient_id] = std::move(r));
                reindex = true;
            } else if constexpr (std::is_same_v<T, Dispatched>) {
                ++counters_.dispatches;
                ++counters_.messages;
                ++totals_.dispatches;
                if (record) {
                    record->pending.push_back({p.dispatch_id, event.at, false});
                    record->patient.schedule.next_dispatch_at = p.next_dispatch_at;
                    reindex = true;
                }
            } else if constexpr (std::is_same_v<T, ReportReceived>) {
                ++counters_.reports;
                ++totals_.reports_received;
                if (record) {
                    ++record->reports;
                    record->last_report = SymptomReport{event.patient_id, event.at, p.answers};
                    record->last_report_id = p.report_id;
                    record->has_report = true;
                    record->pending.clear();
                    record->patient.overdue = false;
                    reindex = true;
                }
            } else if constexpr (std::is_same_v<T, FlagChanged>) {
                ++totals_.reports_by_category[index_of(p.to)];
                if (record) {
                    record->patient.current_category = p.to;
                    if (record->patient.schedule.escalated) {
                        record->categories_since_escalation.push_back(p.to);
                    }
                }
            } else if constexpr (std::is_same_v<T, ScheduleChanged>) {
                if (record) {
                    auto& s = record->patient.schedule;
                    if (s.escalated != p.escalated) {
                        record->categories_since_escalation.clear();
                        ++(p.escalated ? totals_.escalations : totals_.deescalations);
                    }
                    s.reports_per_day = p.reports_per_day;
                    s.escalated = p.escalated;
                    s.next_dispatch_at = p.next_dispatch_at;
                    reindex = true;
                }
            } else if constexpr (std::is_same_v<T, OverdueDetected>) {
                ++totals_.overdue_detections;
                if (record) {
                    record->patient.overdue = true;
                    std::erase_if(record->pending, [&](const PendingDispatch& d) {
                        return d.dispatch_id == p.dispatch_id;
                    });
                    reindex = true;
                }
            } else if constexpr (std::is_same_v<T, ActionCreated>) {
                ++counters_.actions;
                ++totals_.actions_by_trigger[static_cast<std::size_t>(p.trigger)];
                if (p.trigger == ActionTrigger::PatientInitiated) ++counters_.contacts;
                ActionItem a;
                a.action_id = p.action_id;
                a.patient_id = event.patient_id;
                a.created_at = event.at;
                a.trigger = p.trigger;
                a.kind = p.kind;
                a.status = ActionStatus::Open;
                actions_[p.action_id] = std::move(a);
                if (record) ++record->open_actions;
            } else if constexpr (std::is_same_v<T, ActionAcknowledged>) {
                if (auto it = actions_.find(p.action_id); it != actions_.end()) {
                    it->second.status = ActionStatus::Acknowledged;
                }
            } else if constexpr (std::is_same_v<T, ActionResolved>) {
                if (auto it = actions_.find(p.action_id); it != actions_.end()) {
                    it->second.status = ActionStatus::Resolved;
                    it->second.kind = p.kind;
                    it->second.resolution_note = p.note;
                    if (record && record->open_actions > 0) --record->open_actions;
                }
            } else if constexpr (std::is_same_v<T, StatusChanged>) {
                if (record) {
                    record->patient.status = p.status;
                    if (p.status != LifecycleStatus::Monitoring) {
                        record->pending.clear();
                        record->patient.overdue = false;
                    }
                    reindex = true;
                }
            } else if constexpr (std::is_same_v<T, MessageSent>) {
                ++counters_.messages;
                if (p.purpose == MessagePurpose::Reassurance) ++totals_.reassurance_messages;
                if (p.purpose == MessagePurpose::GpEnrollment) {
                    ++totals_.gp_enrollment_notices;
                    if (record) record->gp_enrollment_notified = true;
                }
            } else if constexpr (std::is_same_v<T, GpSummarySent>) {
                ++counters_.messages;
                ++totals_.gp_summaries;
                if (record) record->decisions_since_summary.clear();
            } else if constexpr (std::is_same_v<T, CommandFailed>) {
                ++totals_.failed_commands;
            }
        },
        event.payload);

    if (record) {
        if (decision) record->decisions_since_summary.push_back(*decision);
        record->timeline.push_back(event.seq);
    }
    if (feed_relevant(event)) feed_.push_back(event.seq);
    if (reindex && record) index_patient(record->patient.patient_id);
}

CentreStats CentreState::stats() const {
    CentreStats s;
    s.enrolled_total = patients_.size();
    for (const auto& [id, r] : patients_) {
        switch (r.patient.status) {
            case LifecycleStatus::Enrolled:
                break;
            case LifecycleStatus::Monitoring:
                ++s.monitoring;
                ++s.categories[index_of(r.patient.current_category)];
                if (r.patient.overdue) ++s.overdue;
                break;
            case LifecycleStatus::Hospitalized:
                ++s.hospitalized;
                break;
            case LifecycleStatus::Discharged:
                ++s.discharged;
                break;
        }
    }
    for (const auto& [id, a] : actions_) {
        if (a.status != ActionStatus::Resolved) ++s.open_actions;
    }
    return s;
}

namespace {

bool contains_case_insensitive(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) ==
                                                      std::tolower(static_cast<unsigned char>(b)); });
    return it != haystack.end();
}

DashboardRow make_row(const PatientRecord& r) {
    DashboardRow row;
    row.patient_id = r.patient.patient_id;
    row.category = r.patient.current_category;
    row.overdue = r.patient.overdue;
    row.status = r.patient.status;
    if (r.last_report) {
        row.last_report_at = r.last_report->received_at;
        row.key_symptoms = r.last_report->answers;
    }
    row.open_actions = r.open_actions;
    row.reports_per_day = r.patient.schedule.reports_per_day;
    return row;
}

}  // namespace

PatientPage CentreState::list_patients(const PatientQuery& q) const {
    std::vector<const PatientRecord*> matches;
    for (const auto& [id, r] : patients_) {
        if (q.category && r.patient.current_category != *q.category) continue;
        if (q.overdue && r.patient.overdue != *q.overdue) continue;
        if (q.needs_action && (r.open_actions > 0) != *q.needs_action) continue;
        if (q.status && r.patient.status != *q.status) continue;
        if (!contains_case_insensitive(r.patient.patient_id, q.search) &&
            !contains_case_insensitive(r.patient.external_ref, q.search)) {
            continue;
        }
        matches.push_back(&r);
    }
    // Severity descending, then oldest last report first (never reported sorts first).
    std::sort(matches.begin(), matches.end(), [](const PatientRecord* a, const PatientRecord* b) {
        if (a->patient.current_category != b->patient.current_category) {
            return a->patient.current_category > b->patient.current_category;
        }
        const auto ta = a->last_report ? std::optional(a->last_report->received_at) : std::nullopt;
        const auto tb = b->last_report ? std::optional(b->last_report->received_at) : std::nullopt;
        if (ta != tb) return ta < tb;
        return a->patient.patient_id < b->patient.patient_id;
    });

    PatientPage page;
    page.total = matches.size();
    const std::size_t end = std::min(matches.size(), q.offset + q.limit);
    for (std::size_t i = q.offset; i < end; ++i) page.rows.push_back(make_row(*matches[i]));
    if (end < matches.size()) page.next_offset = end;
    return page;
}

std::vector<PatientScheduleState> CentreState::due_for_tick(Timestamp now) const {
    std::set<std::string> ids;
    for (auto it = dispatch_due_.begin(); it != dispatch_due_.end() && it->first <= now; ++it) {
        ids.insert(it->second);
    }
    for (auto it = overdue_due_.begin(); it != overdue_due_.end() && it->first < now; ++it) {
        ids.insert(it->second);
    }
    std::vector<PatientScheduleState> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const PatientRecord& r = patients_.at(id);
        out.push_back({id, r.patient.status, r.patient.schedule, r.pending});
    }
    return out;
}

json CentreState::to_json() const {
    json patients = json::object();
    for (const auto& [id, r] : patients_) patients[id] = r;
    json actions = json::object();
    for (const auto& [id, a] : actions_) actions[id] = a;
    return json{{"last_seq", last_seq_}, {"patients", std::move(patients)},
                {"actions", std::move(actions)},  {"counters", counters_},
                {"totals", totals_},              {"feed", feed_}};
}

CentreState CentreState::from_json(const json& j) {
    CentreState s;
    s.last_seq_ = j.at("last_seq").get<std::uint64_t>();
    for (const auto& [id, r] : j.at("patients").items()) {
        s.patients_[id] = r.get<PatientRecord>();
        s.by_external_ref_[s.patients_[id].patient.external_ref] = id;
    }
    for (const auto& [id, a] : j.at("actions").items()) s.actions_[id] = a.get<ActionItem>();
    s.counters_ = j.at("counters").get<CentreCounters>();
    s.totals_ = j.at("totals").get<CentreTotals>();
    s.feed_ = j.at("feed").get<std::vector<std::uint64_t>>();
    for (const auto& [id, r] : s.patients_) s.index_patient(id);
    return s;
}

}  // namespace homewatch
