#include "homewatch/service.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

namespace homewatch {

namespace {

Event make_event(const std::string& patient_id, Timestamp at, EventPayload payload) {
    Event e;
    e.patient_id = patient_id;
    e.at = at;
    e.payload = std::move(payload);
    return e;
}

std::string numbered(char prefix, std::uint64_t n) { return fmt::format("{}-{}", prefix, n); }

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string default_patient_id() { return "pt_" + random_url_token(9); }

}  // namespace

Service::Service(QuestionnaireDefinition questionnaire, RuleSet rules, EventLog& log,
                 Notifier& notifier, ServiceOptions options)
    : questionnaire_(std::move(questionnaire)),
      rules_(std::move(rules)),
      log_(log),
      notifier_(notifier),
      options_(std::move(options)),
      tokens_(options_.token_generator ? options_.token_generator
                                       : TokenStore::Generator([] { return random_url_token(); })) {
    if (!options_.patient_id_generator) options_.patient_id_generator = default_patient_id;
    if (options_.default_reports_per_day < 1) {
        throw ConfigError("default_reports_per_day must be at least 1");
    }

    // A link of maximal length has to fit in one message, otherwise every dispatch would fail.
    Patient probe;
    const std::string longest = questionnaire_link(options_.base_url, std::string(32, 'x'));
    try {
        (void)render_questionnaire_sms(probe, longest, "m-probe", Timestamp{});
    } catch (const NotifierError& e) {
        throw ConfigError(fmt::format("base_url too long for an SMS link: {}", e.what()));
    }

    std::uint64_t from = 0;
    if (auto snap = log_.load_snapshot()) {
        try {
            CentreState restored = CentreState::from_json(snap->state.at("centre"));
            tokens_.load_json(snap->state.at("tokens"));
            state_ = std::move(restored);
            from = snap->seq;
            last_snapshot_seq_ = snap->seq;
            for (const auto& [pid, rec] : state_.patients()) {
                if (rec.gp_enrollment_notified) notifier_.mark_enrollment_notified(pid);
            }
        } catch (const std::exception&) {
            state_ = CentreState{};
            tokens_.load_json(nlohmann::json::object());
            from = 0;
        }
    }
    log_.read(from, [&](const Event& e) { apply_event(e, true); });
}

Service::~Service() { stop_delivery_worker(); }

void Service::fault(std::string_view stage) const {
    if (options_.fault_hook) options_.fault_hook(stage);
}

void Service::apply_event(const Event& e, bool replaying) {
    if (const auto* d = e.as<Dispatched>()) {
        if (replaying) tokens_.restore(d->token_hash, e.patient_id, d->dispatch_id, e.at, false);
    } else if (const auto* r = e.as<ReportReceived>()) {
        tokens_.mark_consumed(r->token_hash);
    } else if (const auto* m = e.as<MessageSent>()) {
        if (m->purpose == MessagePurpose::GpEnrollment) notifier_.mark_enrollment_notified(e.patient_id);
    } else if (const auto* g = e.as<GpSummarySent>()) {
        notifier_.mark_summary_emitted(g->report_id);
    }
    state_.apply(e);
}

void Service::commit(std::vector<Event>& events, std::vector<OutboundMessage> outbound) {
    try {
        if (storage_degraded_ && !log_.recover()) throw StorageError("event storage unavailable");
        storage_degraded_ = false;
        log_.append(events);
    } catch (const StorageError& e) {
        try {
            storage_degraded_ = !log_.recover();
        } catch (const std::exception&) {
            storage_degraded_ = true;
        }
        throw ServiceError(ErrorCode::StorageFailure, e.what());
    }
    {
        std::unique_lock lock(state_mutex_);
        for (const auto& e : events) apply_event(e, false);
    }
    {
        std::lock_guard lock(feed_mutex_);
    }
    feed_cv_.notify_all();
    maybe_snapshot(log_.last_seq());

    if (!outbound.empty()) {
        {
            std::lock_guard lock(outbox_mutex_);
            for (auto& m : outbound) outbox_.push_back(std::move(m));
        }
        outbox_cv_.notify_one();
    }
}

void Service::maybe_snapshot(std::uint64_t after) {
    const std::uint64_t n = options_.snapshot_interval;
    if (n == 0) return;
    const std::uint64_t gap = std::max(n, last_snapshot_seq_ / 4);
    if (after - last_snapshot_seq_ < gap) return;
    Snapshot snap;
    snap.seq = after;
    {
        std::shared_lock lock(state_mutex_);
        snap.state["centre"] = state_.to_json();
        snap.state["tokens"] = tokens_.to_json();
    }
    try {
        log_.save_snapshot(snap);
        last_snapshot_seq_ = after;
    } catch (const std::exception&) {
    }
}

void Service::record_failure(const std::string& patient_id, std::string_view operation,
                             std::string_view code, const std::string& detail, Timestamp now) {
    std::vector<Event> events{make_event(
        patient_id, now, CommandFailed{std::string(operation), std::string(code), detail})};
    try {
        commit(events, {});
    } catch (const ServiceError&) {
    }
}

void Service::after_command() {
    if (options_.synchronous_delivery) deliver_pending();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

std::string Service::enroll(const EnrollmentForm& form, Timestamp now) {
    std::string patient_id;
    {
        std::lock_guard cmd(command_mutex_);
        auto refuse = [&](ErrorCode code, std::string message) {
            record_failure("", "enroll", to_string(code), message, now);
            throw ServiceError(code, std::move(message));
        };

        if (blank(form.external_ref)) refuse(ErrorCode::InvalidRequest, "external_ref is required");
        if (blank(form.phone)) refuse(ErrorCode::InvalidRequest, "phone is required");
        if (form.gp_contact && blank(*form.gp_contact)) {
            refuse(ErrorCode::InvalidRequest, "gp_contact must not be empty when given");
        }
        const int per_day = form.reports_per_day.value_or(options_.default_reports_per_day);
        if (per_day != 1 && per_day != 2) {
            refuse(ErrorCode::InvalidRequest, "reports_per_day must be 1 or 2");
        }
        if (auto unmet = first_unmet_criterion(form.eligibility)) {
            refuse(ErrorCode::NotEligible, fmt::format("eligibility criterion not met: {}", *unmet));
        }
        if (state_.patient_by_external_ref(form.external_ref)) {
            refuse(ErrorCode::DuplicatePatient,
                   fmt::format("external_ref {} is already enrolled", form.external_ref));
        }

        do {
            patient_id = options_.patient_id_generator();
        } while (state_.find(patient_id));

        Patient patient;
        patient.patient_id = patient_id;
        patient.external_ref = form.external_ref;
        patient.phone = form.phone;
        patient.gp_contact = form.gp_contact;
        patient.enrolled_at = now;
        patient.eligibility = form.eligibility;
        patient.schedule = baseline_schedule(per_day, options_.scheduler);
        patient.schedule.next_dispatch_at = next_dispatch(patient.schedule, now, options_.scheduler);
        patient.status = LifecycleStatus::Monitoring;

        std::vector<Event> events;
        std::vector<OutboundMessage> outbound;
        events.push_back(make_event(
            patient_id, now,
            Enrolled{form.external_ref, form.phone, form.gp_contact, form.eligibility, per_day,
                     patient.schedule.next_dispatch_at}));

        const auto& counters = state_.counters();
        if (patient.gp_contact) {
            const std::string message_id = numbered('m', counters.messages + 1);
            outbound.push_back(render_gp_enrollment(patient, message_id, now));
            events.push_back(make_event(
                patient_id, now,
                MessageSent{message_id, Channel::GPChannel, MessagePurpose::GpEnrollment}));
        } else {
            events.push_back(make_event(
                patient_id, now,
                ActionCreated{numbered('a', counters.actions + 1), ActionTrigger::MissingGPContact,
                              initial_kind(ActionTrigger::MissingGPContact), "enrollment"}));
        }
        commit(events, std::move(outbound));
    }
    after_command();
    return patient_id;
}

SubmitResult Service::submit_report(std::string_view token, const nlohmann::json& answers,
                                    Timestamp now) {
    SubmitResult result;
    {
        std::lock_guard cmd(command_mutex_);

        Redemption redemption;
        try {
            redemption = tokens_.peek(token, now);
        } catch (const TokenError& e) {
            record_failure("", "submit_report", to_string(e.kind()), e.what(), now);
            throw;
        }
        const std::string& pid = redemption.patient_id;
        const PatientRecord* record = state_.find(pid);
        if (!record) {
            record_failure(pid, "submit_report", "internal", "token refers to unknown patient", now);
            throw ServiceError(ErrorCode::Internal, "token refers to an unknown patient");
        }
        if (record->patient.status != LifecycleStatus::Monitoring) {
            record_failure(pid, "submit_report", "patient_not_monitoring",
                           std::string(to_string(record->patient.status)), now);
            throw TokenError(TokenErrorKind::PatientNotMonitoring);
        }

        SymptomReport report;
        try {
            report = validate_report(questionnaire_, answers, now, pid);
        } catch (const ValidationError& e) {
            record_failure(pid, "submit_report", to_string(e.kind()), e.what(), now);
            throw;
        }

        const SymptomReport* previous = record->last_report ? &*record->last_report : nullptr;
        try {
            const TriageResult triaged = triage(rules_, report, previous);
            fault("after_classification");

            const Patient& patient = record->patient;
            const auto& counters = state_.counters();
            std::uint64_t next_message = counters.messages;
            const std::string report_id = numbered('r', counters.reports + 1);

            std::vector<Event> events;
            std::vector<OutboundMessage> outbound;
            std::vector<std::string> decisions = record->decisions_since_summary;
            auto push = [&](EventPayload payload) {
                events.push_back(make_event(pid, now, std::move(payload)));
                if (auto text = state_.decision_text(events.back())) decisions.push_back(*text);
            };

            push(ReportReceived{report_id, redemption.dispatch_id, redemption.token_hash,
                                report.answers});
            std::optional<TriageCategory> from;
            if (record->has_report) from = patient.current_category;
            push(FlagChanged{report_id, from, triaged.category, rules_.version(),
                             triaged.fired_rules});

            const MonitoringSchedule& current = patient.schedule;
            if (needs_clinician(triaged.category)) {
                MonitoringSchedule next = escalate(current, triaged.category, options_.scheduler);
                if (next.escalated != current.escalated) {
                    next.next_dispatch_at =
                        std::min(current.next_dispatch_at,
                                 homewatch::next_dispatch(next, now, options_.scheduler));
                    push(ScheduleChanged{next.reports_per_day, true, next.next_dispatch_at,
                                         "escalation"});
                }
                const ActionTrigger trigger = triaged.category == TriageCategory::Red
                                                  ? ActionTrigger::RedFlag
                                                  : ActionTrigger::OrangeFlag;
                result.action_id = numbered('a', counters.actions + 1);
                push(ActionCreated{*result.action_id, trigger, initial_kind(trigger), report_id});
            } else {
                if (current.escalated) {
                    std::vector<TriageCategory> recent = record->categories_since_escalation;
                    recent.push_back(triaged.category);
                    MonitoringSchedule next = maybe_deescalate(current, recent, options_.scheduler);
                    if (!next.escalated) {
                        next.next_dispatch_at =
                            homewatch::next_dispatch(next, now, options_.scheduler);
                        push(ScheduleChanged{next.reports_per_day, false, next.next_dispatch_at,
                                             "deescalation"});
                    }
                }
                if (auto body = auto_reassure(triaged.category)) {
                    const std::string message_id = numbered('m', ++next_message);
                    outbound.push_back(render_reassurance(patient, *body, message_id, now));
                    result.message_to_patient = *body;
                    push(MessageSent{message_id, Channel::SMS, MessagePurpose::Reassurance});
                }
            }

            GPSummary summary;
            summary.patient_id = pid;
            summary.report_id = report_id;
            summary.report_at = now;
            summary.category = triaged.category;
            summary.category_change = from.has_value() && *from != triaged.category;
            summary.previous_category = from;
            summary.fired_rules = triaged.fired_rules;
            summary.actions = std::move(decisions);
            OutboundMessage gp_message =
                render_gp_summary_message(patient, summary, numbered('m', ++next_message), now);
            const bool delivered = gp_message.delivery_state != DeliveryState::Failed;
            events.push_back(make_event(
                pid, now,
                GpSummarySent{report_id, gp_message.message_id, summary.category,
                              summary.category_change, summary.fired_rules, summary.actions,
                              delivered}));
            fault("before_commit");

            if (delivered) outbound.push_back(std::move(gp_message));
            commit(events, std::move(outbound));
            if (!delivered) notifier_.record_dead_letter(gp_message);

            result.report_id = report_id;
            result.category = triaged.category;
            result.fired_rules = triaged.fired_rules;
        } catch (const ServiceError& e) {
            if (e.code() != ErrorCode::StorageFailure) {
                record_failure(pid, "submit_report", to_string(e.code()), e.what(), now);
            }
            throw;
        } catch (const std::exception& e) {
            record_failure(pid, "submit_report", "internal", e.what(), now);
            throw ServiceError(ErrorCode::Internal, e.what());
        }
    }
    after_command();
    return result;
}

ActionItem Service::act(const std::string& action_id, const ActionTransition& transition,
                        Timestamp now) {
    ActionItem updated;
    {
        std::lock_guard cmd(command_mutex_);
        const ActionItem* action = state_.find_action(action_id);
        if (!action) throw ServiceError(ErrorCode::NotFound, fmt::format("no action {}", action_id));
        const std::string pid = action->patient_id;
        auto refuse = [&](std::string message) {
            record_failure(pid, "act", "illegal_transition", message, now);
            throw ServiceError(ErrorCode::IllegalTransition, std::move(message));
        };

        std::vector<Event> events;
        if (transition.type == ActionTransition::Type::Acknowledge) {
            if (action->status != ActionStatus::Open) {
                refuse(fmt::format("cannot acknowledge action in state {}", to_string(action->status)));
            }
            events.push_back(make_event(pid, now, ActionAcknowledged{action_id}));
        } else {
            if (action->status != ActionStatus::Acknowledged) {
                refuse(fmt::format("cannot resolve action in state {}", to_string(action->status)));
            }
            if (blank(transition.note)) refuse("a resolution note is required");
            events.push_back(
                make_event(pid, now, ActionResolved{action_id, transition.kind, transition.note}));

            const PatientRecord* record = state_.find(pid);
            if (record && record->patient.status == LifecycleStatus::Monitoring) {
                const MonitoringSchedule& current = record->patient.schedule;
                if (transition.kind == ActionKind::IntensifyMonitoring && !current.escalated) {
                    MonitoringSchedule next =
                        escalate(current, TriageCategory::Orange, options_.scheduler);
                    next.next_dispatch_at = std::min(
                        current.next_dispatch_at,
                        homewatch::next_dispatch(next, now, options_.scheduler));
                    events.push_back(make_event(
                        pid, now,
                        ScheduleChanged{next.reports_per_day, true, next.next_dispatch_at,
                                        "intensify"}));
                } else if (transition.kind == ActionKind::Hospitalize) {
                    events.push_back(make_event(
                        pid, now,
                        StatusChanged{LifecycleStatus::Hospitalized,
                                      fmt::format("action {}", action_id)}));
                }
            }
        }
        commit(events, {});
        std::shared_lock lock(state_mutex_);
        updated = *state_.find_action(action_id);
    }
    after_command();
    return updated;
}

std::string Service::contact(const std::string& patient_id, Timestamp now) {
    std::string action_id;
    {
        std::lock_guard cmd(command_mutex_);
        const PatientRecord* record = state_.find(patient_id);
        if (!record) throw ServiceError(ErrorCode::NotFound, fmt::format("no patient {}", patient_id));
        if (record->patient.status != LifecycleStatus::Monitoring) {
            record_failure(patient_id, "contact", "patient_not_monitoring",
                           std::string(to_string(record->patient.status)), now);
            throw ServiceError(ErrorCode::PatientNotMonitoring, "patient is not being monitored");
        }
        const auto& counters = state_.counters();
        action_id = numbered('a', counters.actions + 1);
        std::vector<Event> events{make_event(
            patient_id, now,
            ActionCreated{action_id, ActionTrigger::PatientInitiated,
                          initial_kind(ActionTrigger::PatientInitiated),
                          numbered('c', counters.contacts + 1)})};
        commit(events, {});
    }
    after_command();
    return action_id;
}

void Service::discharge(const std::string& patient_id, Timestamp now) {
    {
        std::lock_guard cmd(command_mutex_);
        const PatientRecord* record = state_.find(patient_id);
        if (!record) throw ServiceError(ErrorCode::NotFound, fmt::format("no patient {}", patient_id));
        if (record->patient.status == LifecycleStatus::Discharged) {
            record_failure(patient_id, "discharge", "illegal_transition", "already discharged", now);
            throw ServiceError(ErrorCode::IllegalTransition, "patient is already discharged");
        }
        std::vector<Event> events{make_event(
            patient_id, now, StatusChanged{LifecycleStatus::Discharged, "discharged"})};
        commit(events, {});
    }
    after_command();
}

TickResult Service::tick(Timestamp now) {
    TickResult result;
    {
        std::lock_guard cmd(command_mutex_);
        const std::vector<PatientScheduleState> due = state_.due_for_tick(now);
        const TickOutput out = homewatch::tick(now, due);

        std::map<std::string, std::vector<const OverdueDetection*>> overdue_by_patient;
        for (const auto& o : out.overdue) overdue_by_patient[o.patient_id].push_back(&o);
        std::map<std::string, const DispatchCommand*> dispatch_by_patient;
        for (const auto& d : out.dispatches) dispatch_by_patient[d.patient_id] = &d;

        for (const auto& candidate : due) {
            const std::string& pid = candidate.patient_id;
            auto overdue_it = overdue_by_patient.find(pid);
            auto dispatch_it = dispatch_by_patient.find(pid);
            if (overdue_it == overdue_by_patient.end() && dispatch_it == dispatch_by_patient.end()) {
                continue;
            }
            try {
                const PatientRecord* record = state_.find(pid);
                const auto& counters = state_.counters();
                std::uint64_t next_action = counters.actions;
                std::vector<Event> events;
                std::vector<OutboundMessage> outbound;
                std::size_t flagged = 0;

                if (overdue_it != overdue_by_patient.end()) {
                    for (const OverdueDetection* o : overdue_it->second) {
                        events.push_back(make_event(pid, now,
                                                    OverdueDetected{o->dispatch_id, o->dispatched_at}));
                        events.push_back(make_event(
                            pid, now,
                            ActionCreated{numbered('a', ++next_action), ActionTrigger::NonResponder,
                                          initial_kind(ActionTrigger::NonResponder),
                                          o->dispatch_id}));
                        ++flagged;
                    }
                }
                if (dispatch_it != dispatch_by_patient.end()) {
                    const std::string dispatch_id = numbered('d', counters.dispatches + 1);
                    const std::string message_id = numbered('m', counters.messages + 1);
                    AccessToken token =
                        tokens_.issue(pid, dispatch_id, now, record->patient.status);
                    outbound.push_back(render_questionnaire_sms(
                        record->patient, questionnaire_link(options_.base_url, token.token),
                        message_id, now));
                    const Timestamp next =
                        homewatch::next_dispatch(record->patient.schedule, now, options_.scheduler);
                    events.push_back(make_event(
                        pid, now,
                        Dispatched{dispatch_id, message_id, hash_token(token.token),
                                   token.expires_at, next}));
                }
                commit(events, std::move(outbound));
                result.overdue += flagged;
                if (dispatch_it != dispatch_by_patient.end()) ++result.dispatches;
            } catch (const ServiceError& e) {
                if (e.code() == ErrorCode::StorageFailure) throw;
                record_failure(pid, "tick", to_string(e.code()), e.what(), now);
                ++result.failures;
            } catch (const std::exception& e) {
                record_failure(pid, "tick", "internal", e.what(), now);
                ++result.failures;
            }
        }
    }
    after_command();
    return result;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

nlohmann::json Service::questionnaire_for(std::string_view token, Timestamp now) const {
    const Redemption r = tokens_.peek(token, now);
    {
        std::shared_lock lock(state_mutex_);
        const PatientRecord* record = state_.find(r.patient_id);
        if (!record || record->patient.status != LifecycleStatus::Monitoring) {
            throw TokenError(TokenErrorKind::PatientNotMonitoring);
        }
    }
    return {{"dispatch_id", r.dispatch_id},
            {"expires_at", format_iso8601(r.expires_at)},
            {"questionnaire", questionnaire_to_json(questionnaire_)}};
}

PatientPage Service::list_patients(const PatientQuery& query) const {
    std::shared_lock lock(state_mutex_);
    return state_.list_patients(query);
}

PatientDetail Service::patient_detail(const std::string& patient_id) const {
    std::shared_lock lock(state_mutex_);
    const PatientRecord* record = state_.find(patient_id);
    if (!record) throw ServiceError(ErrorCode::NotFound, fmt::format("no patient {}", patient_id));

    PatientDetail detail;
    PatientQuery q;
    q.search = patient_id;
    q.limit = 1;
    for (const auto& row : state_.list_patients(q).rows) {
        if (row.patient_id == patient_id) detail.row = row;
    }
    detail.patient = record->patient;
    detail.timeline.reserve(record->timeline.size());
    for (std::uint64_t seq : record->timeline) {
        if (auto e = log_.get(seq)) detail.timeline.push_back(pseudonymized_event_json(*e));
    }
    for (const auto& [id, action] : state_.actions()) {
        if (action.patient_id == patient_id) detail.actions.push_back(action);
    }
    return detail;
}

CentreStats Service::stats() const {
    std::shared_lock lock(state_mutex_);
    return state_.stats();
}

CentreTotals Service::totals() const {
    std::shared_lock lock(state_mutex_);
    return state_.totals();
}

std::vector<nlohmann::json> Service::updates(std::uint64_t since, std::size_t limit) const {
    std::vector<nlohmann::json> out;
    std::shared_lock lock(state_mutex_);
    const auto& feed = state_.feed();
    auto it = std::upper_bound(feed.begin(), feed.end(), since);
    for (; it != feed.end() && out.size() < limit; ++it) {
        if (auto e = log_.get(*it)) out.push_back(pseudonymized_event_json(*e));
    }
    return out;
}

bool Service::wait_for_updates(std::uint64_t since, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(feed_mutex_);
    return feed_cv_.wait_for(lock, timeout, [&] {
        std::shared_lock state_lock(state_mutex_);
        const auto& feed = state_.feed();
        return !feed.empty() && feed.back() > since;
    });
}

std::vector<OutboundMessage> Service::dead_letters() const { return notifier_.dead_letters(); }

std::size_t Service::deliver_pending() {
    std::lock_guard delivering(delivery_mutex_);
    std::size_t attempted = 0;
    for (;;) {
        OutboundMessage message;
        {
            std::lock_guard lock(outbox_mutex_);
            if (outbox_.empty()) break;
            message = std::move(outbox_.front());
            outbox_.pop_front();
        }
        notifier_.send(message);
        ++attempted;
    }
    return attempted;
}

void Service::start_delivery_worker() {
    if (worker_.joinable()) return;
    options_.synchronous_delivery = false;
    {
        std::lock_guard lock(outbox_mutex_);
        stop_worker_ = false;
    }
    worker_ = std::thread([this] {
        for (;;) {
            {
                std::unique_lock lock(outbox_mutex_);
                outbox_cv_.wait(lock, [&] { return stop_worker_ || !outbox_.empty(); });
                if (stop_worker_ && outbox_.empty()) return;
            }
            deliver_pending();
        }
    });
}

void Service::stop_delivery_worker() {
    if (!worker_.joinable()) return;
    {
        std::lock_guard lock(outbox_mutex_);
        stop_worker_ = true;
    }
    outbox_cv_.notify_all();
    worker_.join();
}

CentreState Service::state_copy() const {
    std::shared_lock lock(state_mutex_);
    return state_;
}

nlohmann::json Service::state_json() const {
    std::shared_lock lock(state_mutex_);
    return state_.to_json();
}

CentreState replay(const EventLog& log) {
    CentreState state;
    log.read(0, [&](const Event& e) { state.apply(e); });
    return state;
}

}  // namespace homewatch
