#include "homewatch/notifier.hpp"

#include <fmt/format.h>

#include <iostream>
#include <thread>

namespace homewatch {

using nlohmann::json;

json to_sink_json(const OutboundMessage& m) {
    return json{{"message_id", m.message_id},
                {"channel", m.channel},
                {"recipient", m.recipient},
                {"body", m.body},
                {"created_at", format_iso8601(m.created_at)},
                {"delivery_state", m.delivery_state}};
}

FileGateway::FileGateway(const std::string& path) : file_(std::fopen(path.c_str(), "a")) {
    if (file_ == nullptr) throw std::runtime_error(fmt::format("cannot open gateway file '{}'", path));
}

FileGateway::~FileGateway() {
    if (file_ != nullptr) std::fclose(file_);
}

void FileGateway::deliver(const OutboundMessage& message) {
    OutboundMessage delivered = message;
    delivered.delivery_state = DeliveryState::Sent;
    const std::string line = to_sink_json(delivered).dump() + "\n";
    std::lock_guard lock(mutex_);
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
        throw GatewayError("gateway file write failed");
    }
}

void StdoutGateway::deliver(const OutboundMessage& message) {
    OutboundMessage delivered = message;
    delivered.delivery_state = DeliveryState::Sent;
    std::lock_guard lock(mutex_);
    std::cout << to_sink_json(delivered).dump() << std::endl;
}

void MemoryGateway::deliver(const OutboundMessage& message) {
    std::lock_guard lock(mutex_);
    messages_.push_back(message);
    messages_.back().delivery_state = DeliveryState::Sent;
}

std::vector<OutboundMessage> MemoryGateway::messages() const {
    std::lock_guard lock(mutex_);
    return messages_;
}

std::vector<OutboundMessage> MemoryGateway::drain() {
    std::lock_guard lock(mutex_);
    return std::exchange(messages_, {});
}

std::size_t MemoryGateway::size() const {
    std::lock_guard lock(mutex_);
    return messages_.size();
}

std::string questionnaire_link(std::string_view base_url, std::string_view token) {
    std::string_view base = base_url;
    while (!base.empty() && base.back() == '/') base.remove_suffix(1);
    return fmt::format("{}/q/{}", base, token);
}

OutboundMessage render_questionnaire_sms(const Patient& patient, const std::string& link,
                                         std::string message_id, Timestamp now) {
    OutboundMessage m;
    m.message_id = std::move(message_id);
    m.channel = Channel::SMS;
    m.purpose = MessagePurpose::Questionnaire;
    m.recipient = patient.phone;
    m.related_patient_id = patient.patient_id;
    m.created_at = now;
    m.body = fmt::format(
        "Your follow-up questionnaire is ready: {} . This link works once and expires in 24 "
        "hours. In an emergency, call 15.",
        link);
    if (m.body.size() > kMaxSmsLength) {
        throw NotifierError(NotifierError::Kind::BodyTooLong,
                            fmt::format("questionnaire SMS is {} characters, limit {}",
                                        m.body.size(), kMaxSmsLength));
    }
    return m;
}

std::optional<std::string> auto_reassure(TriageCategory category) {
    if (needs_clinician(category)) return std::nullopt;
    return std::string(
        "Thank you, your answers have been received and do not require action from the care "
        "team. Please keep completing your questionnaires when you receive them.");
}

OutboundMessage render_reassurance(const Patient& patient, const std::string& body,
                                   std::string message_id, Timestamp now) {
    OutboundMessage m;
    m.message_id = std::move(message_id);
    m.channel = Channel::SMS;
    m.purpose = MessagePurpose::Reassurance;
    m.recipient = patient.phone;
    m.related_patient_id = patient.patient_id;
    m.created_at = now;
    m.body = body;
    return m;
}

std::string render_gp_summary(const GPSummary& s) {
    std::string body = fmt::format("Patient {} - report of {}: category {}", s.patient_id,
                                   format_iso8601(s.report_at), to_string(s.category));
    if (s.category_change && s.previous_category) {
        body += fmt::format(" (changed from {})", to_string(*s.previous_category));
    }
    body += fmt::format(". Rules: {}.", fmt::join(s.fired_rules, ", "));
    if (s.actions.empty()) {
        body += " Decisions since last summary: none.";
    } else {
        body += fmt::format(" Decisions since last summary: {}.", fmt::join(s.actions, "; "));
    }
    return body;
}

Notifier::Notifier(MessageGateway& gateway, RetryPolicy policy, Sleeper sleeper)
    : gateway_(gateway), policy_(std::move(policy)), sleeper_(std::move(sleeper)) {
    if (!sleeper_) {
        sleeper_ = [](Duration d) { std::this_thread::sleep_for(d); };
    }
}

OutboundMessage render_gp_enrollment(const Patient& patient, std::string message_id, Timestamp now) {
    if (!patient.gp_contact || patient.gp_contact->empty()) {
        throw NotifierError(NotifierError::Kind::MissingGPContact,
                            fmt::format("patient {} has no GP contact", patient.patient_id));
    }
    OutboundMessage m;
    m.message_id = std::move(message_id);
    m.channel = Channel::GPChannel;
    m.purpose = MessagePurpose::GpEnrollment;
    m.recipient = *patient.gp_contact;
    m.related_patient_id = patient.patient_id;
    m.created_at = now;
    m.body = fmt::format(
        "Patient {} has been confirmed with Covid-19 and is now being monitored at home.",
        patient.patient_id);
    return m;
}

OutboundMessage render_gp_summary_message(const Patient& patient, const GPSummary& summary,
                                          std::string message_id, Timestamp now) {
    OutboundMessage m;
    m.message_id = std::move(message_id);
    m.channel = Channel::GPChannel;
    m.purpose = MessagePurpose::GpSummary;
    m.related_patient_id = patient.patient_id;
    m.created_at = now;
    m.body = render_gp_summary(summary);
    if (patient.gp_contact && !patient.gp_contact->empty()) {
        m.recipient = *patient.gp_contact;
    } else {
        m.delivery_state = DeliveryState::Failed;
    }
    return m;
}

std::optional<OutboundMessage> Notifier::notify_gp_enrollment(const Patient& patient,
                                                              std::string message_id,
                                                              Timestamp now) {
    OutboundMessage m = render_gp_enrollment(patient, std::move(message_id), now);
    std::lock_guard lock(mutex_);
    if (!enrolled_notified_.insert(patient.patient_id).second) return std::nullopt;
    return m;
}

std::optional<GpSummaryOutput> Notifier::emit_gp_summary(const Patient& patient,
                                                         GPSummary summary,
                                                         std::string message_id, Timestamp now) {
    OutboundMessage m = render_gp_summary_message(patient, summary, std::move(message_id), now);
    std::lock_guard lock(mutex_);
    if (!summarized_reports_.insert(summary.report_id).second) return std::nullopt;
    if (m.delivery_state == DeliveryState::Failed) dead_letters_.push_back(m);
    return GpSummaryOutput{std::move(summary), std::move(m)};
}

void Notifier::record_dead_letter(const OutboundMessage& message) {
    std::lock_guard lock(mutex_);
    dead_letters_.push_back(message);
}

DeliveryState Notifier::send(OutboundMessage& message) {
    if (message.delivery_state != DeliveryState::Pending) return message.delivery_state;
    const int attempts = std::max(1, policy_.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            const auto idx = static_cast<std::size_t>(attempt - 2);
            const Duration wait = idx < policy_.backoff.size()
                                      ? policy_.backoff[idx]
                                      : (policy_.backoff.empty() ? Duration{0}
                                                                 : policy_.backoff.back());
            sleeper_(wait);
        }
        message.attempts = attempt;
        try {
            gateway_.deliver(message);
            message.delivery_state = DeliveryState::Sent;
            return message.delivery_state;
        } catch (const std::exception&) {
            // retried below; the final failure is dead-lettered
        }
    }
    message.delivery_state = DeliveryState::Failed;
    std::lock_guard lock(mutex_);
    dead_letters_.push_back(message);
    return message.delivery_state;
}

std::vector<OutboundMessage> Notifier::dead_letters() const {
    std::lock_guard lock(mutex_);
    return dead_letters_;
}

bool Notifier::enrollment_notified(const std::string& patient_id) const {
    std::lock_guard lock(mutex_);
    return enrolled_notified_.contains(patient_id);
}

bool Notifier::summary_emitted(const std::string& report_id) const {
    std::lock_guard lock(mutex_);
    return summarized_reports_.contains(report_id);
}

void Notifier::mark_enrollment_notified(const std::string& patient_id) {
    std::lock_guard lock(mutex_);
    enrolled_notified_.insert(patient_id);
}

void Notifier::mark_summary_emitted(const std::string& report_id) {
    std::lock_guard lock(mutex_);
    summarized_reports_.insert(report_id);
}

}  // namespace homewatch
