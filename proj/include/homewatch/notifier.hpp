#pragma once

#include "homewatch/domain.hpp"
#include "homewatch/triage.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace homewatch {

inline constexpr std::size_t kMaxSmsLength = 480;

enum class Channel : std::uint8_t { SMS, GPChannel };

template <>
struct EnumNames<Channel> {
    static constexpr std::string_view type_name = "channel";
    static constexpr std::array<std::pair<Channel, std::string_view>, 2> entries{{
        {Channel::SMS, "SMS"},
        {Channel::GPChannel, "GPChannel"},
    }};
};

enum class DeliveryState : std::uint8_t { Pending, Sent, Failed };

template <>
struct EnumNames<DeliveryState> {
    static constexpr std::string_view type_name = "delivery state";
    static constexpr std::array<std::pair<DeliveryState, std::string_view>, 3> entries{{
        {DeliveryState::Pending, "Pending"},
        {DeliveryState::Sent, "Sent"},
        {DeliveryState::Failed, "Failed"},
    }};
};

enum class MessagePurpose : std::uint8_t { Questionnaire, Reassurance, GpEnrollment, GpSummary };

template <>
struct EnumNames<MessagePurpose> {
    static constexpr std::string_view type_name = "message purpose";
    static constexpr std::array<std::pair<MessagePurpose, std::string_view>, 4> entries{{
        {MessagePurpose::Questionnaire, "questionnaire"},
        {MessagePurpose::Reassurance, "reassurance"},
        {MessagePurpose::GpEnrollment, "gp_enrollment"},
        {MessagePurpose::GpSummary, "gp_summary"},
    }};
};

struct OutboundMessage {
    std::string message_id;
    Channel channel = Channel::SMS;
    MessagePurpose purpose = MessagePurpose::Questionnaire;
    std::string recipient;
    std::string body;
    std::string related_patient_id;
    Timestamp created_at{};
    DeliveryState delivery_state = DeliveryState::Pending;
    int attempts = 0;
};

/// Gateway sink line: {message_id, channel, recipient, body, created_at, delivery_state}.
nlohmann::json to_sink_json(const OutboundMessage& m);

class NotifierError : public std::runtime_error {
public:
    enum class Kind : std::uint8_t { BodyTooLong, MissingGPContact };
    NotifierError(Kind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class GatewayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Carrier abstraction. deliver() throws GatewayError when the carrier rejects the message.
class MessageGateway {
public:
    virtual ~MessageGateway() = default;
    virtual void deliver(const OutboundMessage& message) = 0;
};

/// Appends one JSON object per line.
class FileGateway final : public MessageGateway {
public:
    explicit FileGateway(const std::string& path);
    ~FileGateway() override;
    FileGateway(const FileGateway&) = delete;
    FileGateway& operator=(const FileGateway&) = delete;

    void deliver(const OutboundMessage& message) override;

private:
    std::mutex mutex_;
    std::FILE* file_ = nullptr;
};

class StdoutGateway final : public MessageGateway {
public:
    void deliver(const OutboundMessage& message) override;

private:
    std::mutex mutex_;
};

/// Keeps delivered messages in memory. Used in-process by the simulator and tests.
class MemoryGateway final : public MessageGateway {
public:
    void deliver(const OutboundMessage& message) override;

    std::vector<OutboundMessage> messages() const;
    /// Removes and returns everything delivered so far.
    std::vector<OutboundMessage> drain();
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<OutboundMessage> messages_;
};

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string questionnaire_link(std::string_view base_url, std::string_view token);

/// Throws NotifierError(BodyTooLong) if the rendered body exceeds kMaxSmsLength.
OutboundMessage render_questionnaire_sms(const Patient& patient, const std::string& link,
                                         std::string message_id, Timestamp now);

/// Reassurance and reminder text for Green/Yellow; nothing for Orange/Red, where clinicians
/// take over.
std::optional<std::string> auto_reassure(TriageCategory category);

OutboundMessage render_reassurance(const Patient& patient, const std::string& body,
                                   std::string message_id, Timestamp now);

struct GPSummary {
    std::string patient_id;
    std::string report_id;
    Timestamp report_at{};
    TriageCategory category = TriageCategory::Green;
    bool category_change = false;
    std::optional<TriageCategory> previous_category;
    std::vector<std::string> fired_rules;
    std::vector<std::string> actions;  // decisions taken since the previous summary

    friend bool operator==(const GPSummary&, const GPSummary&) = default;
};

std::string render_gp_summary(const GPSummary& summary);

/// Throws NotifierError(MissingGPContact).
OutboundMessage render_gp_enrollment(const Patient& patient, std::string message_id, Timestamp now);

/// GP channel message for a summary; Failed (and unaddressed) when the patient has no GP contact.
OutboundMessage render_gp_summary_message(const Patient& patient, const GPSummary& summary,
                                          std::string message_id, Timestamp now);

// ---------------------------------------------------------------------------
// Notifier
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::vector<Duration> backoff = {1s, 4s};  // wait before attempt 2, 3, ...
};

struct GpSummaryOutput {
    GPSummary summary;
    OutboundMessage message;  // Failed when the patient has no GP contact
};

/// Builds outbound messages with exactly-once bookkeeping and delivers them through a gateway
/// with retries. Failed deliveries are kept in a dead-letter list.
class Notifier {
public:
    using Sleeper = std::function<void(Duration)>;

    explicit Notifier(MessageGateway& gateway, RetryPolicy policy = {}, Sleeper sleeper = {});

    /// Throws NotifierError(MissingGPContact). Returns nullopt if the patient was already
    /// notified.
    std::optional<OutboundMessage> notify_gp_enrollment(const Patient& patient,
                                                        std::string message_id, Timestamp now);

    /// Returns nullopt if a summary for this report already exists.
    std::optional<GpSummaryOutput> emit_gp_summary(const Patient& patient, GPSummary summary,
                                                   std::string message_id, Timestamp now);

    /// Invokes the gateway at most max_attempts times; never throws gateway errors.
    DeliveryState send(OutboundMessage& message);

    std::vector<OutboundMessage> dead_letters() const;
    /// For messages that failed before reaching the gateway (no recipient).
    void record_dead_letter(const OutboundMessage& message);

    bool enrollment_notified(const std::string& patient_id) const;
    bool summary_emitted(const std::string& report_id) const;
    /// Bookkeeping restored from the event log.
    void mark_enrollment_notified(const std::string& patient_id);
    void mark_summary_emitted(const std::string& report_id);

private:
    MessageGateway& gateway_;
    RetryPolicy policy_;
    Sleeper sleeper_;
    mutable std::mutex mutex_;
    std::set<std::string, std::less<>> enrolled_notified_;
    std::set<std::string, std::less<>> summarized_reports_;
    std::vector<OutboundMessage> dead_letters_;
};

}  // namespace homewatch
