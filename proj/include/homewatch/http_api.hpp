#pragma once

#include "homewatch/notifier.hpp"
#include "homewatch/service.hpp"
#include "homewatch/time.hpp"

#include <memory>
#include <optional>
#include <string>

namespace homewatch {

/// Forwards to an inner gateway and keeps a copy of questionnaire SMS so a simulated-clock
/// driver can read its links back from POST /admin/tick.
class CaptureGateway final : public MessageGateway {
public:
    explicit CaptureGateway(MessageGateway& inner) : inner_(inner) {}
    void deliver(const OutboundMessage& message) override;
    std::vector<OutboundMessage> drain();

private:
    MessageGateway& inner_;
    std::mutex mutex_;
    std::vector<OutboundMessage> captured_;
};

struct ServerOptions {
    /// Required in X-Operator-Token on operator endpoints when set.
    std::optional<std::string> operator_token;
    /// Enables /admin/clock, /admin/tick and /admin/totals. Requires a ManualClock.
    ManualClock* simulated_clock = nullptr;
    CaptureGateway* capture = nullptr;
    /// Heartbeat interval on an idle /updates stream.
    std::chrono::milliseconds heartbeat{15000};
};

/// HTTP+JSON front end of the Command Centre.
class CentreServer {
public:
    CentreServer(Service& service, const Clock& clock, ServerOptions options = {});
    ~CentreServer();
    CentreServer(const CentreServer&) = delete;
    CentreServer& operator=(const CentreServer&) = delete;

    /// Blocks until stop(). Returns false if the socket could not be bound.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and serves on a background thread; returns the port.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();

    /// Runs Service::tick on a wall-clock timer until stop().
    void start_ticker(std::chrono::seconds interval);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Maps an error code to its HTTP status.
int http_status(std::string_view code);

}  // namespace homewatch
