#pragma once

#include "homewatch/domain.hpp"

#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace homewatch {

inline constexpr Duration kTokenTtl = 24h;

/// Random bytes encoded as unpadded base64url.
std::string random_url_token(std::size_t bytes = 24);

/// Hex SHA-256 of the raw token. Only this digest is kept at rest.
std::string hash_token(std::string_view raw_token);

std::string base64url_encode(std::string_view bytes);
std::optional<std::string> base64url_decode(std::string_view text);

struct AccessToken {
    std::string token;  // raw value; only ever handed to the outbound message
    std::string patient_id;
    std::string dispatch_id;
    Timestamp issued_at{};
    Timestamp expires_at{};
    bool consumed = false;
};

enum class TokenErrorKind : std::uint8_t { Unknown, Expired, Consumed, PatientNotMonitoring };

template <>
struct EnumNames<TokenErrorKind> {
    static constexpr std::string_view type_name = "token error";
    static constexpr std::array<std::pair<TokenErrorKind, std::string_view>, 4> entries{{
        {TokenErrorKind::Unknown, "token_unknown"},
        {TokenErrorKind::Expired, "token_expired"},
        {TokenErrorKind::Consumed, "token_consumed"},
        {TokenErrorKind::PatientNotMonitoring, "patient_not_monitoring"},
    }};
};

class TokenError : public std::runtime_error {
public:
    explicit TokenError(TokenErrorKind kind)
        : std::runtime_error(std::string(to_string(kind))), kind_(kind) {}
    TokenErrorKind kind() const { return kind_; }

private:
    TokenErrorKind kind_;
};

struct Redemption {
    std::string patient_id;
    std::string dispatch_id;
    std::string token_hash;
    Timestamp expires_at{};
};

/// Single-use questionnaire link credentials. Thread-safe; redeem is linearizable per token.
class TokenStore {
public:
    using Generator = std::function<std::string()>;

    explicit TokenStore(Generator generator = [] { return random_url_token(); });

    /// Throws TokenError(PatientNotMonitoring) unless `status` is Monitoring.
    AccessToken issue(const std::string& patient_id, const std::string& dispatch_id, Timestamp now,
                      LifecycleStatus status = LifecycleStatus::Monitoring);

    /// Validates and consumes. Expiry is inclusive: redeeming at exactly expires_at succeeds.
    Redemption redeem(std::string_view raw_token, Timestamp now);

    /// Same checks as redeem without consuming.
    Redemption peek(std::string_view raw_token, Timestamp now) const;

    /// Rebuilds a stored record from its digest (event replay).
    void restore(const std::string& token_hash, const std::string& patient_id,
                 const std::string& dispatch_id, Timestamp issued_at, bool consumed);
    void mark_consumed(const std::string& token_hash);

    std::size_t size() const;
    std::size_t consumed_count() const;

    /// Digest-keyed records for snapshots; raw token values are never stored.
    nlohmann::json to_json() const;
    void load_json(const nlohmann::json& j);

private:
    struct Record {
        std::string patient_id;
        std::string dispatch_id;
        Timestamp issued_at{};
        Timestamp expires_at{};
        bool consumed = false;
    };

    Redemption check_locked(const std::string& digest, const Record* record, Timestamp now) const;

    Generator generator_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Record> records_;
};

}  // namespace homewatch
