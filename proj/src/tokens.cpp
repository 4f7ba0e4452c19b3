#include "homewatch/tokens.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <array>
#include <map>

namespace homewatch {

std::string base64url_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    while (!out.empty() && out.back() == '=') out.pop_back();
    for (char& c : out) {
        if (c == '+') c = '-';
        if (c == '/') c = '_';
    }
    return out;
}

std::optional<std::string> base64url_decode(std::string_view text) {
    std::string padded(text);
    for (char& c : padded) {
        if (c == '-') c = '+';
        else if (c == '_') c = '/';
        else if (c == '+' || c == '/' || c == '=') return std::nullopt;
    }
    const std::size_t pad = (4 - padded.size() % 4) % 4;
    if (pad == 3) return std::nullopt;
    padded.append(pad, '=');
    std::string out(padded.size() / 4 * 3, '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(padded.data()),
                                  static_cast<int>(padded.size()));
    if (n < 0) return std::nullopt;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string random_url_token(std::size_t bytes) {
    std::string raw(bytes, '\0');
    if (RAND_bytes(reinterpret_cast<unsigned char*>(raw.data()), static_cast<int>(raw.size())) !=
        1) {
        throw std::runtime_error("RAND_bytes failed");
    }
    return base64url_encode(raw);
}

std::string hash_token(std::string_view raw_token) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(raw_token.data(), raw_token.size(), digest.data(), &len, EVP_sha256(),
                   nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

TokenStore::TokenStore(Generator generator) : generator_(std::move(generator)) {}

AccessToken TokenStore::issue(const std::string& patient_id, const std::string& dispatch_id,
                              Timestamp now, LifecycleStatus status) {
    if (status != LifecycleStatus::Monitoring) {
        throw TokenError(TokenErrorKind::PatientNotMonitoring);
    }
    std::lock_guard lock(mutex_);
    for (;;) {
        AccessToken token{generator_(), patient_id, dispatch_id, now, now + kTokenTtl, false};
        auto [it, inserted] = records_.try_emplace(
            hash_token(token.token),
            Record{patient_id, dispatch_id, token.issued_at, token.expires_at, false});
        if (inserted) return token;
    }
}

Redemption TokenStore::check_locked(const std::string& digest, const Record* record,
                                    Timestamp now) const {
    if (record == nullptr) throw TokenError(TokenErrorKind::Unknown);
    if (record->consumed) throw TokenError(TokenErrorKind::Consumed);
    if (now > record->expires_at) throw TokenError(TokenErrorKind::Expired);
    return {record->patient_id, record->dispatch_id, digest, record->expires_at};
}

Redemption TokenStore::redeem(std::string_view raw_token, Timestamp now) {
    const std::string digest = hash_token(raw_token);
    std::lock_guard lock(mutex_);
    auto it = records_.find(digest);
    Redemption r = check_locked(digest, it == records_.end() ? nullptr : &it->second, now);
    it->second.consumed = true;
    return r;
}

Redemption TokenStore::peek(std::string_view raw_token, Timestamp now) const {
    const std::string digest = hash_token(raw_token);
    std::lock_guard lock(mutex_);
    auto it = records_.find(digest);
    return check_locked(digest, it == records_.end() ? nullptr : &it->second, now);
}

void TokenStore::restore(const std::string& token_hash, const std::string& patient_id,
                         const std::string& dispatch_id, Timestamp issued_at, bool consumed) {
    std::lock_guard lock(mutex_);
    records_[token_hash] = Record{patient_id, dispatch_id, issued_at, issued_at + kTokenTtl, consumed};
}

void TokenStore::mark_consumed(const std::string& token_hash) {
    std::lock_guard lock(mutex_);
    if (auto it = records_.find(token_hash); it != records_.end()) it->second.consumed = true;
}

std::size_t TokenStore::consumed_count() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [_, r] : records_) n += r.consumed ? 1 : 0;
    return n;
}

nlohmann::json TokenStore::to_json() const {
    std::lock_guard lock(mutex_);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [digest, r] : records_) {
        nlohmann::json& row = out[digest];
        row["patient_id"] = r.patient_id;
        row["dispatch_id"] = r.dispatch_id;
        row["issued_at"] = to_epoch_seconds(r.issued_at);
        row["consumed"] = r.consumed;
    }
    return out;
}

void TokenStore::load_json(const nlohmann::json& j) {
    std::lock_guard lock(mutex_);
    records_.clear();
    for (const auto& [digest, r] : j.items()) {
        const Timestamp issued = from_epoch_seconds(r.at("issued_at").get<std::int64_t>());
        records_[digest] = Record{r.at("patient_id").get<std::string>(),
                                  r.at("dispatch_id").get<std::string>(), issued,
                                  issued + kTokenTtl, r.at("consumed").get<bool>()};
    }
}

std::size_t TokenStore::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

}  // namespace homewatch
