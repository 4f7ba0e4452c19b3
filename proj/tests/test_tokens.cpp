#include "homewatch/tokens.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <set>
#include <thread>

using namespace homewatch;

namespace {

const Timestamp kT0 = make_utc(2020, 3, 16, 8);

TokenErrorKind redeem_error(TokenStore& s, const std::string& t, Timestamp now) {
    try {
        s.redeem(t, now);
    } catch (const TokenError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "redeemed";
    return TokenErrorKind::Unknown;
}

}  // namespace

TEST(Tokens, RandomTokensAreUrlSafeAndDistinct) {
    std::set<std::string> seen;
    for (int i = 0; i < 2000; ++i) {
        const std::string t = random_url_token();
        EXPECT_EQ(t.size(), 32u);
        for (char c : t) EXPECT_TRUE(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_');
        EXPECT_TRUE(seen.insert(t).second);
    }
}

TEST(Tokens, Base64UrlRoundTrip) {
    std::mt19937_64 rng(2);
    for (int n = 0; n < 64; ++n) {
        std::string bytes(static_cast<std::size_t>(n), '\0');
        for (auto& b : bytes) b = static_cast<char>(rng() & 0xff);
        const std::string enc = base64url_encode(bytes);
        EXPECT_EQ(enc.find_first_of("+/="), std::string::npos);
        EXPECT_EQ(base64url_decode(enc), bytes);
    }
    EXPECT_EQ(base64url_encode("o:50"), "bzo1MA");
    EXPECT_FALSE(base64url_decode("***").has_value());
}

TEST(Tokens, HashIsSha256Hex) {
    EXPECT_EQ(hash_token("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Tokens, IssueRedeemOnce) {
    TokenStore s;
    const AccessToken t = s.issue("p1", "d1", kT0);
    EXPECT_EQ(t.expires_at, kT0 + 24h);
    const Redemption r = s.redeem(t.token, kT0 + 1h);
    EXPECT_EQ(r.patient_id, "p1");
    EXPECT_EQ(r.dispatch_id, "d1");
    EXPECT_EQ(redeem_error(s, t.token, kT0 + 2h), TokenErrorKind::Consumed);
    EXPECT_EQ(redeem_error(s, "nope", kT0), TokenErrorKind::Unknown);
    EXPECT_EQ(s.consumed_count(), 1u);
}

TEST(Tokens, ExpiryBoundary) {
    TokenStore s;
    const AccessToken a = s.issue("p", "d1", kT0);
    const AccessToken b = s.issue("p", "d2", kT0);
    const AccessToken c = s.issue("p", "d3", kT0);
    EXPECT_NO_THROW(s.peek(a.token, kT0 + 24h));
    EXPECT_NO_THROW(s.redeem(a.token, kT0 + 24h));
    EXPECT_EQ(redeem_error(s, b.token, kT0 + 24h + 1s), TokenErrorKind::Expired);
    EXPECT_NO_THROW(s.redeem(c.token, kT0 + 23h + 59min));
}

TEST(Tokens, PeekDoesNotConsume) {
    TokenStore s;
    const AccessToken t = s.issue("p", "d", kT0);
    s.peek(t.token, kT0);
    s.peek(t.token, kT0);
    EXPECT_NO_THROW(s.redeem(t.token, kT0));
}

TEST(Tokens, OnlyMonitoringPatientsGetTokens) {
    TokenStore s;
    EXPECT_THROW(s.issue("p", "d", kT0, LifecycleStatus::Hospitalized), TokenError);
    EXPECT_THROW(s.issue("p", "d", kT0, LifecycleStatus::Discharged), TokenError);
    EXPECT_EQ(s.size(), 0u);
}

TEST(Tokens, RawValueNeverStored) {
    TokenStore s;
    const AccessToken t = s.issue("p", "d", kT0);
    const std::string dump = s.to_json().dump();
    EXPECT_EQ(dump.find(t.token), std::string::npos);
    EXPECT_NE(dump.find(hash_token(t.token)), std::string::npos);

    TokenStore restored;
    restored.load_json(s.to_json());
    EXPECT_EQ(restored.redeem(t.token, kT0 + 1h).dispatch_id, "d");
}

TEST(Tokens, RestoreFromReplay) {
    TokenStore s;
    s.restore(hash_token("raw"), "p", "d", kT0, false);
    s.restore(hash_token("used"), "p", "d2", kT0, true);
    EXPECT_EQ(s.redeem("raw", kT0 + 1h).patient_id, "p");
    EXPECT_EQ(redeem_error(s, "used", kT0 + 1h), TokenErrorKind::Consumed);
}

TEST(Tokens, ConcurrentRedeemSucceedsExactlyOnce) {
    TokenStore s;
    std::vector<std::string> raw;
    for (int i = 0; i < 500; ++i) raw.push_back(s.issue("p", "d" + std::to_string(i), kT0).token);
    std::atomic<int> ok{0};
    std::atomic<int> consumed{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < 16; ++w) {
        threads.emplace_back([&] {
            for (const auto& t : raw) {
                try {
                    s.redeem(t, kT0 + 1h);
                    ++ok;
                } catch (const TokenError& e) {
                    if (e.kind() == TokenErrorKind::Consumed) ++consumed;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(ok.load(), 500);
    EXPECT_EQ(consumed.load(), 500 * 15);
}
