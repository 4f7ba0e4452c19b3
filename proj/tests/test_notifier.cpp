#include "homewatch/notifier.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace homewatch;

namespace {

const Timestamp kNow = make_utc(2020, 3, 16, 8);

Patient patient(std::optional<std::string> gp = "gp-1") {
    Patient p;
    p.patient_id = "p-1";
    p.phone = "+33600000001";
    p.gp_contact = std::move(gp);
    p.status = LifecycleStatus::Monitoring;
    return p;
}

class FlakyGateway final : public MessageGateway {
public:
    explicit FlakyGateway(int failures) : failures_(failures) {}
    void deliver(const OutboundMessage& m) override {
        ++calls;
        if (failures_-- > 0) throw GatewayError("carrier down");
        delivered.push_back(m);
    }
    int calls = 0;
    std::vector<OutboundMessage> delivered;

private:
    int failures_;
};

GPSummary summary(const std::string& report_id) {
    GPSummary s;
    s.patient_id = "p-1";
    s.report_id = report_id;
    s.report_at = kNow;
    s.category = TriageCategory::Orange;
    s.category_change = true;
    s.previous_category = TriageCategory::Yellow;
    s.fired_rules = {"temperature_rise"};
    s.actions = {"Review action opened (OrangeFlag)"};
    return s;
}

}  // namespace

TEST(Render, QuestionnaireSmsCarriesLinkAndFitsLimit) {
    const std::string link = questionnaire_link("https://centre.example/", "abc");
    EXPECT_EQ(link, "https://centre.example/q/abc");
    const OutboundMessage m = render_questionnaire_sms(patient(), link, "m-1", kNow);
    EXPECT_EQ(m.channel, Channel::SMS);
    EXPECT_EQ(m.recipient, "+33600000001");
    EXPECT_NE(m.body.find(link), std::string::npos);
    EXPECT_LE(m.body.size(), kMaxSmsLength);
    EXPECT_THROW(render_questionnaire_sms(patient(), std::string(600, 'x'), "m-2", kNow), NotifierError);
}

TEST(Render, ReassuranceOnlyForGreenAndYellow) {
    EXPECT_TRUE(auto_reassure(TriageCategory::Green).has_value());
    EXPECT_TRUE(auto_reassure(TriageCategory::Yellow).has_value());
    EXPECT_FALSE(auto_reassure(TriageCategory::Orange).has_value());
    EXPECT_FALSE(auto_reassure(TriageCategory::Red).has_value());
}

TEST(Render, GpSummaryText) {
    const std::string body = render_gp_summary(summary("r-1"));
    EXPECT_NE(body.find("category Orange (changed from Yellow)"), std::string::npos);
    EXPECT_NE(body.find("temperature_rise"), std::string::npos);
    EXPECT_NE(body.find("Review action opened"), std::string::npos);
    GPSummary quiet = summary("r-2");
    quiet.actions.clear();
    EXPECT_NE(render_gp_summary(quiet).find("none"), std::string::npos);
}

TEST(NotifierTest, EnrollmentNoticeOncePerPatient) {
    MemoryGateway gw;
    Notifier n(gw);
    const auto first = n.notify_gp_enrollment(patient(), "m-1", kNow);
    ASSERT_TRUE(first.has_value());
    EXPECT_EQ(first->channel, Channel::GPChannel);
    EXPECT_EQ(first->recipient, "gp-1");
    EXPECT_FALSE(n.notify_gp_enrollment(patient(), "m-2", kNow).has_value());
    EXPECT_TRUE(n.enrollment_notified("p-1"));
}

TEST(NotifierTest, MissingGpContactIsAnError) {
    MemoryGateway gw;
    Notifier n(gw);
    try {
        n.notify_gp_enrollment(patient(std::nullopt), "m-1", kNow);
        FAIL();
    } catch (const NotifierError& e) {
        EXPECT_EQ(e.kind(), NotifierError::Kind::MissingGPContact);
    }
}

TEST(NotifierTest, SummaryOncePerReport) {
    MemoryGateway gw;
    Notifier n(gw);
    EXPECT_TRUE(n.emit_gp_summary(patient(), summary("r-1"), "m-1", kNow).has_value());
    EXPECT_FALSE(n.emit_gp_summary(patient(), summary("r-1"), "m-2", kNow).has_value());
    EXPECT_TRUE(n.emit_gp_summary(patient(), summary("r-2"), "m-3", kNow).has_value());
    EXPECT_TRUE(n.summary_emitted("r-1"));
}

TEST(NotifierTest, SummaryWithoutGpContactIsDeadLettered) {
    MemoryGateway gw;
    Notifier n(gw);
    const auto out = n.emit_gp_summary(patient(std::nullopt), summary("r-1"), "m-1", kNow);
    ASSERT_TRUE(out.has_value());
    EXPECT_EQ(out->message.delivery_state, DeliveryState::Failed);
    EXPECT_EQ(n.dead_letters().size(), 1u);
}

TEST(NotifierTest, RetriesWithBackoffThenSucceeds) {
    FlakyGateway gw(2);
    std::vector<Duration> waits;
    Notifier n(gw, RetryPolicy{3, {1s, 4s}}, [&](Duration d) { waits.push_back(d); });
    OutboundMessage m = render_reassurance(patient(), "ok", "m-1", kNow);
    EXPECT_EQ(n.send(m), DeliveryState::Sent);
    EXPECT_EQ(m.attempts, 3);
    EXPECT_EQ(waits, (std::vector<Duration>{1s, 4s}));
    EXPECT_TRUE(n.dead_letters().empty());
    EXPECT_EQ(n.send(m), DeliveryState::Sent);
    EXPECT_EQ(gw.calls, 3);
}

TEST(NotifierTest, ExhaustedRetriesGoToDeadLetters) {
    FlakyGateway gw(100);
    Notifier n(gw, RetryPolicy{3, {1s}}, [](Duration) {});
    OutboundMessage m = render_reassurance(patient(), "ok", "m-1", kNow);
    EXPECT_EQ(n.send(m), DeliveryState::Failed);
    EXPECT_EQ(gw.calls, 3);
    ASSERT_EQ(n.dead_letters().size(), 1u);
    EXPECT_EQ(n.dead_letters()[0].message_id, "m-1");
}

TEST(Gateways, FileGatewayWritesSinkLines) {
    const auto path = std::filesystem::temp_directory_path() / "homewatch_gateway_test.jsonl";
    std::filesystem::remove(path);
    {
        FileGateway gw(path.string());
        gw.deliver(render_reassurance(patient(), "hello", "m-1", kNow));
        gw.deliver(render_reassurance(patient(), "again", "m-2", kNow));
    }
    std::ifstream in(path);
    std::string line;
    std::vector<nlohmann::json> lines;
    while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0]["message_id"], "m-1");
    EXPECT_EQ(lines[0]["channel"], "SMS");
    EXPECT_EQ(lines[0]["recipient"], "+33600000001");
    EXPECT_EQ(lines[0]["created_at"], "2020-03-16T08:00:00Z");
    EXPECT_EQ(lines[0]["delivery_state"], "Sent");
    EXPECT_EQ(lines[1]["body"], "again");
    std::filesystem::remove(path);
}

TEST(Gateways, MemoryGatewayDrains) {
    MemoryGateway gw;
    gw.deliver(render_reassurance(patient(), "a", "m-1", kNow));
    EXPECT_EQ(gw.size(), 1u);
    EXPECT_EQ(gw.drain().size(), 1u);
    EXPECT_EQ(gw.size(), 0u);
}
