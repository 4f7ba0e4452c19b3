#include "homewatch/config.hpp"
#include "homewatch/domain.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace homewatch;

TEST(DeploymentConfig, ShippedFileLoads) {
    const DeploymentConfig c = load_deployment_config(std::string(HOMEWATCH_SOURCE_DIR) + "/config/homewatch.json");
    EXPECT_EQ(c.questionnaire_path, std::string(HOMEWATCH_SOURCE_DIR) + "/config/questionnaire.json");
    EXPECT_EQ(c.event_log_path, std::string(HOMEWATCH_SOURCE_DIR) + "/data/events.log");
    EXPECT_EQ(c.listen_port, 8080);
    EXPECT_EQ(c.scheduler.overdue_after, 8h);
    EXPECT_EQ(c.retry.backoff, (std::vector<Duration>{1s, 4s}));
    EXPECT_EQ(c.operator_token, "change-me");
    EXPECT_TRUE(c.fsync);
}

TEST(DeploymentConfig, DefaultsAndAbsolutePaths) {
    const DeploymentConfig c =
        parse_deployment_config(R"({"questionnaire": "/etc/q.json", "ruleset": "r.json"})", "/srv/hw");
    EXPECT_EQ(c.questionnaire_path, "/etc/q.json");
    EXPECT_EQ(c.ruleset_path, "/srv/hw/r.json");
    EXPECT_EQ(c.event_log_path, "/srv/hw/events.log");
    EXPECT_EQ(c.gateway.path, "/srv/hw/outbox.jsonl");
    EXPECT_FALSE(c.operator_token.has_value());
    EXPECT_EQ(c.default_reports_per_day, 2);
    EXPECT_EQ(c.scheduler.anchor_hour, 8);
}

TEST(DeploymentConfig, RejectsBadValues) {
    const std::string base = R"("questionnaire": "q.json", "ruleset": "r.json")";
    for (const std::string extra : {
             R"(, "gateway": {"type": "carrier-pigeon"})",
             R"(, "scheduler": {"anchor_hour": 24})",
             R"(, "scheduler": {"overdue_after_minutes": 0})",
             R"(, "retry": {"max_attempts": 0})",
             R"(, "tick_interval_seconds": 0)",
             R"(, "default_reports_per_day": 3)",
             R"(, "listen": {"port": "eighty"})",
         }) {
        EXPECT_THROW(parse_deployment_config("{" + base + extra + "}", "."), ConfigError) << extra;
    }
    EXPECT_THROW(parse_deployment_config(R"({"ruleset": "r.json"})", "."), ConfigError);
    EXPECT_THROW(parse_deployment_config("not json", "."), ConfigError);
    EXPECT_THROW(load_deployment_config("/nonexistent/homewatch.json"), ConfigError);
}

TEST(DeploymentConfig, PathFromArgumentThenEnvironment) {
    ::unsetenv(kConfigEnvVar);
    EXPECT_FALSE(resolve_config_path(std::nullopt).has_value());
    ::setenv(kConfigEnvVar, "/from/env.json", 1);
    EXPECT_EQ(resolve_config_path(std::nullopt), "/from/env.json");
    EXPECT_EQ(resolve_config_path(std::string("/explicit.json")), "/explicit.json");
    ::unsetenv(kConfigEnvVar);
}
