#pragma once

#include "homewatch/notifier.hpp"
#include "homewatch/scheduler.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace homewatch {

/// Environment variable naming the deployment config file.
inline constexpr const char* kConfigEnvVar = "HOMEWATCH_CONFIG";

struct GatewayConfig {
    std::string type = "file";  // "file" or "stdout"
    std::string path = "outbox.jsonl";
};

struct DeploymentConfig {
    std::string questionnaire_path;
    std::string ruleset_path;
    std::string base_url = "http://localhost:8080";
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::string event_log_path = "events.log";
    bool fsync = true;
    GatewayConfig gateway;
    SchedulerConfig scheduler;
    RetryPolicy retry;
    std::uint64_t snapshot_interval = 10000;
    std::optional<std::string> operator_token;
    int tick_interval_seconds = 60;
    bool simulated_clock = false;
    int default_reports_per_day = 2;
};

/// Parses a deployment config. Relative paths resolve against `base_dir`. Throws ConfigError.
DeploymentConfig parse_deployment_config(std::string_view json_text, const std::string& base_dir);
DeploymentConfig load_deployment_config(const std::string& path);

/// Path from the explicit argument, else the environment variable, else nullopt.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path);

std::string read_text_file(const std::string& path);

}  // namespace homewatch
