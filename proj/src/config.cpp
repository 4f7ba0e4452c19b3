#include "homewatch/config.hpp"

#include <nlohmann/json.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace homewatch {

namespace fs = std::filesystem;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot open {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

DeploymentConfig parse_deployment_config(std::string_view json_text, const std::string& base_dir) {
    DeploymentConfig c;
    try {
        const auto j = nlohmann::json::parse(json_text);
        if (!j.is_object()) throw ConfigError("deployment config must be a JSON object");
        c.questionnaire_path = resolve(base_dir, j.at("questionnaire").get<std::string>());
        c.ruleset_path = resolve(base_dir, j.at("ruleset").get<std::string>());
        read_opt(j, "base_url", c.base_url);
        if (auto it = j.find("listen"); it != j.end()) {
            read_opt(*it, "host", c.listen_host);
            read_opt(*it, "port", c.listen_port);
        }
        if (auto it = j.find("event_log"); it != j.end()) {
            read_opt(*it, "path", c.event_log_path);
            read_opt(*it, "fsync", c.fsync);
        }
        c.event_log_path = resolve(base_dir, c.event_log_path);
        if (auto it = j.find("gateway"); it != j.end()) {
            read_opt(*it, "type", c.gateway.type);
            read_opt(*it, "path", c.gateway.path);
        }
        if (c.gateway.type != "file" && c.gateway.type != "stdout") {
            throw ConfigError(fmt::format("unknown gateway type {}", c.gateway.type));
        }
        c.gateway.path = resolve(base_dir, c.gateway.path);
        if (auto it = j.find("scheduler"); it != j.end()) {
            read_opt(*it, "anchor_hour", c.scheduler.anchor_hour);
            read_opt(*it, "escalation_factor", c.scheduler.escalation_factor);
            read_opt(*it, "calm_streak", c.scheduler.calm_streak);
            if (auto m = it->find("overdue_after_minutes"); m != it->end()) {
                c.scheduler.overdue_after = std::chrono::minutes(m->get<int>());
            }
        }
        if (c.scheduler.anchor_hour < 0 || c.scheduler.anchor_hour > 23) {
            throw ConfigError("scheduler.anchor_hour must be in 0..23");
        }
        if (c.scheduler.escalation_factor < 1 || c.scheduler.calm_streak < 1 ||
            c.scheduler.overdue_after <= Duration::zero()) {
            throw ConfigError("scheduler values must be positive");
        }
        if (auto it = j.find("retry"); it != j.end()) {
            read_opt(*it, "max_attempts", c.retry.max_attempts);
            if (auto b = it->find("backoff_seconds"); b != it->end()) {
                c.retry.backoff.clear();
                for (const auto& s : *b) c.retry.backoff.emplace_back(s.get<std::int64_t>());
            }
        }
        if (c.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be at least 1");
        read_opt(j, "snapshot_interval", c.snapshot_interval);
        if (auto it = j.find("operator_token"); it != j.end() && !it->is_null()) {
            c.operator_token = it->get<std::string>();
        }
        read_opt(j, "tick_interval_seconds", c.tick_interval_seconds);
        read_opt(j, "simulated_clock", c.simulated_clock);
        read_opt(j, "default_reports_per_day", c.default_reports_per_day);
        if (c.tick_interval_seconds < 1) throw ConfigError("tick_interval_seconds must be >= 1");
        if (c.default_reports_per_day != 1 && c.default_reports_per_day != 2) {
            throw ConfigError("default_reports_per_day must be 1 or 2");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("invalid deployment config: {}", e.what()));
    }
    return c;
}

DeploymentConfig load_deployment_config(const std::string& path) {
    const std::string dir = fs::path(path).parent_path().string();
    return parse_deployment_config(read_text_file(path), dir.empty() ? "." : dir);
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path) {
    if (explicit_path && !explicit_path->empty()) return explicit_path;
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) return std::string(env);
    return std::nullopt;
}

}  // namespace homewatch
