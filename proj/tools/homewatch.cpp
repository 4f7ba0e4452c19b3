// homewatch: command-line entry point for the Command Centre service and its tools.

#include "homewatch/config.hpp"
#include "homewatch/event_store.hpp"
#include "homewatch/http_api.hpp"
#include "homewatch/service.hpp"
#include "homewatch/simulator.hpp"
#include "homewatch/triage.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <fstream>
#include <iostream>

using namespace homewatch;
using nlohmann::json;

namespace {

const std::string kConfigDir = HOMEWATCH_DEFAULT_CONFIG_DIR;

class DiscardGateway final : public MessageGateway {
public:
    void deliver(const OutboundMessage&) override {}
};

CentreServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::unique_ptr<MessageGateway> make_gateway(const GatewayConfig& g) {
    if (g.type == "stdout") return std::make_unique<StdoutGateway>();
    return std::make_unique<FileGateway>(g.path);
}

int run_serve(const std::optional<std::string>& config_arg) {
    const auto path = resolve_config_path(config_arg);
    if (!path) {
        fmt::print(stderr, "no config: pass --config or set {}\n", kConfigEnvVar);
        return 1;
    }
    const DeploymentConfig cfg = load_deployment_config(*path);
    const auto questionnaire = load_questionnaire_file(cfg.questionnaire_path);
    auto rules = load_ruleset_file(cfg.ruleset_path, questionnaire);

    FileEventLog log(cfg.event_log_path, {cfg.fsync});
    auto base_gateway = make_gateway(cfg.gateway);
    std::unique_ptr<CaptureGateway> capture;
    MessageGateway* gateway = base_gateway.get();
    std::unique_ptr<ManualClock> manual;
    SystemClock system_clock;
    const Clock* clock = &system_clock;
    if (cfg.simulated_clock) {
        capture = std::make_unique<CaptureGateway>(*base_gateway);
        gateway = capture.get();
        manual = std::make_unique<ManualClock>(system_clock.now());
        clock = manual.get();
    }

    Notifier notifier(*gateway, cfg.retry);
    ServiceOptions options;
    options.base_url = cfg.base_url;
    options.scheduler = cfg.scheduler;
    options.default_reports_per_day = cfg.default_reports_per_day;
    options.snapshot_interval = cfg.snapshot_interval;
    options.synchronous_delivery = cfg.simulated_clock;
    Service service(questionnaire, std::move(rules), log, notifier, options);
    if (!cfg.simulated_clock) service.start_delivery_worker();

    ServerOptions server_options;
    server_options.operator_token = cfg.operator_token;
    server_options.simulated_clock = manual.get();
    server_options.capture = capture.get();
    CentreServer server(service, *clock, server_options);
    if (!cfg.simulated_clock) server.start_ticker(std::chrono::seconds(cfg.tick_interval_seconds));

    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    fmt::print(stderr, "homewatch listening on {}:{} (ruleset {}, {} events replayed)\n",
               cfg.listen_host, cfg.listen_port, service.rules().version(), log.last_seq());
    const bool ok = server.listen(cfg.listen_host, cfg.listen_port);
    g_server = nullptr;
    service.stop_delivery_worker();
    if (!ok) {
        fmt::print(stderr, "could not listen on {}:{}\n", cfg.listen_host, cfg.listen_port);
        return 1;
    }
    return 0;
}

struct SimulateArgs {
    CohortSpec spec;
    std::string mix;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::string> endpoint;
    bool in_process = false;
    std::optional<std::string> operator_token;
    std::optional<std::string> event_log;
    std::string questionnaire = kConfigDir + "/questionnaire.json";
    std::string ruleset = kConfigDir + "/ruleset-default-v1.json";
    bool skip_replay_check = false;
};

ReportFormat format_for(const SimulateArgs& a) {
    if (a.format) return parse_enum<ReportFormat>(*a.format);
    if (a.out) {
        const std::string& p = *a.out;
        if (p.ends_with(".csv")) return ReportFormat::Csv;
        if (p.ends_with(".txt")) return ReportFormat::Text;
    }
    return ReportFormat::Json;
}

ServiceOptions simulation_options() {
    ServiceOptions options;
    options.base_url = "http://sim.local";
    options.synchronous_delivery = true;
    auto next = std::make_shared<std::uint64_t>(0);
    options.patient_id_generator = [next] { return fmt::format("p-{:06}", ++*next); };
    return options;
}

int run_simulate(SimulateArgs& a) {
    if (!a.mix.empty()) a.spec.mix = parse_mix(a.mix);
    const Cohort cohort = generate_cohort(a.spec);
    const auto questionnaire = load_questionnaire_file(a.questionnaire);
    const auto rules = load_ruleset_file(a.ruleset, questionnaire);

    std::unique_ptr<EventLog> log;
    if (a.event_log) {
        log = std::make_unique<FileEventLog>(*a.event_log, FileEventLog::Options{false});
    } else {
        log = std::make_unique<MemoryEventLog>();
    }

    SimulationReport report;
    try {
        if (a.endpoint) {
            HttpTarget target(*a.endpoint, a.operator_token);
            report = run_simulation(cohort, target, rules, questionnaire);
        } else if (a.in_process) {
            MemoryGateway gateway;
            Notifier notifier(gateway, {}, [](Duration) {});
            Service service(questionnaire, rules, *log, notifier, simulation_options());
            InProcessTarget target(service, gateway, !a.skip_replay_check);
            report = run_simulation(cohort, target, rules, questionnaire);
        } else {
            // Default: a private server on a loopback port, driven through the public API.
            DiscardGateway sink;
            CaptureGateway capture(sink);
            Notifier notifier(capture, {}, [](Duration) {});
            Service service(questionnaire, rules, *log, notifier, simulation_options());
            ManualClock clock(a.spec.start);
            ServerOptions so;
            so.simulated_clock = &clock;
            so.capture = &capture;
            CentreServer server(service, clock, so);
            const int port = server.start_background("127.0.0.1");
            HttpTarget target(fmt::format("http://127.0.0.1:{}", port));
            report = run_simulation(cohort, target, rules, questionnaire);
            server.stop();
        }
    } catch (const InvariantViolation& v) {
        fmt::print(stderr, "simulation aborted: {} invariant violation(s)\n", v.problems().size());
        for (const auto& p : v.problems()) fmt::print(stderr, "  {}\n", p);
        return 3;
    } catch (const ServiceUnreachable& e) {
        fmt::print(stderr, "service unreachable: {}\n", e.what());
        return 4;
    }

    const ReportFormat fmt_out = format_for(a);
    if (a.out) {
        std::ofstream out(*a.out);
        if (!out) {
            fmt::print(stderr, "cannot write {}\n", *a.out);
            return 1;
        }
        report_out(report, fmt_out, out);
        report_out(report, ReportFormat::Text, std::cerr);
    } else {
        report_out(report, fmt_out, std::cout);
    }
    return 0;
}

int run_export(const std::string& log_path, const std::string& format, std::uint64_t first,
               std::uint64_t last, const std::optional<std::string>& out_path) {
    FileEventLog log(log_path, {false});
    const ExportFormat f = parse_enum<ExportFormat>(format);
    std::size_t rows = 0;
    if (out_path) {
        std::ofstream out(*out_path, std::ios::binary);
        if (!out) throw std::runtime_error(fmt::format("cannot write {}", *out_path));
        rows = export_events(log, {first, last}, f, out);
    } else {
        rows = export_events(log, {first, last}, f, std::cout);
    }
    fmt::print(stderr, "exported {} events\n", rows);
    return 0;
}

int run_replay(const std::string& log_path, bool full) {
    FileEventLog log(log_path, {false});
    CentreState state;
    try {
        state = replay(log);
    } catch (const CorruptEvent& e) {
        fmt::print(stderr, "{}\n", e.what());
        return 2;
    }
    if (full) {
        std::cout << state.to_json().dump(2) << '\n';
        return 0;
    }
    json summary{{"last_seq", state.last_seq()},
                 {"patients", state.patients().size()},
                 {"actions", state.actions().size()},
                 {"stats", to_json(state.stats())},
                 {"totals", state.totals()}};
    std::cout << summary.dump(2) << '\n';
    return 0;
}

json read_json_file(const std::string& path) { return json::parse(read_text_file(path)); }

int run_classify(const std::string& questionnaire_path, const std::string& ruleset_path,
                 const std::string& report_path, const std::optional<std::string>& previous_path) {
    const auto questionnaire = load_questionnaire_file(questionnaire_path);
    const auto rules = load_ruleset_file(ruleset_path, questionnaire);
    const SymptomReport current =
        validate_report(questionnaire, read_json_file(report_path), Timestamp{}, "cli");
    std::optional<SymptomReport> previous;
    if (previous_path) {
        previous = validate_report(questionnaire, read_json_file(*previous_path), Timestamp{}, "cli");
    }
    const TriageResult result = triage(rules, current, previous ? &*previous : nullptr);
    json fired = json::array();
    for (const auto& e : explain(rules, current, previous)) {
        for (const Rule& r : rules.rules()) {
            if (r.name == e.rule) fired.push_back({{"rule", r.name}, {"predicate", r.source}});
        }
    }
    std::cout << json{{"ruleset", rules.version()}, {"category", result.category}, {"fired", fired}}.dump(2)
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"homewatch: remote patient monitoring Command Centre"};
    app.require_subcommand(1);

    std::optional<std::string> config;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--config", config, "Deployment config file (default: $HOMEWATCH_CONFIG)");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a synthetic cohort through the service");
    simulate->add_option("--patients", sim.spec.n_patients, "Cohort size")->capture_default_str();
    simulate->add_option("--days", sim.spec.days, "Simulated days")->capture_default_str();
    simulate->add_option("--seed", sim.spec.seed, "Random seed")->capture_default_str();
    simulate->add_option("--mix", sim.mix,
                         "Archetype probabilities, e.g. stable=0.3,deteriorating=0.1,quarantine=0.05,"
                         "nonresponder=0.1 (remainder asymptomatic)");
    simulate->add_option("--out", sim.out, "Report file (format from extension unless --format)");
    simulate->add_option("--format", sim.format, "json, text or csv");
    auto* endpoint = simulate->add_option("--endpoint", sim.endpoint,
                                          "Drive a running server (started with simulated_clock)");
    auto* in_process = simulate->add_flag("--in-process", sim.in_process, "Call the service directly");
    endpoint->excludes(in_process);
    simulate->add_option("--operator-token", sim.operator_token, "Token for --endpoint");
    simulate->add_option("--event-log", sim.event_log, "Keep the run's event log in this file");
    simulate->add_option("--skip-prob", sim.spec.skip_probability,
                         "Non-responder skip probability per dispatch")->capture_default_str();
    simulate->add_option("--contact-prob", sim.spec.contact_probability,
                         "Emergency contact probability per report")->capture_default_str();
    simulate->add_option("--reports-per-day", sim.spec.reports_per_day)->capture_default_str();
    simulate->add_option("--latency-min", sim.spec.latency_min_minutes)->capture_default_str();
    simulate->add_option("--latency-max", sim.spec.latency_max_minutes)->capture_default_str();
    simulate->add_option("--questionnaire", sim.questionnaire)->capture_default_str();
    simulate->add_option("--ruleset", sim.ruleset)->capture_default_str();
    simulate->add_flag("--skip-replay-check", sim.skip_replay_check,
                       "In-process: skip the final full replay comparison");

    std::string log_path;
    std::string export_format = "jsonl";
    std::uint64_t first = 1;
    std::uint64_t last = std::numeric_limits<std::uint64_t>::max();
    std::optional<std::string> export_out;
    auto* exp = app.add_subcommand("export", "Export the event log as a pseudonymized dataset");
    exp->add_option("--log", log_path, "Event log file")->required();
    exp->add_option("--format", export_format, "jsonl or csv")->capture_default_str();
    exp->add_option("--from", first, "First seq")->capture_default_str();
    exp->add_option("--to", last, "Last seq");
    exp->add_option("--out", export_out, "Output file (default stdout)");

    bool full = false;
    auto* rep = app.add_subcommand("replay", "Fold an event log and print the resulting state");
    rep->add_option("--log", log_path, "Event log file")->required();
    rep->add_flag("--full", full, "Print the whole read model");

    std::string questionnaire = kConfigDir + "/questionnaire.json";
    std::string ruleset = kConfigDir + "/ruleset-default-v1.json";
    std::string report_file;
    std::optional<std::string> previous_file;
    auto* cls = app.add_subcommand("classify", "Triage one report offline");
    cls->add_option("--questionnaire", questionnaire)->capture_default_str();
    cls->add_option("--ruleset", ruleset)->capture_default_str();
    cls->add_option("--report", report_file, "Answers JSON")->required();
    cls->add_option("--previous", previous_file, "Previous answers JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) return run_serve(config);
        if (*simulate) return run_simulate(sim);
        if (*exp) return run_export(log_path, export_format, first, last, export_out);
        if (*rep) return run_replay(log_path, full);
        if (*cls) return run_classify(questionnaire, ruleset, report_file, previous_file);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
