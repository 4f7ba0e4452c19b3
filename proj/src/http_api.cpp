#include "homewatch/http_api.hpp"

#include <httplib.h>
#include <fmt/format.h>

#include <atomic>
#include <charconv>
#include <condition_variable>
#include <thread>

namespace homewatch {

using nlohmann::json;

void CaptureGateway::deliver(const OutboundMessage& message) {
    inner_.deliver(message);
    if (message.purpose == MessagePurpose::Questionnaire) {
        std::lock_guard lock(mutex_);
        captured_.push_back(message);
    }
}

std::vector<OutboundMessage> CaptureGateway::drain() {
    std::lock_guard lock(mutex_);
    return std::exchange(captured_, {});
}

int http_status(std::string_view code) {
    static const std::map<std::string_view, int> kStatus = {
        {"invalid_request", 400},       {"unauthorized", 401},
        {"not_found", 404},             {"token_unknown", 404},
        {"duplicate_patient", 409},     {"illegal_transition", 409},
        {"patient_not_monitoring", 409}, {"token_consumed", 409},
        {"token_expired", 410},         {"not_eligible", 422},
        {"missing_required_item", 422}, {"out_of_range", 422},
        {"unknown_item", 422},          {"wrong_type", 422},
        {"internal", 500},              {"storage_failure", 503},
    };
    auto it = kStatus.find(code);
    return it == kStatus.end() ? 500 : it->second;
}

namespace {

struct ApiError {
    std::string code;
    std::string message;
    json detail;
};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message,
                const json& detail = nullptr) {
    json body = {{"code", code}, {"message", message}};
    if (!detail.is_null()) body["detail"] = detail;
    send_json(res, http_status(code), body);
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw ApiError{"invalid_request", fmt::format("body is not valid JSON: {}", e.what()), {}};
    }
}

std::optional<bool> parse_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    return std::nullopt;
}

std::size_t parse_size(const std::string& s, const char* name) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ApiError{"invalid_request", fmt::format("{} must be a non-negative integer", name), {}};
    }
    return v;
}

std::string encode_cursor(std::size_t offset) {
    return base64url_encode(fmt::format("o:{}", offset));
}

std::size_t decode_cursor(const std::string& cursor) {
    auto raw = base64url_decode(cursor);
    if (!raw || raw->rfind("o:", 0) != 0) throw ApiError{"invalid_request", "bad cursor", {}};
    return parse_size(raw->substr(2), "cursor");
}

json action_json(const ActionItem& a) {
    json j = a;
    j["created_at"] = format_iso8601(a.created_at);
    return j;
}

json validation_detail(const ValidationError& e) {
    json d = {{"key", e.key()}};
    if (e.kind() == ValidationErrorKind::OutOfRange) {
        d["value"] = e.value();
        d["min"] = e.min();
        d["max"] = e.max();
    }
    return d;
}

std::string html_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string questionnaire_form(const QuestionnaireDefinition& def, const std::string& token) {
    std::string html =
        "<!doctype html><html><head><meta charset=\"utf-8\">"
        "<meta name=\"viewport\" content=\"width=device-width\"><title>Daily questionnaire</title>"
        "</head><body><h1>Daily questionnaire</h1>";
    html += fmt::format("<form method=\"post\" action=\"/q/{}\">", html_escape(token));
    for (const Item& item : def.items) {
        const std::string key = html_escape(item.key);
        html += fmt::format("<p><label for=\"{0}\">{1}</label><br>", key, html_escape(item.label));
        if (item.kind == ItemKind::Boolean) {
            html += fmt::format(
                "<select id=\"{0}\" name=\"{0}\"><option value=\"false\">No</option>"
                "<option value=\"true\">Yes</option></select>",
                key);
        } else {
            html += fmt::format(
                "<input id=\"{0}\" name=\"{0}\" type=\"number\" min=\"{1}\" max=\"{2}\" step=\"{3}\""
                " required> {4}",
                key, item.min, item.max, item.kind == ItemKind::Scale0To10 ? "1" : "0.1",
                html_escape(item.unit));
        }
        html += "</p>";
    }
    html += "<p><button type=\"submit\">Send</button></p></form></body></html>";
    return html;
}

/// Form fields become typed JSON: booleans for boolean items, numbers where they parse, and
/// the raw string otherwise so validation reports wrong_type.
json form_to_answers(const QuestionnaireDefinition& def, const httplib::Params& params) {
    json answers = json::object();
    for (const auto& [key, value] : params) {
        const Item* item = def.find(key);
        if (item && item->kind == ItemKind::Boolean) {
            if (auto b = parse_bool(value)) {
                answers[key] = *b;
                continue;
            }
        } else if (item) {
            double d = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
            if (ec == std::errc{} && p == value.data() + value.size()) {
                answers[key] = d;
                continue;
            }
        }
        answers[key] = value;
    }
    return answers;
}

bool wants_html(const httplib::Request& req) {
    const std::string accept = req.get_header_value("Accept");
    return accept.find("text/html") != std::string::npos &&
           accept.find("application/json") == std::string::npos;
}

}  // namespace

struct CentreServer::Impl {
    Service& service;
    const Clock& clock;
    ServerOptions options;
    httplib::Server server;
    std::thread thread;
    std::thread ticker;
    std::mutex ticker_mutex;
    std::condition_variable ticker_cv;
    bool stopping = false;
    std::atomic<bool> shutting_down{false};

    Impl(Service& s, const Clock& c, ServerOptions o) : service(s), clock(c), options(std::move(o)) {
        server.set_tcp_nodelay(true);
        routes();
    }

    Timestamp now() const { return clock.now(); }

    template <typename F>
    httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const ApiError& e) {
                send_error(res, e.code, e.message, e.detail);
            } catch (const ServiceError& e) {
                send_error(res, std::string(to_string(e.code())), e.what());
            } catch (const TokenError& e) {
                send_error(res, std::string(to_string(e.kind())), e.what());
            } catch (const ValidationError& e) {
                send_error(res, std::string(to_string(e.kind())), e.what(), validation_detail(e));
            } catch (const json::exception& e) {
                send_error(res, "invalid_request", e.what());
            } catch (const std::invalid_argument& e) {
                send_error(res, "invalid_request", e.what());
            }
        };
    }

    static bool patient_facing(const std::string& path) {
        if (path.rfind("/q/", 0) == 0) return true;
        constexpr std::string_view kContact = "/contact";
        return path.rfind("/patients/", 0) == 0 && path.size() > kContact.size() &&
               path.compare(path.size() - kContact.size(), kContact.size(), kContact) == 0;
    }

    void routes() {
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (!options.operator_token || patient_facing(req.path)) {
                return httplib::Server::HandlerResponse::Unhandled;
            }
            if (req.get_header_value("X-Operator-Token") != *options.operator_token) {
                send_error(res, "unauthorized", "missing or wrong X-Operator-Token");
                return httplib::Server::HandlerResponse::Handled;
            }
            return httplib::Server::HandlerResponse::Unhandled;
        });
        server.set_exception_handler(
            [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
                std::string what = "unexpected error";
                try {
                    std::rethrow_exception(ep);
                } catch (const std::exception& e) {
                    what = e.what();
                } catch (...) {
                }
                send_error(res, "internal", what);
            });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty() && res.status == 404) {
                send_error(res, "not_found", "no such endpoint");
            }
        });

        server.Post("/patients", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req);
            EnrollmentForm form;
            form.external_ref = body.value("external_ref", "");
            form.phone = body.value("phone", "");
            if (auto it = body.find("gp_contact"); it != body.end() && !it->is_null()) {
                form.gp_contact = it->get<std::string>();
            }
            form.eligibility = body.at("eligibility").get<Eligibility>();
            if (auto it = body.find("reports_per_day"); it != body.end() && !it->is_null()) {
                form.reports_per_day = it->get<int>();
            }
            const std::string id = service.enroll(form, now());
            send_json(res, 201, {{"patient_id", id}});
        }));

        server.Get("/patients", guarded([this](const httplib::Request& req, httplib::Response& res) {
            PatientQuery q;
            if (req.has_param("category")) q.category = parse_enum<TriageCategory>(req.get_param_value("category"));
            if (req.has_param("status")) q.status = parse_enum<LifecycleStatus>(req.get_param_value("status"));
            for (auto [name, field] : {std::pair{"overdue", &q.overdue},
                                       std::pair{"needs_action", &q.needs_action}}) {
                if (!req.has_param(name)) continue;
                auto b = parse_bool(req.get_param_value(name));
                if (!b) throw ApiError{"invalid_request", fmt::format("{} must be a boolean", name), {}};
                *field = *b;
            }
            q.search = req.get_param_value("search");
            if (req.has_param("cursor")) q.offset = decode_cursor(req.get_param_value("cursor"));
            const PatientPage page = service.list_patients(q);
            json items = json::array();
            for (const auto& row : page.rows) items.push_back(to_json(row));
            json body = {{"items", std::move(items)}, {"total", page.total}, {"next_cursor", nullptr}};
            if (page.next_offset) body["next_cursor"] = encode_cursor(*page.next_offset);
            send_json(res, 200, body);
        }));

        server.Get("/patients/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const PatientDetail d = service.patient_detail(req.path_params.at("id"));
            json actions = json::array();
            for (const auto& a : d.actions) actions.push_back(action_json(a));
            json patient = d.patient;
            patient.erase("phone");
            send_json(res, 200,
                      {{"patient", std::move(patient)},
                       {"row", to_json(d.row)},
                       {"timeline", d.timeline},
                       {"actions", std::move(actions)}});
        }));

        server.Post("/patients/:id/contact", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string action = service.contact(req.path_params.at("id"), now());
            send_json(res, 201, {{"action_id", action}});
        }));

        server.Post("/patients/:id/discharge", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string& id = req.path_params.at("id");
            service.discharge(id, now());
            send_json(res, 200, {{"patient_id", id}, {"status", "Discharged"}});
        }));

        server.Get("/q/:token", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string& token = req.path_params.at("token");
            json q = service.questionnaire_for(token, now());
            if (wants_html(req)) {
                res.set_content(questionnaire_form(service.questionnaire(), token), "text/html");
            } else {
                send_json(res, 200, q);
            }
        }));

        server.Post("/q/:token", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string& token = req.path_params.at("token");
            const bool form = req.get_header_value("Content-Type").rfind("application/x-www-form-urlencoded", 0) == 0;
            json answers;
            if (form) {
                answers = form_to_answers(service.questionnaire(), req.params);
            } else {
                json body = parse_body(req);
                answers = body.contains("answers") ? body["answers"] : body;
            }
            const SubmitResult r = service.submit_report(token, answers, now());
            if (form) {
                const std::string text = r.message_to_patient.value_or(
                    "Thank you. Your answers have been received and a clinician will contact you.");
                res.set_content(fmt::format("<!doctype html><html><body><p>{}</p></body></html>",
                                            html_escape(text)),
                                "text/html");
                return;
            }
            send_json(res, 200,
                      {{"report_id", r.report_id},
                       {"category", r.category},
                       {"fired_rules", r.fired_rules},
                       {"message", r.message_to_patient},
                       {"action_id", r.action_id}});
        }));

        server.Post("/actions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req);
            ActionTransition t;
            const std::string op = body.value("op", "");
            if (op == "acknowledge") {
                t.type = ActionTransition::Type::Acknowledge;
            } else if (op == "resolve") {
                t.type = ActionTransition::Type::Resolve;
                t.kind = parse_enum<ActionKind>(body.at("kind").get<std::string>());
                t.note = body.value("note", "");
            } else {
                throw ApiError{"invalid_request", "op must be acknowledge or resolve", {}};
            }
            send_json(res, 200, action_json(service.act(req.path_params.at("id"), t, now())));
        }));

        server.Get("/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, to_json(service.stats()));
        }));

        server.Get("/dead-letters", guarded([this](const httplib::Request&, httplib::Response& res) {
            json out = json::array();
            for (const auto& m : service.dead_letters()) out.push_back(to_sink_json(m));
            send_json(res, 200, out);
        }));

        server.Get("/updates", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::uint64_t since = 0;
            for (const char* name : {"since", "since_seq"}) {
                if (req.has_param(name)) since = parse_size(req.get_param_value(name), name);
            }
            const bool follow = req.has_param("follow") && parse_bool(req.get_param_value("follow")).value_or(false);
            if (!follow) {
                const std::size_t limit = req.has_param("limit")
                                              ? parse_size(req.get_param_value("limit"), "limit")
                                              : 1000;
                std::string body;
                for (const auto& item : service.updates(since, limit)) {
                    body += item.dump();
                    body += '\n';
                }
                res.set_content(body, "application/x-ndjson");
                return;
            }
            auto cursor = std::make_shared<std::uint64_t>(since);
            res.set_chunked_content_provider(
                "application/x-ndjson", [this, cursor](std::size_t, httplib::DataSink& sink) {
                    if (shutting_down) {
                        sink.done();
                        return true;
                    }
                    auto items = service.updates(*cursor, 500);
                    if (items.empty()) {
                        if (!service.wait_for_updates(*cursor, options.heartbeat)) {
                            return sink.write("\n", 1);
                        }
                        items = service.updates(*cursor, 500);
                    }
                    for (const auto& item : items) {
                        const std::string line = item.dump() + "\n";
                        if (!sink.write(line.data(), line.size())) return false;
                        *cursor = item.at("seq").get<std::uint64_t>();
                    }
                    return true;
                });
        }));

        if (options.simulated_clock) admin_routes();
    }

    void admin_routes() {
        server.Post("/admin/clock", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req);
            options.simulated_clock->set(parse_iso8601(body.at("now").get<std::string>()));
            send_json(res, 200, {{"now", format_iso8601(now())}});
        }));
        server.Post("/admin/tick", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = parse_body(req);
            if (body.contains("now")) {
                options.simulated_clock->set(parse_iso8601(body.at("now").get<std::string>()));
            }
            const TickResult r = service.tick(now());
            service.deliver_pending();
            json messages = json::array();
            if (options.capture) {
                for (const auto& m : options.capture->drain()) {
                    json j = to_sink_json(m);
                    j["patient_id"] = m.related_patient_id;
                    messages.push_back(std::move(j));
                }
            }
            send_json(res, 200,
                      {{"now", format_iso8601(now())},
                       {"dispatches", r.dispatches},
                       {"overdue", r.overdue},
                       {"failures", r.failures},
                       {"messages", std::move(messages)}});
        }));
        server.Get("/admin/totals", guarded([this](const httplib::Request&, httplib::Response& res) {
            json j = service.state_copy().totals();
            send_json(res, 200, j);
        }));
    }

    void stop_ticker() {
        {
            std::lock_guard lock(ticker_mutex);
            stopping = true;
        }
        ticker_cv.notify_all();
        if (ticker.joinable()) ticker.join();
    }
};

CentreServer::CentreServer(Service& service, const Clock& clock, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, clock, std::move(options))) {}

CentreServer::~CentreServer() { stop(); }

bool CentreServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int CentreServer::start_background(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0) throw std::runtime_error("could not bind a port");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void CentreServer::stop() {
    impl_->shutting_down = true;
    impl_->stop_ticker();
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

void CentreServer::start_ticker(std::chrono::seconds interval) {
    Impl& impl = *impl_;
    impl.ticker = std::thread([&impl, interval] {
        std::unique_lock lock(impl.ticker_mutex);
        while (!impl.stopping) {
            lock.unlock();
            try {
                impl.service.tick(impl.clock.now());
            } catch (const std::exception& e) {
                fmt::print(stderr, "tick failed: {}\n", e.what());
            }
            lock.lock();
            impl.ticker_cv.wait_for(lock, interval, [&] { return impl.stopping; });
        }
    });
}

}  // namespace homewatch
