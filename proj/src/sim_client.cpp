#include "homewatch/simulator.hpp"

#include <httplib.h>
#include <fmt/format.h>

namespace homewatch {

using nlohmann::json;

std::string token_from_sms(std::string_view body) {
    const std::size_t at = body.find("/q/");
    if (at == std::string_view::npos) return {};
    std::size_t end = at + 3;
    while (end < body.size()) {
        const char c = body[end];
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) break;
        ++end;
    }
    return std::string(body.substr(at + 3, end - at - 3));
}

// ---------------------------------------------------------------------------
// In-process
// ---------------------------------------------------------------------------

std::string InProcessTarget::enroll(const EnrollmentForm& form, Timestamp now) {
    return service_.enroll(form, now);
}

std::vector<DispatchNotice> InProcessTarget::tick(Timestamp now) {
    service_.tick(now);
    service_.deliver_pending();
    std::vector<DispatchNotice> out;
    for (const auto& m : gateway_.drain()) {
        if (m.purpose != MessagePurpose::Questionnaire) continue;
        out.push_back({m.related_patient_id, token_from_sms(m.body)});
    }
    return out;
}

SubmitOutcome InProcessTarget::submit(const std::string& token, const json& answers, Timestamp now) {
    SubmitResult r = service_.submit_report(token, answers, now);
    return {r.category, std::move(r.fired_rules)};
}

void InProcessTarget::contact(const std::string& patient_id, Timestamp now) {
    service_.contact(patient_id, now);
}

CentreTotals InProcessTarget::totals() { return service_.totals(); }

std::map<std::string, std::vector<TriageCategory>> InProcessTarget::category_sequences() {
    std::map<std::string, std::vector<TriageCategory>> out;
    service_.log().read(0, [&](const Event& e) {
        if (const auto* f = e.as<FlagChanged>()) out[e.patient_id].push_back(f->to);
    });
    return out;
}

CentreStats InProcessTarget::stats() { return service_.stats(); }

std::vector<std::string> InProcessTarget::final_checks() {
    std::vector<std::string> problems;
    gateway_.drain();
    if (!check_replay_) return problems;
    const CentreState replayed = replay(service_.log());
    const json live = service_.state_json();
    const json folded = replayed.to_json();
    if (live != folded) {
        for (const auto& item : json::diff(live, folded)) {
            problems.push_back(fmt::format("replay differs at {}", item.value("path", "?")));
            if (problems.size() >= 5) break;
        }
    }
    if (replayed.stats() != service_.stats()) problems.push_back("replayed stats differ from live stats");
    return problems;
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

struct HttpTarget::Impl {
    httplib::Client client;
    httplib::Headers headers;

    Impl(const std::string& endpoint, const std::optional<std::string>& token) : client(endpoint) {
        client.set_keep_alive(true);
        client.set_tcp_nodelay(true);
        client.set_connection_timeout(5);
        client.set_read_timeout(60);
        if (token) headers.emplace("X-Operator-Token", *token);
    }

    [[noreturn]] void fail(const std::string& what, const httplib::Result& res) {
        if (!res) {
            throw ServiceUnreachable(fmt::format("{}: {}", what, httplib::to_string(res.error())));
        }
        throw std::runtime_error(fmt::format("{}: HTTP {} {}", what, res->status, res->body));
    }

    json post(const std::string& path, const json& body, int expected = 200) {
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res || res->status != expected) fail("POST " + path, res);
        return json::parse(res->body);
    }

    json get(const std::string& path) {
        auto res = client.Get(path, headers);
        if (!res || res->status != 200) fail("GET " + path, res);
        return json::parse(res->body);
    }

    void set_clock(Timestamp now) { post("/admin/clock", {{"now", format_iso8601(now)}}); }
};

HttpTarget::HttpTarget(const std::string& endpoint, std::optional<std::string> operator_token)
    : impl_(std::make_unique<Impl>(endpoint, operator_token)) {}

HttpTarget::~HttpTarget() = default;

std::string HttpTarget::enroll(const EnrollmentForm& form, Timestamp now) {
    impl_->set_clock(now);
    json body{{"external_ref", form.external_ref},
              {"phone", form.phone},
              {"gp_contact", form.gp_contact},
              {"eligibility", form.eligibility}};
    if (form.reports_per_day) body["reports_per_day"] = *form.reports_per_day;
    return impl_->post("/patients", body, 201).at("patient_id").get<std::string>();
}

std::vector<DispatchNotice> HttpTarget::tick(Timestamp now) {
    const json r = impl_->post("/admin/tick", {{"now", format_iso8601(now)}});
    std::vector<DispatchNotice> out;
    for (const auto& m : r.at("messages")) {
        out.push_back({m.at("patient_id").get<std::string>(),
                       token_from_sms(m.at("body").get<std::string>())});
    }
    return out;
}

SubmitOutcome HttpTarget::submit(const std::string& token, const json& answers, Timestamp now) {
    impl_->set_clock(now);
    const json r = impl_->post("/q/" + token, {{"answers", answers}});
    return {parse_enum<TriageCategory>(r.at("category").get<std::string>()),
            r.at("fired_rules").get<std::vector<std::string>>()};
}

void HttpTarget::contact(const std::string& patient_id, Timestamp now) {
    impl_->set_clock(now);
    impl_->post(fmt::format("/patients/{}/contact", patient_id), json::object(), 201);
}

CentreTotals HttpTarget::totals() { return impl_->get("/admin/totals").get<CentreTotals>(); }

std::map<std::string, std::vector<TriageCategory>> HttpTarget::category_sequences() {
    std::map<std::string, std::vector<TriageCategory>> out;
    std::uint64_t since = 0;
    for (;;) {
        auto res = impl_->client.Get(fmt::format("/updates?since={}&limit=5000", since), impl_->headers);
        if (!res || res->status != 200) impl_->fail("GET /updates", res);
        std::size_t lines = 0;
        std::size_t pos = 0;
        const std::string& body = res->body;
        while (pos < body.size()) {
            std::size_t nl = body.find('\n', pos);
            if (nl == std::string::npos) nl = body.size();
            if (nl > pos) {
                const json item = json::parse(body.substr(pos, nl - pos));
                since = item.at("seq").get<std::uint64_t>();
                ++lines;
                if (item.at("kind") == "flag_changed") {
                    out[item.at("patient_id").get<std::string>()].push_back(
                        parse_enum<TriageCategory>(item.at("payload").at("to").get<std::string>()));
                }
            }
            pos = nl + 1;
        }
        if (lines == 0) break;
    }
    return out;
}

CentreStats HttpTarget::stats() {
    const json j = impl_->get("/stats");
    CentreStats s;
    for (const auto c : kAllCategories) {
        s.categories[index_of(c)] = j.at("categories").at(std::string(to_string(c))).get<std::size_t>();
    }
    s.overdue = j.at("overdue").get<std::size_t>();
    s.open_actions = j.at("open_actions").get<std::size_t>();
    s.monitoring = j.at("monitoring").get<std::size_t>();
    s.enrolled_total = j.at("enrolled_total").get<std::size_t>();
    s.hospitalized = j.at("hospitalized").get<std::size_t>();
    s.discharged = j.at("discharged").get<std::size_t>();
    return s;
}

}  // namespace homewatch
