#include "homewatch/simulator.hpp"

#include "homewatch/reference.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace homewatch {

using nlohmann::json;

InvariantViolation::InvariantViolation(std::vector<std::string> problems)
    : std::runtime_error(fmt::format("invariant violation: {}",
                                     problems.empty() ? std::string("unknown") : problems.front())),
      problems_(std::move(problems)) {}

// ---------------------------------------------------------------------------
// Spec
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    return std::string(s.substr(first, s.find_last_not_of(" \t") - first + 1));
}

}  // namespace

CohortMix parse_mix(std::string_view text) {
    CohortMix mix;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        const std::string_view part = text.substr(pos, comma - pos);
        pos = comma + 1;
        if (part.empty()) continue;
        const std::size_t eq = part.find('=');
        if (eq == std::string_view::npos) throw InvalidSpec(fmt::format("mix entry '{}' lacks '='", part));
        const std::string name = trim(part.substr(0, eq));
        const std::string value = trim(part.substr(eq + 1));
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InvalidSpec(fmt::format("mix value '{}' is not a number", value));
        }
        if (name == "stable") mix.stable = v;
        else if (name == "deteriorating") mix.deteriorating = v;
        else if (name == "quarantine") mix.quarantine = v;
        else if (name == "nonresponder") mix.nonresponder = v;
        else throw InvalidSpec(fmt::format("unknown archetype '{}' in mix", name));
    }
    return mix;
}

void validate(const CohortSpec& spec) {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidSpec(fmt::format("{} must be in [0, 1]", name));
    };
    if (spec.n_patients < 1) throw InvalidSpec("n_patients must be at least 1");
    if (spec.days < 1) throw InvalidSpec("days must be at least 1");
    prob(spec.mix.stable, "mix.stable");
    prob(spec.mix.deteriorating, "mix.deteriorating");
    prob(spec.mix.quarantine, "mix.quarantine");
    prob(spec.mix.nonresponder, "mix.nonresponder");
    const double total =
        spec.mix.stable + spec.mix.deteriorating + spec.mix.quarantine + spec.mix.nonresponder;
    if (total > 1.0 + 1e-9) throw InvalidSpec("mix probabilities sum to more than 1");
    prob(spec.skip_probability, "skip_probability");
    prob(spec.contact_probability, "contact_probability");
    if (spec.latency_min_minutes < 1 || spec.latency_max_minutes < spec.latency_min_minutes) {
        throw InvalidSpec("latency range must satisfy 1 <= min <= max");
    }
    if (spec.reports_per_day != 1 && spec.reports_per_day != 2) {
        throw InvalidSpec("reports_per_day must be 1 or 2");
    }
}

// ---------------------------------------------------------------------------
// Randomness. Every draw comes from a generator keyed by (seed, patient, purpose, ordinal), so
// scripts do not depend on the order in which the run asks for them.
// ---------------------------------------------------------------------------

namespace {

enum class Stream : std::uint32_t { Profile = 1, Answers = 2, Response = 3 };

class Draw {
public:
    Draw(std::uint64_t seed, std::size_t patient, Stream stream, std::size_t ordinal) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(patient),
                          static_cast<std::uint32_t>(patient >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(ordinal)};
        engine_.seed(seq);
    }

    /// Uniform in [0, 1) from the top 53 bits; identical on every platform.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi].
    int between(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

private:
    std::mt19937_64 engine_;
};

double tenth(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

Cohort generate_cohort(const CohortSpec& spec) {
    validate(spec);
    Cohort cohort;
    cohort.spec = spec;
    cohort.patients.reserve(static_cast<std::size_t>(spec.n_patients));
    const int max_reports = spec.days * spec.reports_per_day;
    for (int i = 0; i < spec.n_patients; ++i) {
        Draw d(spec.seed, static_cast<std::size_t>(i), Stream::Profile, 0);
        SimPatient p;
        p.index = static_cast<std::size_t>(i);
        p.external_ref = fmt::format("sim-{:06}", i);

        const double u = d.unit();
        const CohortMix& m = spec.mix;
        double edge = m.stable;
        if (u < edge) {
            p.archetype = Archetype::Stable;
        } else if (u < (edge += m.deteriorating)) {
            p.archetype = Archetype::Deteriorating;
        } else if (u < (edge += m.quarantine)) {
            p.archetype = Archetype::QuarantineIssue;
        } else if (u < (edge += m.nonresponder)) {
            p.archetype = Archetype::NonResponder;
        } else {
            p.archetype = Archetype::Asymptomatic;
        }

        switch (p.archetype) {
            case Archetype::Stable:
                p.base_temperature = 37.0 + 0.1 * d.between(0, 14);
                p.base_dyspnea = d.between(1, 3);
                p.base_pain = d.between(1, 4);
                p.base_distress = d.between(0, 3);
                break;
            case Archetype::Deteriorating:
                p.base_temperature = 37.0 + 0.1 * d.between(0, 4);
                p.base_dyspnea = d.between(0, 2);
                p.base_pain = d.between(0, 3);
                p.base_distress = d.between(0, 3);
                p.abrupt = d.unit() < 0.5;
                p.jump_at = d.between(1, 4);
                if (d.unit() < 0.5) {
                    p.jump_temperature = 1.2;
                    p.jump_dyspnea = 2;
                } else {
                    p.jump_temperature = 2.3;
                    p.jump_dyspnea = 3;
                }
                break;
            case Archetype::QuarantineIssue:
                p.base_temperature = 36.4 + 0.1 * d.between(0, 5);
                p.problem_from = d.between(0, std::max(0, max_reports - 1));
                p.problem_length = d.between(1, 3);
                break;
            case Archetype::Asymptomatic:
            case Archetype::NonResponder:
                p.base_temperature = 36.4 + 0.1 * d.between(0, 5);
                break;
        }
        p.base_temperature = tenth(p.base_temperature);
        cohort.patients.push_back(std::move(p));
    }
    return cohort;
}

json answers_for(const Cohort& cohort, const SimPatient& p, std::size_t ordinal) {
    const auto k = static_cast<int>(ordinal);
    double temperature = p.base_temperature;
    int dyspnea = p.base_dyspnea;
    int pain = p.base_pain;
    int distress = p.base_distress;
    bool quarantine_problem = false;
    bool household_change = false;

    switch (p.archetype) {
        case Archetype::Asymptomatic:
        case Archetype::NonResponder: {
            Draw d(cohort.spec.seed, p.index, Stream::Answers, ordinal);
            temperature = 36.4 + 0.1 * d.between(0, 5);
            break;
        }
        case Archetype::Stable:
            break;
        case Archetype::Deteriorating: {
            temperature = std::min(40.5, p.base_temperature + 0.3 * k);
            dyspnea = std::min(10, p.base_dyspnea + k / 2);
            if (p.abrupt && k >= p.jump_at) {
                temperature = std::min(41.5, temperature + p.jump_temperature);
                dyspnea = std::min(10, dyspnea + p.jump_dyspnea);
            }
            break;
        }
        case Archetype::QuarantineIssue: {
            Draw d(cohort.spec.seed, p.index, Stream::Answers, ordinal);
            temperature = 36.4 + 0.1 * d.between(0, 5);
            quarantine_problem = k >= p.problem_from && k < p.problem_from + p.problem_length;
            household_change = k == p.problem_from;
            if (quarantine_problem) distress = 3;
            break;
        }
    }
    return json{{"temperature_c", tenth(temperature)},
                {"dyspnea", dyspnea},
                {"pain", pain},
                {"distress", distress},
                {"quarantine_problem", quarantine_problem},
                {"household_change", household_change}};
}

ResponsePlan response_for(const Cohort& cohort, const SimPatient& p, std::size_t dispatch_ordinal) {
    Draw d(cohort.spec.seed, p.index, Stream::Response, dispatch_ordinal);
    ResponsePlan plan;
    const double skip = d.unit();
    plan.respond = !(p.archetype == Archetype::NonResponder && skip < cohort.spec.skip_probability);
    plan.latency_minutes = d.between(cohort.spec.latency_min_minutes, cohort.spec.latency_max_minutes);
    plan.contact = d.unit() < cohort.spec.contact_probability;
    return plan;
}

std::vector<TriageCategory> oracle_categories(const Cohort& cohort, const SimPatient& patient,
                                              const RuleSet& rules,
                                              const QuestionnaireDefinition& questionnaire,
                                              std::size_t count) {
    std::vector<TriageCategory> out;
    out.reserve(count);
    std::optional<SymptomReport> previous;
    for (std::size_t k = 0; k < count; ++k) {
        SymptomReport report = validate_report(questionnaire, answers_for(cohort, patient, k),
                                               Timestamp{}, patient.external_ref);
        out.push_back(reference_classify(rules, report, previous ? &*previous : nullptr));
        previous = std::move(report);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

namespace {

struct PendingResponse {
    std::size_t patient = 0;
    std::string token;
    bool contact = false;
};

struct RunCounters {
    std::uint64_t submitted = 0;
    std::uint64_t contacts = 0;
    std::array<std::uint64_t, 4> categories{};
};

std::vector<std::string> conservation_problems(const CentreTotals& t, const RunCounters& c,
                                               std::uint64_t patients) {
    std::vector<std::string> problems;
    auto check = [&](std::uint64_t lhs, std::uint64_t rhs, std::string_view what) {
        if (lhs != rhs) problems.push_back(fmt::format("{}: {} != {}", what, lhs, rhs));
    };
    const auto& cat = t.reports_by_category;
    const auto& act = t.actions_by_trigger;
    auto trig = [&](ActionTrigger tr) { return act[static_cast<std::size_t>(tr)]; };
    const std::uint64_t actions = std::accumulate(act.begin(), act.end(), std::uint64_t{0});

    check(t.reassurance_messages, cat[0] + cat[1], "reassurance messages vs Green+Yellow reports");
    check(trig(ActionTrigger::OrangeFlag), cat[2], "OrangeFlag actions vs Orange reports");
    check(trig(ActionTrigger::RedFlag), cat[3], "RedFlag actions vs Red reports");
    check(trig(ActionTrigger::NonResponder), t.overdue_detections,
          "NonResponder actions vs overdue detections");
    check(trig(ActionTrigger::PatientInitiated), c.contacts,
          "PatientInitiated actions vs contacts made");
    check(actions, cat[2] + cat[3] + t.overdue_detections + c.contacts,
          "action items vs Orange+Red+overdue+contacts");
    check(t.gp_summaries, t.reports_received, "gp summaries vs reports received");
    check(t.gp_enrollment_notices, patients, "enrollment notices vs patients");
    check(t.reports_received, c.submitted, "reports received vs reports submitted");
    for (std::size_t i = 0; i < 4; ++i) {
        check(cat[i], c.categories[i],
              fmt::format("{} reports recorded vs returned", to_string(kAllCategories[i])));
    }
    check(t.failed_commands, 0, "failed commands");
    return problems;
}

}  // namespace

SimulationReport run_simulation(const Cohort& cohort, SimTarget& target, const RuleSet& rules,
                                const QuestionnaireDefinition& questionnaire) {
    const auto wall_start = std::chrono::steady_clock::now();
    const CohortSpec& spec = cohort.spec;
    SimulationReport report;
    report.spec = spec;
    for (const auto& p : cohort.patients) ++report.patients_by_archetype[static_cast<std::size_t>(p.archetype)];

    const std::size_t n = cohort.patients.size();
    std::vector<std::string> ids(n);
    std::unordered_map<std::string, std::size_t> index_of_id;
    std::vector<std::size_t> reports_done(n, 0);
    std::vector<std::size_t> links_received(n, 0);
    RunCounters counters;

    for (std::size_t i = 0; i < n; ++i) {
        EnrollmentForm form;
        form.external_ref = cohort.patients[i].external_ref;
        form.phone = fmt::format("sim-phone-{:06}", i);
        form.gp_contact = fmt::format("sim-gp-{:04}", i % 500);
        form.eligibility = {true, true, true, true};
        form.reports_per_day = spec.reports_per_day;
        ids[i] = target.enroll(form, spec.start);
        index_of_id[ids[i]] = i;
    }

    std::multimap<Timestamp, PendingResponse> pending;
    const Timestamp end = spec.start + std::chrono::hours(24) * spec.days;
    for (Timestamp t = spec.start; t < end; t += std::chrono::minutes(1)) {
        while (!pending.empty() && pending.begin()->first <= t) {
            auto node = pending.extract(pending.begin());
            PendingResponse& r = node.mapped();
            const SimPatient& p = cohort.patients[r.patient];
            SubmitOutcome outcome;
            try {
                outcome = target.submit(r.token, answers_for(cohort, p, reports_done[r.patient]), t);
            } catch (const ServiceUnreachable&) {
                throw;
            } catch (const std::exception& e) {
                throw InvariantViolation({fmt::format("report by {} at {} refused: {}",
                                                      ids[r.patient], format_iso8601(t), e.what())});
            }
            ++reports_done[r.patient];
            ++counters.submitted;
            ++counters.categories[index_of(outcome.category)];
            for (const auto& rule : outcome.fired_rules) ++report.rule_coverage[rule];
            if (r.contact) {
                target.contact(ids[r.patient], t);
                ++counters.contacts;
            }
        }

        for (DispatchNotice& notice : target.tick(t)) {
            auto it = index_of_id.find(notice.patient_id);
            if (it == index_of_id.end() || notice.token.empty()) {
                throw InvariantViolation({fmt::format("unroutable questionnaire for {}", notice.patient_id)});
            }
            const std::size_t i = it->second;
            const ResponsePlan plan = response_for(cohort, cohort.patients[i], links_received[i]++);
            if (!plan.respond) continue;
            pending.emplace(t + std::chrono::minutes(plan.latency_minutes),
                            PendingResponse{i, std::move(notice.token), plan.contact});
        }

        const bool day_end = (t - spec.start + std::chrono::minutes(1)) % std::chrono::hours(24) ==
                             Duration::zero();
        if (day_end) {
            auto problems = conservation_problems(target.totals(), counters, n);
            if (!problems.empty()) throw InvariantViolation(std::move(problems));
        }
    }

    const CentreTotals totals = target.totals();
    std::vector<std::string> problems = conservation_problems(totals, counters, n);

    // Offline oracle: the service's category sequence per patient against the reference
    // interpreter fed the same scripts.
    const auto sequences = target.category_sequences();
    std::array<std::size_t, 4> latest{};
    for (std::size_t i = 0; i < n; ++i) {
        auto it = sequences.find(ids[i]);
        const std::vector<TriageCategory> empty;
        const auto& actual = it == sequences.end() ? empty : it->second;
        if (actual.size() != reports_done[i]) {
            problems.push_back(fmt::format("{}: {} categories recorded for {} reports", ids[i],
                                           actual.size(), reports_done[i]));
            continue;
        }
        const auto expected = oracle_categories(cohort, cohort.patients[i], rules, questionnaire,
                                                reports_done[i]);
        for (std::size_t k = 0; k < expected.size(); ++k) {
            if (expected[k] != actual[k]) {
                problems.push_back(fmt::format("{} report {}: service {} but oracle {}", ids[i], k,
                                               to_string(actual[k]), to_string(expected[k])));
                break;
            }
        }
        ++latest[index_of(actual.empty() ? TriageCategory::Green : actual.back())];
    }
    const CentreStats stats = target.stats();
    for (std::size_t c = 0; c < 4; ++c) {
        if (stats.categories[c] != latest[c]) {
            problems.push_back(fmt::format("stats {} = {} but patients' latest categories give {}",
                                           to_string(kAllCategories[c]), stats.categories[c],
                                           latest[c]));
        }
    }
    for (auto& p : target.final_checks()) problems.push_back(std::move(p));

    report.total_reports = totals.reports_received;
    report.dispatches = totals.dispatches;
    report.category_histogram = totals.reports_by_category;
    report.actions_by_trigger = totals.actions_by_trigger;
    report.action_items = std::accumulate(totals.actions_by_trigger.begin(),
                                          totals.actions_by_trigger.end(), std::uint64_t{0});
    report.automatic_messages = totals.reassurance_messages;
    report.gp_summaries = totals.gp_summaries;
    report.gp_enrollment_notices = totals.gp_enrollment_notices;
    const std::uint64_t denominator = report.automatic_messages + report.action_items;
    report.automation_ratio =
        denominator == 0 ? 1.0
                         : static_cast<double>(report.automatic_messages) / static_cast<double>(denominator);
    report.overdue_detections = totals.overdue_detections;
    report.patient_contacts = counters.contacts;
    report.escalations = totals.escalations;
    report.deescalations = totals.deescalations;
    report.invariant_violations = problems;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    if (!problems.empty()) throw InvariantViolation(std::move(problems));
    return report;
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

namespace {

json spec_to_json(const CohortSpec& s) {
    return json{{"patients", s.n_patients},
                {"days", s.days},
                {"seed", s.seed},
                {"mix",
                 {{"stable", s.mix.stable},
                  {"deteriorating", s.mix.deteriorating},
                  {"quarantine", s.mix.quarantine},
                  {"nonresponder", s.mix.nonresponder}}},
                {"latency_minutes", {s.latency_min_minutes, s.latency_max_minutes}},
                {"skip_probability", s.skip_probability},
                {"contact_probability", s.contact_probability},
                {"reports_per_day", s.reports_per_day},
                {"start", format_iso8601(s.start)}};
}

CohortSpec spec_from_json(const json& j) {
    CohortSpec s;
    s.n_patients = j.at("patients").get<int>();
    s.days = j.at("days").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const json& m = j.at("mix");
    s.mix = {m.at("stable").get<double>(), m.at("deteriorating").get<double>(),
             m.at("quarantine").get<double>(), m.at("nonresponder").get<double>()};
    s.latency_min_minutes = j.at("latency_minutes").at(0).get<int>();
    s.latency_max_minutes = j.at("latency_minutes").at(1).get<int>();
    s.skip_probability = j.at("skip_probability").get<double>();
    s.contact_probability = j.at("contact_probability").get<double>();
    s.reports_per_day = j.at("reports_per_day").get<int>();
    s.start = parse_iso8601(j.at("start").get<std::string>());
    return s;
}

template <typename E, std::size_t N>
json named_counts(const std::array<std::uint64_t, N>& counts) {
    json out = json::object();
    for (const auto& [value, name] : EnumNames<E>::entries) {
        out[std::string(name)] = counts[static_cast<std::size_t>(value)];
    }
    return out;
}

template <typename E, std::size_t N>
std::array<std::uint64_t, N> counts_from(const json& j) {
    std::array<std::uint64_t, N> out{};
    for (const auto& [value, name] : EnumNames<E>::entries) {
        out[static_cast<std::size_t>(value)] = j.at(std::string(name)).template get<std::uint64_t>();
    }
    return out;
}

}  // namespace

json report_to_json(const SimulationReport& r, bool include_runtime) {
    json j{{"spec", spec_to_json(r.spec)},
           {"total_reports", r.total_reports},
           {"dispatches", r.dispatches},
           {"category_histogram", named_counts<TriageCategory>(r.category_histogram)},
           {"actions_by_trigger", named_counts<ActionTrigger>(r.actions_by_trigger)},
           {"action_items", r.action_items},
           {"automatic_messages", r.automatic_messages},
           {"gp_summaries", r.gp_summaries},
           {"gp_enrollment_notices", r.gp_enrollment_notices},
           {"automation_ratio", r.automation_ratio},
           {"overdue_detections", r.overdue_detections},
           {"patient_contacts", r.patient_contacts},
           {"escalations", r.escalations},
           {"deescalations", r.deescalations},
           {"rule_coverage", r.rule_coverage},
           {"patients_by_archetype", named_counts<Archetype>(r.patients_by_archetype)},
           {"invariant_violations", r.invariant_violations}};
    if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

SimulationReport report_from_json(const json& j) {
    SimulationReport r;
    r.spec = spec_from_json(j.at("spec"));
    r.total_reports = j.at("total_reports").get<std::uint64_t>();
    r.dispatches = j.at("dispatches").get<std::uint64_t>();
    r.category_histogram = counts_from<TriageCategory, 4>(j.at("category_histogram"));
    r.actions_by_trigger = counts_from<ActionTrigger, 5>(j.at("actions_by_trigger"));
    r.action_items = j.at("action_items").get<std::uint64_t>();
    r.automatic_messages = j.at("automatic_messages").get<std::uint64_t>();
    r.gp_summaries = j.at("gp_summaries").get<std::uint64_t>();
    r.gp_enrollment_notices = j.at("gp_enrollment_notices").get<std::uint64_t>();
    r.automation_ratio = j.at("automation_ratio").get<double>();
    r.overdue_detections = j.at("overdue_detections").get<std::uint64_t>();
    r.patient_contacts = j.at("patient_contacts").get<std::uint64_t>();
    r.escalations = j.at("escalations").get<std::uint64_t>();
    r.deescalations = j.at("deescalations").get<std::uint64_t>();
    r.rule_coverage = j.at("rule_coverage").get<std::map<std::string, std::uint64_t>>();
    r.patients_by_archetype = counts_from<Archetype, 5>(j.at("patients_by_archetype"));
    r.invariant_violations = j.at("invariant_violations").get<std::vector<std::string>>();
    if (auto it = j.find("runtime_seconds"); it != j.end()) r.runtime_seconds = it->get<double>();
    return r;
}

void report_out(const SimulationReport& r, ReportFormat format, std::ostream& out) {
    switch (format) {
        case ReportFormat::Json:
            out << report_to_json(r).dump(2) << '\n';
            return;
        case ReportFormat::Csv: {
            out << "section,key,value\n";
            for (const auto c : kAllCategories) {
                out << "category," << to_string(c) << ',' << r.category_histogram[index_of(c)] << '\n';
            }
            for (const auto& [t, name] : EnumNames<ActionTrigger>::entries) {
                out << "action," << name << ',' << r.actions_by_trigger[static_cast<std::size_t>(t)] << '\n';
            }
            out << "total,reports," << r.total_reports << '\n'
                << "total,dispatches," << r.dispatches << '\n'
                << "total,action_items," << r.action_items << '\n'
                << "total,automatic_messages," << r.automatic_messages << '\n'
                << "total,gp_summaries," << r.gp_summaries << '\n'
                << "total,overdue_detections," << r.overdue_detections << '\n'
                << "total,patient_contacts," << r.patient_contacts << '\n'
                << "total,automation_ratio," << fmt::format("{:.6f}", r.automation_ratio) << '\n'
                << "total,runtime_seconds," << fmt::format("{:.3f}", r.runtime_seconds) << '\n';
            return;
        }
        case ReportFormat::Text: {
            out << fmt::format("Simulation: {} patients, {} days, seed {}\n\n", r.spec.n_patients,
                               r.spec.days, r.spec.seed);
            out << fmt::format("{:<18}{:>12}\n", "Category", "Reports");
            for (const auto c : kAllCategories) {
                out << fmt::format("{:<18}{:>12}\n", to_string(c), r.category_histogram[index_of(c)]);
            }
            const auto reports = std::accumulate(r.category_histogram.begin(),
                                                 r.category_histogram.end(), std::uint64_t{0});
            out << fmt::format("{:<18}{:>12}\n\n", "Total", reports);
            out << fmt::format("{:<18}{:>12}\n", "Action trigger", "Items");
            for (const auto& [t, name] : EnumNames<ActionTrigger>::entries) {
                out << fmt::format("{:<18}{:>12}\n", name, r.actions_by_trigger[static_cast<std::size_t>(t)]);
            }
            out << fmt::format("{:<18}{:>12}\n\n", "Total", r.action_items);
            out << fmt::format("Dispatches          {}\n", r.dispatches);
            out << fmt::format("Automatic messages  {}\n", r.automatic_messages);
            out << fmt::format("Automation ratio    {:.4f}\n", r.automation_ratio);
            out << fmt::format("Overdue detections  {}\n", r.overdue_detections);
            out << fmt::format("GP summaries        {}\n", r.gp_summaries);
            out << fmt::format("Runtime             {:.2f} s\n", r.runtime_seconds);
            return;
        }
    }
}

}  // namespace homewatch
