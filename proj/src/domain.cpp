#include "homewatch/domain.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace homewatch {

using nlohmann::json;

bool check_eligibility(const Eligibility& e) {
    return e.no_initial_severity && e.quarantine_capable && e.can_self_monitor && e.consent;
}

std::optional<std::string_view> first_unmet_criterion(const Eligibility& e) {
    if (!e.no_initial_severity) return "no_initial_severity";
    if (!e.quarantine_capable) return "quarantine_capable";
    if (!e.can_self_monitor) return "can_self_monitor";
    if (!e.consent) return "consent";
    return std::nullopt;
}

const Item* QuestionnaireDefinition::find(std::string_view key) const {
    for (const auto& item : items) {
        if (item.key == key) return &item;
    }
    return nullptr;
}

QuestionnaireDefinition load_questionnaire(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("questionnaire: invalid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("items") || !doc["items"].is_array()) {
        throw ConfigError("questionnaire: expected an object with an 'items' array");
    }
    const auto& raw_items = doc["items"];
    if (raw_items.empty()) throw ConfigError("questionnaire: no items");
    if (raw_items.size() >= kMaxQuestionnaireItems) {
        throw ConfigError(fmt::format("questionnaire: {} items, must be fewer than {}",
                                      raw_items.size(), kMaxQuestionnaireItems));
    }

    QuestionnaireDefinition def;
    std::set<std::string, std::less<>> seen;
    for (const auto& raw : raw_items) {
        Item item;
        try {
            item.key = raw.at("key").get<std::string>();
            item.label = raw.value("label", item.key);
            item.kind = parse_enum<ItemKind>(raw.at("kind").get<std::string>());
            item.required = raw.value("required", true);
            item.unit = raw.value("unit", "");
            switch (item.kind) {
                case ItemKind::Numeric:
                    item.min = raw.at("min").get<double>();
                    item.max = raw.at("max").get<double>();
                    break;
                case ItemKind::Scale0To10:
                    item.min = 0.0;
                    item.max = 10.0;
                    break;
                case ItemKind::Boolean:
                    item.min = 0.0;
                    item.max = 1.0;
                    break;
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(fmt::format("questionnaire: bad item: {}", e.what()));
        }
        if (item.key.empty()) throw ConfigError("questionnaire: empty item key");
        if (!(item.min < item.max)) {
            throw ConfigError(fmt::format("questionnaire: item '{}' has min >= max", item.key));
        }
        if (!seen.insert(item.key).second) {
            throw ConfigError(fmt::format("questionnaire: duplicate item key '{}'", item.key));
        }
        def.items.push_back(std::move(item));
    }
    return def;
}

QuestionnaireDefinition load_questionnaire_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open questionnaire file '{}'", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_questionnaire(buffer.str());
}

json questionnaire_to_json(const QuestionnaireDefinition& def) {
    json items = json::array();
    for (const auto& item : def.items) {
        json j = {{"key", item.key},
                  {"label", item.label},
                  {"kind", item.kind},
                  {"required", item.required}};
        if (item.kind != ItemKind::Boolean) {
            j["min"] = item.min;
            j["max"] = item.max;
        }
        if (!item.unit.empty()) j["unit"] = item.unit;
        items.push_back(std::move(j));
    }
    return json{{"items", std::move(items)}};
}

std::optional<double> SymptomReport::value(std::string_view key) const {
    if (auto it = answers.find(key); it != answers.end()) return it->second;
    return std::nullopt;
}

SymptomReport validate_report(const QuestionnaireDefinition& def, const json& raw_answers,
                              Timestamp now, std::string patient_id) {
    if (!raw_answers.is_object()) {
        throw ValidationError(ValidationErrorKind::WrongType, "",
                              "answers must be a JSON object");
    }
    for (const auto& [key, _] : raw_answers.items()) {
        if (def.find(key) == nullptr) {
            throw ValidationError(ValidationErrorKind::UnknownItem, key,
                                  fmt::format("unknown item '{}'", key));
        }
    }

    SymptomReport report{std::move(patient_id), now, {}};
    for (const auto& item : def.items) {
        auto it = raw_answers.find(item.key);
        if (it == raw_answers.end() || it->is_null()) {
            if (item.required) {
                throw ValidationError(ValidationErrorKind::MissingRequiredItem, item.key,
                                      fmt::format("missing required item '{}'", item.key));
            }
            continue;
        }
        if (item.kind == ItemKind::Boolean) {
            if (!it->is_boolean()) {
                throw ValidationError(ValidationErrorKind::WrongType, item.key,
                                      fmt::format("item '{}' expects true/false", item.key));
            }
            report.answers.emplace(item.key, it->get<bool>() ? 1.0 : 0.0);
            continue;
        }
        if (!it->is_number()) {
            throw ValidationError(ValidationErrorKind::WrongType, item.key,
                                  fmt::format("item '{}' expects a number", item.key));
        }
        const double v = it->get<double>();
        if (!std::isfinite(v) || v < item.min || v > item.max) {
            throw ValidationError(ValidationErrorKind::OutOfRange, item.key,
                                  fmt::format("item '{}' value {} outside [{}, {}]", item.key, v,
                                              item.min, item.max),
                                  v, item.min, item.max);
        }
        if (item.kind == ItemKind::Scale0To10 && v != std::floor(v)) {
            throw ValidationError(ValidationErrorKind::WrongType, item.key,
                                  fmt::format("item '{}' expects a whole number 0-10", item.key));
        }
        report.answers.emplace(item.key, v);
    }
    return report;
}

ActionKind initial_kind(ActionTrigger trigger) {
    switch (trigger) {
        case ActionTrigger::OrangeFlag:
        case ActionTrigger::RedFlag:
            return ActionKind::Review;
        case ActionTrigger::NonResponder:
        case ActionTrigger::PatientInitiated:
        case ActionTrigger::MissingGPContact:
            return ActionKind::Call;
    }
    return ActionKind::Review;
}

}  // namespace homewatch
