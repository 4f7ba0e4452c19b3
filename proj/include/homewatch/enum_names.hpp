#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace homewatch {

/// Specialize with `static constexpr std::array<std::pair<E, std::string_view>, N> entries`
/// to give an enum stable wire names.
template <typename E>
struct EnumNames;

template <typename E>
concept NamedEnum = requires { EnumNames<E>::entries; };

template <NamedEnum E>
constexpr std::string_view to_string(E value) {
    for (const auto& [v, name] : EnumNames<E>::entries) {
        if (v == value) return name;
    }
    return "?";
}

template <NamedEnum E>
constexpr std::optional<E> try_parse_enum(std::string_view name) {
    for (const auto& [v, n] : EnumNames<E>::entries) {
        if (n == name) return v;
    }
    return std::nullopt;
}

template <NamedEnum E>
E parse_enum(std::string_view name) {
    if (auto v = try_parse_enum<E>(name)) return *v;
    throw std::invalid_argument("unknown " + std::string(EnumNames<E>::type_name) + " '" +
                                std::string(name) + "'");
}

template <NamedEnum E>
void to_json(nlohmann::json& j, const E& value) {
    j = std::string(to_string(value));
}

template <NamedEnum E>
void from_json(const nlohmann::json& j, E& value) {
    value = parse_enum<E>(j.get<std::string>());
}

}  // namespace homewatch
