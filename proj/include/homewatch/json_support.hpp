#pragma once

#include "homewatch/time.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace nlohmann {

template <>
struct adl_serializer<homewatch::Timestamp> {
    static void to_json(json& j, const homewatch::Timestamp& t) { j = homewatch::format_iso8601(t); }
    static void from_json(const json& j, homewatch::Timestamp& t) {
        t = homewatch::parse_iso8601(j.get<std::string>());
    }
};

template <>
struct adl_serializer<homewatch::Duration> {
    static void to_json(json& j, const homewatch::Duration& d) { j = d.count(); }
    static void from_json(const json& j, homewatch::Duration& d) {
        d = homewatch::Duration{j.get<std::int64_t>()};
    }
};

template <typename T>
struct adl_serializer<std::optional<T>> {
    static void to_json(json& j, const std::optional<T>& v) {
        if (v) {
            j = *v;
        } else {
            j = nullptr;
        }
    }
    static void from_json(const json& j, std::optional<T>& v) {
        if (j.is_null()) {
            v.reset();
        } else {
            v = j.get<T>();
        }
    }
};

}  // namespace nlohmann
