#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include "cloudsched/error.hpp"
#include "json.hpp"

namespace cloudsched::detail {

using json = nlohmann::json;

inline void require_object(const json& j, std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
}

inline void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
    require_object(j, where);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (std::string_view k : allowed) known = known || it.key() == k;
        if (!known) throw ConfigError(std::string(where) + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + "." + key + ": " + e.what());
    }
}

template <typename T>
T get_required(const json& j, const char* key, std::string_view where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(where) + "." + key + ": " + e.what());
    }
}

inline json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

}  // namespace cloudsched::detail
