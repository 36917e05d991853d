#pragma once

#include "cloudsched/error.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cloudsched {

/// Configuration problems (bad syntax, bad values, missing referenced files).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Flat TOML-style `key = value` file. `[section]` headers prefix the keys
/// that follow with "section.". Values are numbers, booleans, quoted strings
/// or `[a, b, ...]` lists.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, std::string_view source = "<memory>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.contains(key); }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::optional<std::string> get(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_; // raw text, quotes stripped for scalars
    std::string source_;
};

} // namespace cloudsched
