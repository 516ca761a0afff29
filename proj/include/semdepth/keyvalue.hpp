#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace semdepth {

/// Raised for malformed or unknown configuration keys; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text file with `#` comments. Keys are dotted (model.variant, train.lr).
/// The syntax is a subset of TOML/INI, so files stay diff-able experiment records.
class KeyValueFile {
public:
    KeyValueFile() = default;

    [[nodiscard]] static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
    [[nodiscard]] static KeyValueFile load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    [[nodiscard]] std::string str() const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    [[nodiscard]] bool contains(const std::string& key) const { return values_.contains(key); }
    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

    [[nodiscard]] std::string get_string(const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] long long get_int(const std::string& key) const;
    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
    [[nodiscard]] std::vector<std::string> get_list(const std::string& key) const;

    /// Throws ConfigError naming the first key that is not in `known`.
    void require_known(const std::set<std::string>& known) const;

    /// Keys of `other` replace keys of this file.
    void merge(const KeyValueFile& other);

private:
    std::map<std::string, std::string> values_;
    std::string origin_ = "<memory>";
};

[[nodiscard]] std::string format_double(double v);

}  // namespace semdepth
