#include "semdepth/keyvalue.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace semdepth {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    kv.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string body = line;
        if (const auto hash = body.find('#'); hash != std::string::npos && body.find('"') == std::string::npos) {
            body = body.substr(0, hash);
        }
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(body.substr(0, eq));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        kv.values_[key] = unquote(trim(body.substr(eq + 1)));
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::string KeyValueFile::str() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
    return os.str();
}

void KeyValueFile::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << str();
}

std::string KeyValueFile::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
    return it->second;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key) const {
    const auto s = get_string(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" + s + "'");
    }
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
    return contains(key) ? get_double(key) : fallback;
}

long long KeyValueFile::get_int(const std::string& key) const {
    const auto s = get_string(key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" + s + "'");
    }
    return v;
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
    return contains(key) ? get_int(key) : fallback;
}

std::vector<std::string> KeyValueFile::get_list(const std::string& key) const {
    std::vector<std::string> out;
    if (!contains(key)) return out;
    std::istringstream in(get_string(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void KeyValueFile::require_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_) {
        if (!known.contains(k)) throw ConfigError(origin_ + ": unknown key '" + k + "'");
    }
}

void KeyValueFile::merge(const KeyValueFile& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace semdepth
