#include "farsim/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "farsim/errors.hpp"

namespace farsim {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        c.kv_[key] = value;
    }
    return c;
}

void Config::set_kv(const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override needs key=value: " + assignment);
    std::string key = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    if (key.empty()) throw ConfigError("override has empty key: " + assignment);
    kv_[key] = value;
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.kv_) kv_[k] = v;
}

std::string Config::get_string(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

std::int64_t Config::get_i64(const std::string& key, std::int64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    // Values like "2e9" or "16777216" both appear in configs; parse via double
    // when integer parsing does not consume the whole token.
    const std::string& s = it->second;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 0);
    if (end && *end == '\0') return v;
    double d = std::strtod(s.c_str(), &end);
    if (!end || *end != '\0') throw ConfigError("not a number: " + key + " = " + s);
    return static_cast<std::int64_t>(d);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& s = it->second;
    char* end = nullptr;
    unsigned long long v = std::strtoull(s.c_str(), &end, 0);
    if (end && *end == '\0') return v;
    double d = std::strtod(s.c_str(), &end);
    if (!end || *end != '\0' || d < 0) throw ConfigError("not a number: " + key + " = " + s);
    return static_cast<std::uint64_t>(d);
}

double Config::get_double(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    char* end = nullptr;
    double d = std::strtod(it->second.c_str(), &end);
    if (!end || *end != '\0') throw ConfigError("not a number: " + key + " = " + it->second);
    return d;
}

bool Config::get_bool(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& s = it->second;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("not a bool: " + key + " = " + s);
}

std::string Config::to_string() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

}  // namespace farsim
