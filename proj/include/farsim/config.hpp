#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace farsim {

// Flat key/value configuration with dotted keys. Text format is
// line-oriented "key = value" with '#' comments. Unknown keys are kept;
// typed getters fall back to a caller-supplied default.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    // Parses "key=value"; used for --set overrides.
    void set_kv(const std::string& assignment);
    void merge(const Config& other);  // other wins

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& dflt) const;
    std::int64_t get_i64(const std::string& key, std::int64_t dflt) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
    double get_double(const std::string& key, double dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;

    std::string to_string() const;  // canonical sorted "key = value" lines
    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace farsim
