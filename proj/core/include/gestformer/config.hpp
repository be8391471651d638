#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gestformer {

// Flat key=value run configuration: optional file, then overrides on top.
// Keys are stored sorted, so the echo is stable and can be re-fed as a file
// to reproduce a run.
class Config {
public:
    Config() = default;

    // Lines of "key=value"; blank lines and "#" comments are skipped.
    static Config from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    void apply_override(const std::string& kv); // "key=value"

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_str(const std::string& key, const std::string& def) const;
    std::int64_t get_i64(const std::string& key, std::int64_t def) const;
    double get_f64(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const; // true/false/1/0/on/off

    // ConfigError naming the first key outside the allowed set.
    void require_known(const std::vector<std::string>& allowed) const;

    std::string echo() const; // sorted "key=value" lines

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

} // namespace gestformer
