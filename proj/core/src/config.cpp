#include "gestformer/config.hpp"

#include <algorithm>
#include <fstream>

#include "gestformer/errors.hpp"

namespace gestformer {

namespace {

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config: " + path);
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected key=value, got \"" + t + "\"");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        }
        cfg.kv_[key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
    kv_[key] = value;
}

void Config::apply_override(const std::string& kv) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || trim(kv.substr(0, eq)).empty()) {
        throw ConfigError("override must be key=value, got \"" + kv + "\"");
    }
    kv_[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
}

std::string Config::get_str(const std::string& key, const std::string& def) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
}

std::int64_t Config::get_i64(const std::string& key, std::int64_t def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(it->second, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != it->second.size() || it->second.empty()) {
        throw ConfigError("config key " + key + ": expected integer, got \"" + it->second + "\"");
    }
    return v;
}

double Config::get_f64(const std::string& key, double def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(it->second, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != it->second.size() || it->second.empty()) {
        throw ConfigError("config key " + key + ": expected number, got \"" + it->second + "\"");
    }
    return v;
}

bool Config::get_bool(const std::string& key, bool def) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("config key " + key + ": expected boolean, got \"" + v + "\"");
}

void Config::require_known(const std::vector<std::string>& allowed) const {
    for (const auto& [key, value] : kv_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown config key \"" + key + "\"");
        }
    }
}

std::string Config::echo() const {
    std::string out;
    for (const auto& [key, value] : kv_) out += key + "=" + value + "\n";
    return out;
}

} // namespace gestformer
