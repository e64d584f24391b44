#include "fraglab/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fraglab/errors.hpp"

namespace fraglab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.entries_.count(key))
            throw ConfigError("config: duplicate key '" + key + "'");
        cfg.entries_[key] = val;
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

double Config::get_double(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("config: missing key '" + key + "'");
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw ConfigError("config: key '" + key + "' is not a number: " + it->second);
    return v;
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("config: key '" + key + "' is not an integer");
    return i;
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: key '" + key + "' is not a boolean: " + v);
}

std::string Config::get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("config: missing key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

Schema& Schema::require(const std::string& key, SchemaKey::Type type) {
    keys_.push_back({key, type, true});
    return *this;
}

Schema& Schema::optional(const std::string& key, SchemaKey::Type type) {
    keys_.push_back({key, type, false});
    return *this;
}

void Schema::validate(const Config& cfg) const {
    std::vector<std::string> missing, unknown;
    for (const auto& k : keys_)
        if (k.required && !cfg.has(k.key)) missing.push_back(k.key);
    for (const auto& [key, val] : cfg.entries()) {
        (void)val;
        const bool known = std::any_of(keys_.begin(), keys_.end(),
                                       [&](const SchemaKey& k) { return k.key == key; });
        if (!known) unknown.push_back(key);
    }
    if (!missing.empty() || !unknown.empty()) {
        std::ostringstream os;
        os << "config schema error.";
        if (!missing.empty()) {
            os << " missing required keys:";
            for (const auto& k : missing) os << ' ' << k;
            os << '.';
        }
        if (!unknown.empty()) {
            os << " unknown keys:";
            for (const auto& k : unknown) os << ' ' << k;
            os << '.';
        }
        throw ConfigError(os.str());
    }
    // type check what is present
    for (const auto& k : keys_) {
        if (!cfg.has(k.key)) continue;
        switch (k.type) {
            case SchemaKey::Type::Double: cfg.get_double(k.key); break;
            case SchemaKey::Type::Int: cfg.get_int(k.key); break;
            case SchemaKey::Type::Bool: cfg.get_bool(k.key, false); break;
            case SchemaKey::Type::String: break;
        }
    }
}

}  // namespace fraglab
