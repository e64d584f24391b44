#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fraglab {

/// Flat typed key-value configuration with dotted section prefixes:
///   model.gamma = 0.1
///   kernel.kind = constant-two
/// '#' starts a comment; keys are unique.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
};

/// Schema: required/optional keys with a type tag. Validation rejects unknown
/// keys and reports every missing required key at once.
struct SchemaKey {
    std::string key;
    enum class Type { Double, Int, Bool, String } type = Type::Double;
    bool required = false;
};

class Schema {
  public:
    Schema& require(const std::string& key, SchemaKey::Type type = SchemaKey::Type::Double);
    Schema& optional(const std::string& key, SchemaKey::Type type = SchemaKey::Type::Double);
    /// Throws ConfigError listing missing and unknown keys.
    void validate(const Config& cfg) const;

  private:
    std::vector<SchemaKey> keys_;
};

}  // namespace fraglab
