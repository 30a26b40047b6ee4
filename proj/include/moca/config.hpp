#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

namespace moca {

// Flat `key = value` configuration with a fixed key registry. Unknown keys
// are hard errors so hyperparameter typos fail fast.
class Config {
public:
    using Value = std::variant<int64_t, double, std::string>;

    static Config defaults();
    static Config from_file(const std::string& path);
    static Config from_text(const std::string& text);  // applied onto defaults

    void apply_text(const std::string& text, const std::string& origin);
    void set(const std::string& key, const std::string& value);  // typed by the registry

    int64_t i64(const std::string& key) const;
    double f64(const std::string& key) const;
    const std::string& str(const std::string& key) const;
    bool flag(const std::string& key) const { return i64(key) != 0; }

    // Canonical text form: sorted `key = value` lines.
    std::string snapshot() const;

private:
    std::map<std::string, Value> values_;
    const Value& lookup(const std::string& key) const;
};

}  // namespace moca
