#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace mechnum {

/// Reader for the TOML subset the experiment configs use: comments,
/// [table] and [dotted.table] headers, and key = value lines with
/// integers, floats, booleans, double-quoted strings, and flat arrays.
class TomlTable {
public:
    using Value = std::variant<std::int64_t, double, bool, std::string,
                               std::vector<double>, std::vector<std::string>>;

    static TomlTable parse(const std::string& text);
    static TomlTable parse_file(const std::string& path);

    bool has(const std::string& key) const;
    bool has_table(const std::string& name) const;
    const TomlTable& table(const std::string& name) const;

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_doubles(const std::string& key,
                                    std::vector<double> fallback) const;

    const std::map<std::string, Value>& values() const { return values_; }
    const std::map<std::string, TomlTable>& tables() const { return tables_; }

private:
    TomlTable& descend(const std::string& dotted);

    std::map<std::string, Value> values_;
    std::map<std::string, TomlTable> tables_;
};

} // namespace mechnum
