#include "mechnum/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mechnum {

namespace {

std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

/// Drops an unquoted trailing comment.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool parse_number(const std::string& tok, TomlTable::Value& out) {
    // Integer when it round-trips as one and has no float markers.
    const bool floaty = tok.find_first_of(".eE") != std::string::npos ||
                        tok == "inf" || tok == "-inf" || tok == "nan";
    try {
        std::size_t used = 0;
        if (!floaty) {
            const std::int64_t v = std::stoll(tok, &used);
            if (used == tok.size()) {
                out = v;
                return true;
            }
        }
        used = 0;
        const double d = std::stod(tok, &used);
        if (used == tok.size()) {
            out = d;
            return true;
        }
    } catch (const std::exception&) {
    }
    return false;
}

TomlTable::Value parse_value(const std::string& raw, int line_no) {
    const std::string tok = strip(raw);
    if (tok.empty())
        throw std::runtime_error("toml: empty value at line " + std::to_string(line_no));
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"')
            throw std::runtime_error("toml: unterminated string at line " +
                                     std::to_string(line_no));
        return tok.substr(1, tok.size() - 2);
    }
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.front() == '[') {
        if (tok.back() != ']')
            throw std::runtime_error("toml: unterminated array at line " +
                                     std::to_string(line_no));
        const std::string body = strip(tok.substr(1, tok.size() - 2));
        std::vector<double> nums;
        std::vector<std::string> strs;
        bool string_array = false;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = strip(item);
            if (t.empty()) continue;
            if (t.front() == '"') {
                string_array = true;
                strs.push_back(t.substr(1, t.size() - 2));
            } else {
                TomlTable::Value v;
                if (!parse_number(t, v))
                    throw std::runtime_error("toml: bad array element '" + t + "' at line " +
                                             std::to_string(line_no));
                nums.push_back(std::holds_alternative<double>(v)
                                   ? std::get<double>(v)
                                   : static_cast<double>(std::get<std::int64_t>(v)));
            }
        }
        if (string_array) return strs;
        return nums;
    }
    TomlTable::Value v;
    if (parse_number(tok, v)) return v;
    throw std::runtime_error("toml: cannot parse value '" + tok + "' at line " +
                             std::to_string(line_no));
}

} // namespace

TomlTable& TomlTable::descend(const std::string& dotted) {
    TomlTable* cur = this;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        part = strip(part);
        if (part.empty()) throw std::runtime_error("toml: empty table name component");
        cur = &cur->tables_[part];
    }
    return *cur;
}

TomlTable TomlTable::parse(const std::string& text) {
    TomlTable root;
    TomlTable* current = &root;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string t = strip(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error("toml: bad table header at line " +
                                         std::to_string(line_no));
            current = &root.descend(strip(t.substr(1, t.size() - 2)));
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("toml: expected key = value at line " +
                                     std::to_string(line_no));
        const std::string key = strip(t.substr(0, eq));
        if (key.empty())
            throw std::runtime_error("toml: empty key at line " + std::to_string(line_no));
        current->values_[key] = parse_value(t.substr(eq + 1), line_no);
    }
    return root;
}

TomlTable TomlTable::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool TomlTable::has(const std::string& key) const { return values_.count(key) != 0; }

bool TomlTable::has_table(const std::string& name) const { return tables_.count(name) != 0; }

const TomlTable& TomlTable::table(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end())
        throw std::runtime_error("toml: missing table [" + name + "]");
    return it->second;
}

std::int64_t TomlTable::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
    if (const auto* d = std::get_if<double>(&it->second)) return static_cast<std::int64_t>(*d);
    throw std::runtime_error("toml: key '" + key + "' is not an integer");
}

double TomlTable::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* v = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*v);
    throw std::runtime_error("toml: key '" + key + "' is not a number");
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* b = std::get_if<bool>(&it->second)) return *b;
    throw std::runtime_error("toml: key '" + key + "' is not a boolean");
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw std::runtime_error("toml: key '" + key + "' is not a string");
}

std::vector<double> TomlTable::get_doubles(const std::string& key,
                                           std::vector<double> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (const auto* a = std::get_if<std::vector<double>>(&it->second)) return *a;
    throw std::runtime_error("toml: key '" + key + "' is not a numeric array");
}

} // namespace mechnum
