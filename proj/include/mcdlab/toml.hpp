#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mcdlab/errors.hpp"

namespace mcdlab {

/// Strict subset of TOML sufficient for experiment configs: [section]
/// headers (nested via dots), bare keys, strings, integers, floats,
/// booleans, single-line homogeneous arrays, and # comments. Keys are
/// exposed flattened as "section.key".
class TomlTable {
public:
    struct Value {
        std::variant<std::string, std::int64_t, double, bool, std::vector<Value>> data;
    };

    static TomlTable parse(const std::string& text) {
        TomlTable table;
        std::string prefix;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = text.find('\n', pos);
            std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
            pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
            ++line_no;

            strip_comment(line);
            line = trim(line);
            if (line.empty()) continue;

            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ValidationError(err(line_no, "unterminated section header"));
                prefix = trim(line.substr(1, line.size() - 2));
                if (prefix.empty()) throw ValidationError(err(line_no, "empty section name"));
                continue;
            }

            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ValidationError(err(line_no, "expected 'key = value'"));
            const std::string key = trim(line.substr(0, eq));
            const std::string raw = trim(line.substr(eq + 1));
            if (key.empty()) throw ValidationError(err(line_no, "empty key"));
            if (raw.empty()) throw ValidationError(err(line_no, "missing value"));

            const std::string full = prefix.empty() ? key : prefix + "." + key;
            if (table.values_.count(full))
                throw ValidationError(err(line_no, "duplicate key '" + full + "'"));
            table.values_.emplace(full, parse_value(raw, line_no));
        }
        return table;
    }

    bool contains(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        return expect<std::string>(key, "string");
    }

    std::int64_t get_int(const std::string& key) const {
        return expect<std::int64_t>(key, "integer");
    }

    /// Integers promote to double, as configs routinely write `sigma = 1`.
    double get_double(const std::string& key) const {
        const Value& v = find(key);
        if (const auto* d = std::get_if<double>(&v.data)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
        throw ValidationError("config key '" + key + "' is not a number");
    }

    bool get_bool(const std::string& key) const { return expect<bool>(key, "boolean"); }

    std::vector<std::int64_t> get_int_array(const std::string& key) const {
        const auto& items = expect<std::vector<Value>>(key, "array");
        std::vector<std::int64_t> out;
        for (const auto& item : items) {
            if (const auto* i = std::get_if<std::int64_t>(&item.data))
                out.push_back(*i);
            else
                throw ValidationError("config key '" + key + "' is not an integer array");
        }
        return out;
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) const {
        if (!contains(key)) return fallback;
        if constexpr (std::is_same_v<T, std::string>)
            return get_string(key);
        else if constexpr (std::is_same_v<T, bool>)
            return get_bool(key);
        else if constexpr (std::is_same_v<T, double>)
            return get_double(key);
        else
            return static_cast<T>(get_int(key));
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : values_) out.push_back(k);
        return out;
    }

private:
    static std::string err(std::size_t line, const std::string& what) {
        return "config line " + std::to_string(line) + ": " + what;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static void strip_comment(std::string& line) {
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
            if (line[i] == '#' && !in_string) {
                line.resize(i);
                return;
            }
        }
    }

    static Value parse_value(const std::string& raw, std::size_t line_no) {
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw ValidationError(err(line_no, "unterminated string"));
            std::string s;
            for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
                if (raw[i] == '\\' && i + 2 < raw.size()) {
                    ++i;
                    switch (raw[i]) {
                        case 'n': s += '\n'; break;
                        case 't': s += '\t'; break;
                        case '"': s += '"'; break;
                        case '\\': s += '\\'; break;
                        default:
                            throw ValidationError(err(line_no, "unsupported escape sequence"));
                    }
                } else {
                    s += raw[i];
                }
            }
            return Value{s};
        }
        if (raw == "true") return Value{true};
        if (raw == "false") return Value{false};
        if (raw.front() == '[') {
            if (raw.back() != ']') throw ValidationError(err(line_no, "unterminated array"));
            std::vector<Value> items;
            std::string body = raw.substr(1, raw.size() - 2);
            std::size_t start = 0;
            while (start <= body.size()) {
                std::size_t comma = body.find(',', start);
                std::string item = trim(body.substr(
                    start, comma == std::string::npos ? comma : comma - start));
                if (!item.empty()) items.push_back(parse_value(item, line_no));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            return Value{items};
        }
        return Value{parse_number(raw, line_no)};
    }

    static std::variant<std::string, std::int64_t, double, bool, std::vector<Value>> parse_number(
        const std::string& raw, std::size_t line_no) {
        const bool is_float = raw.find_first_of(".eE") != std::string::npos &&
                              raw.find("0x") == std::string::npos;
        if (!is_float) {
            std::int64_t i = 0;
            const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), i);
            if (res.ec == std::errc() && res.ptr == raw.data() + raw.size()) return i;
        }
        double d = 0.0;
        const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), d);
        if (res.ec == std::errc() && res.ptr == raw.data() + raw.size()) return d;
        throw ValidationError(err(line_no, "cannot parse value '" + raw + "'"));
    }

    template <typename T>
    const T& expect(const std::string& key, const char* kind) const {
        const Value& v = find(key);
        if (const auto* t = std::get_if<T>(&v.data)) return *t;
        throw ValidationError("config key '" + key + "' is not a " + std::string(kind));
    }

    const Value& find(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ValidationError("missing config key '" + key + "'");
        return it->second;
    }

    std::map<std::string, Value> values_;
};

}  // namespace mcdlab
