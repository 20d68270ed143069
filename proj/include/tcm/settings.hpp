// settings.hpp: flat `key = value` configuration text with `#` comments

#pragma once

#include "tcm/types.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tcm {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Ordered so that echoes and meta files are stable.
using Settings = std::map<std::string, std::string>;

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// "key = value" or "key=value"
inline std::pair<std::string, std::string> parse_assignment(std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value, got '" + std::string(line) + "'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key in '" + std::string(line) + "'");
    return {std::string(key), std::string(trim(line.substr(eq + 1)))};
}

inline Settings parse_settings(std::string_view text, const std::string& origin = "config") {
    Settings out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            auto [k, v] = parse_assignment(line);
            out[k] = v;
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline Settings read_settings_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_settings(buf.str(), path);
}

inline void merge_into(Settings& base, const Settings& overrides) {
    for (const auto& [k, v] : overrides) base[k] = v;
}

inline std::string render_settings(const Settings& s) {
    std::string out;
    for (const auto& [k, v] : s) out += k + " = " + v + "\n";
    return out;
}

// --------------------------- value parsing ------------------------------------

inline double parse_double(std::string_view text, const std::string& key) {
    const auto t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        throw ConfigError(key + ": expected a number, got '" + std::string(text) + "'");
    return v;
}

inline int parse_int(std::string_view text, const std::string& key) {
    const auto t = trim(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key + ": expected an integer, got '" + std::string(text) + "'");
    return v;
}

inline bool parse_bool(std::string_view text, const std::string& key) {
    const auto t = trim(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + std::string(text) + "'");
}

// "re" or "re:im"
inline cplx parse_complex(std::string_view text, const std::string& key) {
    const auto t = trim(text);
    const auto colon = t.find(':');
    if (colon == std::string_view::npos) return {parse_double(t, key), 0.0};
    return {parse_double(t.substr(0, colon), key), parse_double(t.substr(colon + 1), key)};
}

inline std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find(',', pos), text.size());
        const auto item = trim(text.substr(pos, end - pos));
        if (!item.empty()) out.emplace_back(item);
        pos = end + 1;
    }
    return out;
}

inline std::vector<double> parse_double_list(std::string_view text, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(item, key));
    return out;
}

inline std::vector<cplx> parse_complex_list(std::string_view text, const std::string& key) {
    std::vector<cplx> out;
    for (const auto& item : split_list(text)) out.push_back(parse_complex(item, key));
    return out;
}

// --------------------------- number output ------------------------------------

// 12 significant digits, scientific notation from 1e6 upward.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, std::abs(x) >= 1e6 ? "%.11e" : "%.12g", x);
    return buf;
}

inline std::string format_complex(cplx z) {
    if (z.imag() == 0.0) return format_number(z.real());
    return format_number(z.real()) + ":" + format_number(z.imag());
}

}  // namespace tcm
