#pragma once

// Helpers shared by the text serializers. Internal to the library.

#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "nsgms/errors.hpp"

namespace nsgms::text {

// 17 significant digits: enough for an exact double round trip.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double to_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError("malformed number for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

inline long long to_int(std::string_view s, std::string_view what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError("malformed integer for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

// Parses "<magic> v1 k1=v1 k2=v2 ..." into a key/value map.
inline std::map<std::string, std::string> parse_header(const std::string& line,
                                                       std::string_view magic) {
    std::istringstream ss(line);
    std::string word, version;
    ss >> word >> version;
    if (word != magic || version != "v1")
        throw IoError("expected '" + std::string(magic) + " v1' header, got '" + line + "'");
    std::map<std::string, std::string> fields;
    while (ss >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos || eq == 0)
            throw IoError("malformed header field '" + word + "'");
        fields[word.substr(0, eq)] = word.substr(eq + 1);
    }
    return fields;
}

inline const std::string& require_field(const std::map<std::string, std::string>& fields,
                                        const std::string& key) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw IoError("header is missing field '" + key + "'");
    return it->second;
}

inline std::string read_token(std::istream& in, std::string_view what) {
    std::string tok;
    if (!(in >> tok)) throw IoError("unexpected end of input while reading " + std::string(what));
    return tok;
}

}  // namespace nsgms::text
