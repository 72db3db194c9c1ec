#pragma once
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

namespace bip {

// Shortest round-trip decimal form. Used everywhere a double hits a file so that
// identical values always serialize to identical bytes.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Strict double parse over the whole string_view. Returns false on trailing
// garbage, empty input, or no conversion; non-finite values are accepted here
// and rejected by callers that require finiteness (with their own context).
inline bool parse_double(std::string_view sv, double& out) {
    // skip leading spaces; from_chars itself accepts none
    size_t b = 0;
    while (b < sv.size() && (sv[b] == ' ' || sv[b] == '\t')) ++b;
    size_t e = sv.size();
    while (e > b && (sv[e - 1] == ' ' || sv[e - 1] == '\t' || sv[e - 1] == '\r')) --e;
    if (b == e) return false;
    auto res = std::from_chars(sv.data() + b, sv.data() + e, out);
    return res.ec == std::errc() && res.ptr == sv.data() + e;
}

inline bool parse_long(std::string_view sv, long& out) {
    size_t b = 0;
    while (b < sv.size() && (sv[b] == ' ' || sv[b] == '\t')) ++b;
    size_t e = sv.size();
    while (e > b && (sv[e - 1] == ' ' || sv[e - 1] == '\t' || sv[e - 1] == '\r')) --e;
    if (b == e) return false;
    auto res = std::from_chars(sv.data() + b, sv.data() + e, out);
    return res.ec == std::errc() && res.ptr == sv.data() + e;
}

} // namespace bip
