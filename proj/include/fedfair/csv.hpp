#pragma once
// Shared helpers for the strict comma-separated files this project reads.

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedfair::csv {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    size_t start = 0;
    for (;;) {
        const size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double to_double(std::string_view tok, const std::string& where) {
    double v = 0.0;
    const char* end = tok.data() + tok.size();
    const auto res = std::from_chars(tok.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw std::runtime_error(where + ": bad number '" + std::string(tok) + "'");
    return v;
}

inline long long to_int(std::string_view tok, const std::string& where) {
    long long v = 0;
    const char* end = tok.data() + tok.size();
    const auto res = std::from_chars(tok.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw std::runtime_error(where + ": bad integer '" + std::string(tok) + "'");
    return v;
}

}  // namespace fedfair::csv
