#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "errors.hpp"

namespace hasim {

/// Parses a bitrate with an optional unit suffix: "bps", "kbps", "Mbps",
/// "Gbps" (case-insensitive, optional whitespace before the unit). A bare
/// number is taken as bits per second. Throws InputError on anything else.
inline double parse_rate(const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin)
        throw InputError("not a rate: '" + text + "'");

    std::string suffix;
    for (const char* p = end; *p != '\0'; ++p) {
        if (!std::isspace(static_cast<unsigned char>(*p)))
            suffix += static_cast<char>(std::tolower(static_cast<unsigned char>(*p)));
    }

    double scale = 1.0;
    if (suffix.empty() || suffix == "bps")
        scale = 1.0;
    else if (suffix == "kbps")
        scale = 1e3;
    else if (suffix == "mbps")
        scale = 1e6;
    else if (suffix == "gbps")
        scale = 1e9;
    else
        throw InputError("unknown rate unit '" + suffix + "' in '" + text + "'");

    return value * scale;
}

/// Formats a double so that parsing it back recovers the exact same value.
inline std::string format_exact(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

/// Fixed-point formatting used by the trace writer (microsecond resolution
/// for times, kept identical across runs for byte-stable output).
inline std::string format_fixed(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

} // namespace hasim
