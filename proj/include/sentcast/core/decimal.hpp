#pragma once

#include <sentcast/core/error.hpp>

#include <array>
#include <charconv>
#include <string>
#include <system_error>

namespace sentcast {

/// Shortest text that parses back to the same double.
inline std::string format_decimal(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) {
        throw DataError("cannot format number");
    }
    return std::string(buf.data(), ptr);
}

} // namespace sentcast
