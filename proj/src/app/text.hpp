#pragma once

#include <charconv>
#include <string>

namespace parahom::text {

// Shortest round-trip decimal form.
inline std::string num(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace parahom::text
