#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace authfeed {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t *>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
    auto v = as_bytes(s);
    return {v.begin(), v.end()};
}

inline std::string to_string(ByteView b) {
    return {reinterpret_cast<const char *>(b.data()), b.size()};
}

/// Lowercase hex, no prefix.
std::string to_hex(ByteView data);

/// Accepts upper or lower case digits; throws std::invalid_argument on odd
/// length or a non-hex character.
Bytes from_hex(std::string_view hex);

} // namespace authfeed
