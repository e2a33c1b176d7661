#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace whatif {

/// Standard base64 with padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Accepts standard base64 with or without padding; also tolerates a
/// "data:...;base64," prefix. Throws Error(decode) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// URL-safe random token with `bytes` bytes of entropy from the OS CSPRNG.
std::string random_token(std::size_t bytes = 16);

} // namespace whatif
