#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "whatif/image.hpp"

namespace whatif {

using Bytes = std::vector<std::uint8_t>;

/// Decodes a PNG or JPEG stream (detected by signature). 8-bit samples map to v/255;
/// gray inputs give one channel and color inputs three. Alpha is composited over white.
/// Throws Error(decode) with a byte offset for malformed streams and
/// Error(unsupported_format) for 16-bit or CMYK data.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

/// PNG with 8-bit samples quantized by floor(v * 255 + 0.5). Output bytes are
/// deterministic for a given image.
Bytes encode_image(const ImageBuffer& img);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline std::uint8_t quantize(float v) {
    const double scaled = static_cast<double>(v) * 255.0 + 0.5;
    if (scaled <= 0.0) return 0;
    if (scaled >= 255.0) return 255;
    return static_cast<std::uint8_t>(scaled);
}

} // namespace whatif
