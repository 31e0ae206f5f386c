#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace scribblefill::detail {

bool looks_like_png(std::span<const std::uint8_t> bytes);

struct PngPixels {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int channels = 0;  // 1 or 3
  std::vector<std::uint8_t> data;
};

enum class PngTarget {
  kRgb,        // expand gray / palette, strip alpha
  kSingleChannel,  // 8-bit gray or raw palette indices only
};

/// Throws IoError on malformed input, non-8-bit depth or trailing bytes.
PngPixels decode_png(std::span<const std::uint8_t> bytes, PngTarget target);

/// channels 1 (gray) or 3 (RGB); deterministic output for identical input.
std::vector<std::uint8_t> encode_png(std::uint32_t width, std::uint32_t height, int channels,
                                     std::span<const std::uint8_t> data);

}  // namespace scribblefill::detail
