#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "maskboost/mask.hpp"

namespace maskboost {

enum class MaskFormat { Png, Pgm };

/// Decodes a single-channel raster; any nonzero sample is foreground.
/// Throws Error(DecodeError) on malformed input and Error(UnsupportedFormat)
/// for color rasters or unknown containers.
BinaryMask load_mask(std::span<const std::uint8_t> bytes, MaskFormat format);

/// Background is written as 0, foreground as 255 (8-bit gray PNG or binary P5).
std::vector<std::uint8_t> save_mask(const BinaryMask& mask, MaskFormat format);

/// Sniffs the container from the leading magic bytes.
std::optional<MaskFormat> detect_format(std::span<const std::uint8_t> bytes) noexcept;

/// Picks the format from the extension (.png / .pgm).
std::optional<MaskFormat> format_for_path(const std::filesystem::path& path);

BinaryMask read_mask_file(const std::filesystem::path& path);
void write_mask_file(const std::filesystem::path& path, const BinaryMask& mask);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace maskboost
