#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "maskboost/mask.hpp"

namespace maskboost {

enum class PromptMode { Point, Box, Mixed };

std::string_view to_string(PromptMode mode) noexcept;
/// Throws Error(InvalidConfig) for anything but "point", "box", "mixed".
PromptMode parse_prompt_mode(std::string_view text);

/// Foreground point at sub-pixel precision.
struct PointPrompt {
  double x = 0.0;
  double y = 0.0;
  int label = 1;

  friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

/// Tight foreground bounding box, inclusive pixel coordinates.
struct BoxPrompt {
  std::uint32_t x1 = 0;
  std::uint32_t y1 = 0;
  std::uint32_t x2 = 0;
  std::uint32_t y2 = 0;

  friend bool operator==(const BoxPrompt&, const BoxPrompt&) = default;
};

struct PromptSet {
  PromptMode mode = PromptMode::Box;
  std::optional<PointPrompt> point;
  std::optional<BoxPrompt> box;

  /// Checks the mode/presence pairing.
  bool consistent() const noexcept;

  friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

// All three throw Error(EmptyForeground) on an all-background mask.

/// Centroid (m10/m00, m01/m00) of the whole foreground. It may land on a
/// background pixel for non-convex shapes; it is not snapped.
PointPrompt centroid_point(const BinaryMask& mask);
BoxPrompt bounding_box(const BinaryMask& mask);
PromptSet generate_prompts(const BinaryMask& mask, PromptMode mode);

}  // namespace maskboost
