#include "maskboost/prompts.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>

#include "maskboost/errors.hpp"

namespace maskboost {

std::string_view to_string(PromptMode mode) noexcept {
  switch (mode) {
    case PromptMode::Point: return "point";
    case PromptMode::Box: return "box";
    case PromptMode::Mixed: return "mixed";
  }
  return "box";
}

PromptMode parse_prompt_mode(std::string_view text) {
  if (text == "point") return PromptMode::Point;
  if (text == "box") return PromptMode::Box;
  if (text == "mixed") return PromptMode::Mixed;
  throw Error(ErrorKind::InvalidConfig,
              "prompt mode must be point, box or mixed, got '" + std::string(text) + "'");
}

bool PromptSet::consistent() const noexcept {
  switch (mode) {
    case PromptMode::Point: return point.has_value() && !box.has_value();
    case PromptMode::Box: return box.has_value() && !point.has_value();
    case PromptMode::Mixed: return point.has_value() && box.has_value();
  }
  return false;
}

PointPrompt centroid_point(const BinaryMask& mask) {
  const RawMoments m = raw_moments(mask);
  if (m.m00 == 0) throw Error(ErrorKind::EmptyForeground, "mask has no foreground");
  // m10, m01 < 2^53 for any raster we can hold, so each division is a single
  // correctly rounded operation on exact integers.
  return {static_cast<double>(m.m10) / static_cast<double>(m.m00),
          static_cast<double>(m.m01) / static_cast<double>(m.m00), 1};
}

BoxPrompt bounding_box(const BinaryMask& mask) {
  const auto words = mask.words();
  const std::uint64_t width = mask.width();
  std::uint32_t min_x = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t max_x = 0;
  std::uint32_t min_y = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t max_y = 0;
  bool any = false;
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    BinaryMask::Word w = words[wi];
    while (w != 0) {
      const std::uint64_t i =
          wi * BinaryMask::kWordBits + static_cast<unsigned>(std::countr_zero(w));
      const auto x = static_cast<std::uint32_t>(i % width);
      const auto y = static_cast<std::uint32_t>(i / width);
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
      any = true;
      w &= w - 1;
    }
  }
  if (!any) throw Error(ErrorKind::EmptyForeground, "mask has no foreground");
  return {min_x, min_y, max_x, max_y};
}

PromptSet generate_prompts(const BinaryMask& mask, PromptMode mode) {
  PromptSet prompts;
  prompts.mode = mode;
  if (mode == PromptMode::Point || mode == PromptMode::Mixed) {
    prompts.point = centroid_point(mask);
  }
  if (mode == PromptMode::Box || mode == PromptMode::Mixed) {
    prompts.box = bounding_box(mask);
  }
  return prompts;
}

}  // namespace maskboost
