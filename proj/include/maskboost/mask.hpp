#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace maskboost {

/// Fixed-size binary raster. Pixel (x, y) lives at bit y * width + x, origin
/// top-left, x to the right, y downward. Bits are packed 64 per word; bits past
/// width * height in the last word are always zero.
class BinaryMask {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BinaryMask(std::uint32_t width, std::uint32_t height, bool fill = false);

  /// Builds a mask from one byte per pixel (row-major); nonzero is foreground.
  static BinaryMask from_bytes(std::uint32_t width, std::uint32_t height,
                               std::span<const std::uint8_t> pixels);

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return std::size_t{width_} * height_;
  }

  bool get(std::uint32_t x, std::uint32_t y) const;
  void set(std::uint32_t x, std::uint32_t y, bool value = true);

  /// Number of foreground pixels.
  std::uint64_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  bool same_shape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  BinaryMask operator&(const BinaryMask& other) const;
  BinaryMask operator|(const BinaryMask& other) const;
  BinaryMask operator~() const;

  /// One byte per pixel, 0 or 255.
  std::vector<std::uint8_t> to_bytes() const;

  std::span<const Word> words() const noexcept { return words_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  void clear_tail() noexcept;

  std::uint32_t width_;
  std::uint32_t height_;
  std::vector<Word> words_;
};

struct RawMoments {
  std::uint64_t m00 = 0;
  std::uint64_t m10 = 0;
  std::uint64_t m01 = 0;

  friend bool operator==(const RawMoments&, const RawMoments&) = default;
};

/// Exact |a ∩ b| and |a ∪ b|.
struct Overlap {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;

  /// intersection / union, with the empty-vs-empty case defined as 1.
  double ratio() const noexcept;

  friend bool operator==(const Overlap&, const Overlap&) = default;
};

RawMoments raw_moments(const BinaryMask& mask) noexcept;

/// Throws Error(DimensionMismatch) when shapes differ.
Overlap overlap(const BinaryMask& a, const BinaryMask& b);
double iou(const BinaryMask& a, const BinaryMask& b);

/// Dilation with a (2r+1) x (2r+1) square structuring element.
BinaryMask dilate(const BinaryMask& mask, std::uint32_t radius);

}  // namespace maskboost
