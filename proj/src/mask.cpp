#include "maskboost/mask.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "maskboost/errors.hpp"

namespace maskboost {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::EmptyForeground: return "EmptyForeground";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::ProtocolError: return "ProtocolError";
    case ErrorKind::MissingPrecomputed: return "MissingPrecomputed";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::ZeroUnion: return "ZeroUnion";
    case ErrorKind::IndivisibleClassCount: return "IndivisibleClassCount";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::MissingMask: return "MissingMask";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidRequest: return "InvalidRequest";
    case ErrorKind::InvalidManifest: return "InvalidManifest";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::size_t word_count(std::size_t bits) {
  return (bits + BinaryMask::kWordBits - 1) / BinaryMask::kWordBits;
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::DimensionMismatch,
                "mask shapes differ: " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

}  // namespace

BinaryMask::BinaryMask(std::uint32_t width, std::uint32_t height, bool fill)
    : width_(width), height_(height) {
  if (width == 0 || height == 0) {
    throw Error(ErrorKind::DimensionMismatch,
                "mask dimensions must be positive");
  }
  words_.assign(word_count(pixel_count()), fill ? ~Word{0} : Word{0});
  clear_tail();
}

BinaryMask BinaryMask::from_bytes(std::uint32_t width, std::uint32_t height,
                                  std::span<const std::uint8_t> pixels) {
  BinaryMask mask(width, height);
  if (pixels.size() != mask.pixel_count()) {
    throw Error(ErrorKind::DimensionMismatch,
                "pixel buffer size does not match mask dimensions");
  }
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] != 0) {
      mask.words_[i / kWordBits] |= Word{1} << (i % kWordBits);
    }
  }
  return mask;
}

bool BinaryMask::get(std::uint32_t x, std::uint32_t y) const {
  const std::size_t i = std::size_t{y} * width_ + x;
  return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
}

void BinaryMask::set(std::uint32_t x, std::uint32_t y, bool value) {
  const std::size_t i = std::size_t{y} * width_ + x;
  const Word bit = Word{1} << (i % kWordBits);
  if (value) {
    words_[i / kWordBits] |= bit;
  } else {
    words_[i / kWordBits] &= ~bit;
  }
}

std::uint64_t BinaryMask::count() const noexcept {
  std::uint64_t n = 0;
  for (Word w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
  return n;
}

BinaryMask BinaryMask::operator&(const BinaryMask& other) const {
  require_same_shape(*this, other);
  BinaryMask out = *this;
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= other.words_[i];
  return out;
}

BinaryMask BinaryMask::operator|(const BinaryMask& other) const {
  require_same_shape(*this, other);
  BinaryMask out = *this;
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] |= other.words_[i];
  return out;
}

BinaryMask BinaryMask::operator~() const {
  BinaryMask out = *this;
  for (Word& w : out.words_) w = ~w;
  out.clear_tail();
  return out;
}

std::vector<std::uint8_t> BinaryMask::to_bytes() const {
  std::vector<std::uint8_t> bytes(pixel_count());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = ((words_[i / kWordBits] >> (i % kWordBits)) & 1U) ? 255 : 0;
  }
  return bytes;
}

void BinaryMask::clear_tail() noexcept {
  const std::size_t used = pixel_count() % kWordBits;
  if (used != 0 && !words_.empty()) {
    words_.back() &= (Word{1} << used) - 1;
  }
}

double Overlap::ratio() const noexcept {
  if (union_ == 0) return 1.0;
  return static_cast<double>(intersection) / static_cast<double>(union_);
}

RawMoments raw_moments(const BinaryMask& mask) noexcept {
  RawMoments m;
  const auto words = mask.words();
  const std::uint64_t width = mask.width();
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    BinaryMask::Word w = words[wi];
    while (w != 0) {
      const std::uint64_t i =
          wi * BinaryMask::kWordBits + static_cast<unsigned>(std::countr_zero(w));
      m.m00 += 1;
      m.m10 += i % width;
      m.m01 += i / width;
      w &= w - 1;
    }
  }
  return m;
}

Overlap overlap(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  const auto wa = a.words();
  const auto wb = b.words();
  Overlap o;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    o.intersection += static_cast<std::uint64_t>(std::popcount(wa[i] & wb[i]));
    o.union_ += static_cast<std::uint64_t>(std::popcount(wa[i] | wb[i]));
  }
  return o;
}

double iou(const BinaryMask& a, const BinaryMask& b) { return overlap(a, b).ratio(); }

BinaryMask dilate(const BinaryMask& mask, std::uint32_t radius) {
  if (radius == 0) return mask;
  const std::uint32_t w = mask.width();
  const std::uint32_t h = mask.height();
  const std::int64_t r = radius;

  // Separable max filter: rows first, then columns.
  std::vector<std::uint8_t> horizontal(mask.pixel_count(), 0);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      if (!mask.get(x, y)) continue;
      const auto lo = static_cast<std::uint32_t>(std::max<std::int64_t>(0, x - r));
      const auto hi = static_cast<std::uint32_t>(std::min<std::int64_t>(w - 1, x + r));
      std::fill(horizontal.begin() + std::size_t{y} * w + lo,
                horizontal.begin() + std::size_t{y} * w + hi + 1, 1);
    }
  }
  BinaryMask out(w, h);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      if (!horizontal[std::size_t{y} * w + x]) continue;
      const auto lo = static_cast<std::uint32_t>(std::max<std::int64_t>(0, y - r));
      const auto hi = static_cast<std::uint32_t>(std::min<std::int64_t>(h - 1, y + r));
      for (std::uint32_t yy = lo; yy <= hi; ++yy) out.set(x, yy);
    }
  }
  return out;
}

}  // namespace maskboost
