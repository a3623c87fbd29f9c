#include "maskboost/mask_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "maskboost/errors.hpp"

namespace maskboost {

namespace {

constexpr std::array<std::uint8_t, 8> kPngMagic = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct PngImage {
  png_image image{};
  PngImage() { image.version = PNG_IMAGE_VERSION; }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

BinaryMask decode_png(std::span<const std::uint8_t> bytes) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::DecodeError,
                std::string("PNG header: ") + png.image.message);
  }
  if (png.image.format & PNG_FORMAT_FLAG_COLOR) {
    throw Error(ErrorKind::UnsupportedFormat,
                "PNG is not single-channel grayscale");
  }
  const std::uint32_t width = png.image.width;
  const std::uint32_t height = png.image.height;
  const std::size_t n = std::size_t{width} * height;
  std::vector<std::uint8_t> fg(n);

  if (png.image.format & PNG_FORMAT_FLAG_LINEAR) {
    // 16-bit samples: read them unreduced so that e.g. value 1 stays nonzero.
    png.image.format = PNG_FORMAT_LINEAR_Y;
    std::vector<png_uint_16> samples(n);
    if (!png_image_finish_read(&png.image, nullptr, samples.data(), 0, nullptr)) {
      throw Error(ErrorKind::DecodeError, std::string("PNG data: ") + png.image.message);
    }
    std::transform(samples.begin(), samples.end(), fg.begin(),
                   [](png_uint_16 v) { return static_cast<std::uint8_t>(v != 0); });
  } else {
    png.image.format = PNG_FORMAT_GRAY;
    if (!png_image_finish_read(&png.image, nullptr, fg.data(), 0, nullptr)) {
      throw Error(ErrorKind::DecodeError, std::string("PNG data: ") + png.image.message);
    }
  }
  return BinaryMask::from_bytes(width, height, fg);
}

std::vector<std::uint8_t> encode_png(const BinaryMask& mask) {
  PngImage png;
  png.image.width = mask.width();
  png.image.height = mask.height();
  png.image.format = PNG_FORMAT_GRAY;
  const std::vector<std::uint8_t> pixels = mask.to_bytes();

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::IoError, std::string("PNG encode: ") + png.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::IoError, std::string("PNG encode: ") + png.image.message);
  }
  out.resize(size);
  return out;
}

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t next_uint() {
    skip_space_and_comments();
    std::uint64_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 0xffffffffULL) throw Error(ErrorKind::DecodeError, "PGM header value overflow");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorKind::DecodeError, "PGM header truncated or malformed");
    return static_cast<std::uint32_t>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorKind::DecodeError, "PGM header not terminated");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

BinaryMask decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorKind::DecodeError, "not a PGM stream");
  }
  if (bytes[1] != '5') {
    throw Error(ErrorKind::UnsupportedFormat, "only binary PGM (P5) is supported");
  }
  PgmHeaderReader header(bytes);
  const std::uint32_t width = header.next_uint();
  const std::uint32_t height = header.next_uint();
  const std::uint32_t maxval = header.next_uint();
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    throw Error(ErrorKind::DecodeError, "PGM header has invalid dimensions or maxval");
  }
  const std::size_t offset = header.raster_offset();
  const std::size_t n = std::size_t{width} * height;
  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  if (bytes.size() - offset < n * sample_bytes) {
    throw Error(ErrorKind::DecodeError, "PGM raster truncated");
  }
  std::vector<std::uint8_t> fg(n);
  const auto raster = bytes.subspan(offset);
  for (std::size_t i = 0; i < n; ++i) {
    fg[i] = sample_bytes == 1 ? raster[i] != 0
                              : (raster[2 * i] | raster[2 * i + 1]) != 0;
  }
  return BinaryMask::from_bytes(width, height, fg);
}

std::vector<std::uint8_t> encode_pgm(const BinaryMask& mask) {
  const std::string header = "P5\n" + std::to_string(mask.width()) + " " +
                             std::to_string(mask.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::vector<std::uint8_t> pixels = mask.to_bytes();
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

}  // namespace

BinaryMask load_mask(std::span<const std::uint8_t> bytes, MaskFormat format) {
  switch (format) {
    case MaskFormat::Png: return decode_png(bytes);
    case MaskFormat::Pgm: return decode_pgm(bytes);
  }
  throw Error(ErrorKind::UnsupportedFormat, "unknown mask format");
}

std::vector<std::uint8_t> save_mask(const BinaryMask& mask, MaskFormat format) {
  switch (format) {
    case MaskFormat::Png: return encode_png(mask);
    case MaskFormat::Pgm: return encode_pgm(mask);
  }
  throw Error(ErrorKind::UnsupportedFormat, "unknown mask format");
}

std::optional<MaskFormat> detect_format(std::span<const std::uint8_t> bytes) noexcept {
  if (bytes.size() >= kPngMagic.size() &&
      std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
    return MaskFormat::Png;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '6') {
    return MaskFormat::Pgm;
  }
  return std::nullopt;
}

std::optional<MaskFormat> format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return MaskFormat::Png;
  if (ext == ".pgm") return MaskFormat::Pgm;
  return std::nullopt;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

BinaryMask read_mask_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  const auto format = detect_format(bytes);
  if (!format) {
    throw Error(ErrorKind::UnsupportedFormat, "unrecognized mask file " + path.string());
  }
  return load_mask(bytes, *format);
}

void write_mask_file(const std::filesystem::path& path, const BinaryMask& mask) {
  const auto format = format_for_path(path);
  if (!format) {
    throw Error(ErrorKind::UnsupportedFormat,
                "mask files must end in .png or .pgm: " + path.string());
  }
  write_file_bytes(path, save_mask(mask, *format));
}

}  // namespace maskboost
