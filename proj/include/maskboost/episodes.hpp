#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace maskboost {

enum class SplitScheme { Contiguous, Interleaved };

struct ManifestEntry {
  std::string image_ref;
  std::string gt_mask_ref;
  int class_id = 0;
};

/// Manifest file (JSON):
///   {"name": "pascal5i" | "coco20i" | "custom",
///    "class_count": n,                       // optional for pascal5i/coco20i
///    "split_scheme": "contiguous" | "interleaved",  // optional
///    "entries": [{"image_ref": str, "gt_mask_ref": str, "class_id": int}, ...]}
/// Relative refs resolve against the manifest's directory.
struct DatasetManifest {
  std::string name;
  int class_count = 0;
  SplitScheme split_scheme = SplitScheme::Contiguous;
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;

  std::filesystem::path resolve(const std::string& ref) const;
};

/// Throws Error(InvalidManifest) on schema violations or out-of-range class ids.
DatasetManifest parse_manifest(std::string_view json_text, std::filesystem::path root = {});
DatasetManifest load_manifest(const std::filesystem::path& path);

/// File-existence and per-fold checks; returns human-readable problems.
std::vector<std::string> validate_manifest(const DatasetManifest& manifest);

/// Classes tested in `fold` (0..3). Contiguous: quarters of 1..n;
/// interleaved: {c : (c - 1) mod 4 == fold}.
/// Throws Error(IndivisibleClassCount) when n is not a multiple of 4.
std::set<int> fold_classes(const DatasetManifest& manifest, int fold);

/// SplitMix64 (Steele, Lea and Flood): a Weyl counter passed through a fixed
/// 64-bit mixer. Bounded draws use Lemire's multiply-and-reject so sequences
/// do not depend on the standard library's distributions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;
  /// Uniform in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t state_;
};

struct ImageMaskRef {
  std::string image_ref;
  std::string mask_ref;

  friend bool operator==(const ImageMaskRef&, const ImageMaskRef&) = default;
};

struct Episode {
  std::string id;
  int fold = 0;
  int class_id = 0;
  int shots = 1;
  ImageMaskRef query;
  /// Consumed upstream by the few-shot model only.
  std::vector<ImageMaskRef> supports;
  /// Coarse mask path, relative to the coarse-mask directory.
  std::string fss_mask_ref;

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Draws `count` episodes: query uniform over the fold's entries, then
/// `shots` supports of the same class without replacement, never the query
/// image. Deterministic in (manifest, fold, count, shots, seed).
/// Throws Error(InsufficientSamples).
std::vector<Episode> sample_episodes(const DatasetManifest& manifest, int fold, std::size_t count,
                                     int shots, std::uint64_t seed);

/// Checks the episode against the fold split and its own shape invariants;
/// returns an empty string when valid.
std::string episode_problem(const DatasetManifest& manifest, const Episode& episode);

std::string episode_to_json(const Episode& episode);
Episode episode_from_json(std::string_view line);

void write_episodes(const std::filesystem::path& path, const std::vector<Episode>& episodes);
/// Throws Error(InvalidConfig) on unparsable lines.
std::vector<Episode> read_episodes(const std::filesystem::path& path);

}  // namespace maskboost
