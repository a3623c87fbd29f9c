#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "maskboost/errors.hpp"
#include "maskboost/mask.hpp"
#include "maskboost/prompts.hpp"

namespace maskboost {

struct SegmentRequest {
  std::string episode_id;
  /// URI or path of the query image. Forwarded as-is; never decoded here.
  std::string image_ref;
  /// Inline encoded image, sent instead of image_ref when present.
  std::optional<std::vector<std::uint8_t>> image_bytes;
  PromptSet prompts;
  /// Query image dimensions; the returned mask must match them.
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  /// The coarse mask the prompts came from. Only mock backends read it.
  std::optional<BinaryMask> source_mask;
};

struct SegmentResponse {
  BinaryMask mask;
  std::optional<double> score;
  std::string backend_id;
};

struct SegmentFailure {
  ErrorKind kind;
  std::string message;
};

using SegmentResult = std::variant<SegmentResponse, SegmentFailure>;

/// A promptable segmenter. Implementations must tolerate concurrent calls.
class Segmenter {
 public:
  virtual ~Segmenter() = default;

  virtual std::string id() const = 0;
  /// True when the backend needs the query image (image_ref or image_bytes).
  virtual bool needs_image() const { return false; }

 protected:
  friend SegmentResponse segment(const SegmentRequest&, const Segmenter&);
  virtual SegmentResponse run(const SegmentRequest& request) const = 0;
};

/// Validates the request, dispatches to the backend and checks the returned
/// mask against the declared width/height (Error(DimensionMismatch)).
SegmentResponse segment(const SegmentRequest& request, const Segmenter& backend);

/// Order-preserving batch. At most `parallelism` requests are in flight at
/// once; a failing item becomes a SegmentFailure at its index.
std::vector<SegmentResult> segment_batch(std::span<const SegmentRequest> requests,
                                         const Segmenter& backend,
                                         std::size_t parallelism);

/// Returns the source mask unchanged.
class IdentitySegmenter final : public Segmenter {
 public:
  std::string id() const override { return "mock:identity"; }

 protected:
  SegmentResponse run(const SegmentRequest& request) const override;
};

/// Returns the ground-truth mask of the episode.
class GroundTruthSegmenter final : public Segmenter {
 public:
  using Lookup = std::function<BinaryMask(const std::string& episode_id)>;
  explicit GroundTruthSegmenter(Lookup lookup) : lookup_(std::move(lookup)) {}
  std::string id() const override { return "mock:gt"; }

 protected:
  SegmentResponse run(const SegmentRequest& request) const override;

 private:
  Lookup lookup_;
};

/// Square-element dilation of the source mask.
class DilateSegmenter final : public Segmenter {
 public:
  explicit DilateSegmenter(std::uint32_t radius) : radius_(radius) {}
  std::string id() const override { return "mock:dilate:" + std::to_string(radius_); }

 protected:
  SegmentResponse run(const SegmentRequest& request) const override;

 private:
  std::uint32_t radius_;
};

/// Reads <dir>/<episode_id>.png (or .pgm). An optional <dir>/manifest.json
/// maps episode_id -> {"width", "height"} and is checked on every lookup.
class PrecomputedSegmenter final : public Segmenter {
 public:
  explicit PrecomputedSegmenter(std::filesystem::path dir);
  std::string id() const override { return "precomputed:" + dir_.string(); }

 protected:
  SegmentResponse run(const SegmentRequest& request) const override;

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::pair<std::uint32_t, std::uint32_t>> shapes_;
};

struct RemoteOptions {
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{120000};
  /// Extra attempts after a transport failure.
  int retries = 1;
};

struct HealthStatus {
  std::string status;
  std::string model_id;
};

/// HTTP+JSON client for POST /segment and GET /health.
class RemoteSegmenter final : public Segmenter {
 public:
  explicit RemoteSegmenter(std::string base_url, RemoteOptions options = {});
  std::string id() const override { return "remote:" + base_url_; }
  bool needs_image() const override { return true; }

  HealthStatus health() const;

 protected:
  SegmentResponse run(const SegmentRequest& request) const override;

 private:
  std::string base_url_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  RemoteOptions options_;
};

struct BackendConfig {
  enum class Kind { Remote, Precomputed, MockIdentity, MockGroundTruth, MockDilate };

  Kind kind = Kind::MockIdentity;
  /// URL for Remote, directory for Precomputed.
  std::string location;
  std::uint32_t dilate_radius = 0;

  /// Parses remote:<url> | precomputed:<dir> | mock:identity | mock:gt |
  /// mock:dilate:<r>. Throws Error(InvalidConfig).
  static BackendConfig parse(const std::string& text);
  std::string to_string() const;
};

std::unique_ptr<Segmenter> make_segmenter(const BackendConfig& config,
                                          GroundTruthSegmenter::Lookup ground_truth = {},
                                          RemoteOptions remote = {});

}  // namespace maskboost
