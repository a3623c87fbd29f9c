#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "maskboost/mask.hpp"

namespace maskboost {

enum class SelectionSource { Fss, Sam, FssFallbackEmpty, FssFallbackError };

std::string_view to_string(SelectionSource source) noexcept;

/// Outcome of prediction-results selection for one episode.
struct Selection {
  std::string episode_id;
  BinaryMask chosen;
  SelectionSource source = SelectionSource::Fss;
  /// IoU between the coarse and the boosted mask; absent when there was no
  /// boosted mask.
  std::optional<double> iou_fss_sam;
  double threshold = 0.0;
};

/// Why an episode has no boosted mask.
enum class MissingSam { EmptyForeground, BackendError };

using SamCandidate = std::variant<BinaryMask, MissingSam>;

/// Keeps `sam` iff IoU(fss, sam) > threshold (strict); otherwise keeps `fss`.
/// Throws Error(DimensionMismatch) for differently shaped masks and
/// Error(InvalidConfig) for a threshold outside [0, 1].
Selection select(const BinaryMask& fss, const BinaryMask& sam, double threshold,
                 std::string episode_id = {});

/// Element-wise select over paired datasets. Missing candidates fall back to
/// the coarse mask. Throws Error(LengthMismatch) unless all spans are the same
/// length (episode_ids may be empty).
std::vector<Selection> select_batch(std::span<const BinaryMask> fss,
                                    std::span<const SamCandidate> sam, double threshold,
                                    std::span<const std::string> episode_ids = {});

/// {"episode_id", "source", "iou_fss_sam", "threshold"} on one line.
std::string audit_line(const Selection& selection);

}  // namespace maskboost
