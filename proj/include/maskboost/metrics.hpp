#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>

#include "maskboost/mask.hpp"
#include "maskboost/prs.hpp"

namespace maskboost {

/// Foreground and background overlap of one prediction against its ground truth.
struct EpisodeCounts {
  std::uint64_t fg_intersection = 0;
  std::uint64_t fg_union = 0;
  std::uint64_t bg_intersection = 0;
  std::uint64_t bg_union = 0;

  EpisodeCounts& operator+=(const EpisodeCounts& other) noexcept;
  friend bool operator==(const EpisodeCounts&, const EpisodeCounts&) = default;
};

/// Throws Error(DimensionMismatch).
EpisodeCounts episode_iou(const BinaryMask& pred, const BinaryMask& gt);

/// Per-class sums over episodes. Sums are combined before taking the ratio.
struct ClassAccumulator {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  std::uint64_t episodes = 0;

  void add(std::uint64_t i, std::uint64_t u) noexcept;
  /// intersection / union; 1 when every episode had empty prediction and
  /// empty ground truth.
  double iou() const noexcept;
  friend bool operator==(const ClassAccumulator&, const ClassAccumulator&) = default;
};

using ClassAccumulators = std::map<int, ClassAccumulator>;

/// Associative, commutative merge of partial accumulators.
void merge_into(ClassAccumulators& into, const ClassAccumulators& from);

/// Mean over `fold_classes` of each class's aggregate IoU.
/// Throws Error(EmptyClass) when a fold class has no episodes.
double miou(const ClassAccumulators& accumulators, const std::set<int>& fold_classes);

/// (IoU_fg + IoU_bg) / 2 over class-blind sums. Throws Error(EmptySet).
double fb_miou(std::span<const EpisodeCounts> episodes);
/// Same, from already-summed counts.
double fb_miou_from_totals(const EpisodeCounts& totals);

enum class Situation { Improved, Degraded, Unchanged };
std::string_view to_string(Situation situation) noexcept;

/// Improved / degraded when the boosted mask was selected and its IoU with
/// the ground truth is strictly higher / lower; unchanged otherwise.
Situation situation_split(double iou_fss_gt, double iou_sam_gt, SelectionSource source) noexcept;

struct SituationGroup {
  std::uint64_t count = 0;
  /// Foreground intersection / union of the selected mask with ground truth.
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  friend bool operator==(const SituationGroup&, const SituationGroup&) = default;
};

struct SituationTally {
  std::array<SituationGroup, 3> groups{};

  void add(Situation situation, std::uint64_t intersection, std::uint64_t union_) noexcept;
  void merge(const SituationTally& other) noexcept;
  const SituationGroup& operator[](Situation s) const noexcept {
    return groups[static_cast<std::size_t>(s)];
  }
  std::uint64_t total() const noexcept;
  friend bool operator==(const SituationTally&, const SituationTally&) = default;
};

/// Summed intersections over summed unions across all situation groups.
/// Throws Error(ZeroUnion).
double fb_miou_s(const SituationTally& tally);

}  // namespace maskboost
