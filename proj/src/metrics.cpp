#include "maskboost/metrics.hpp"

#include <string>

#include "maskboost/errors.hpp"

namespace maskboost {

namespace {

double ratio_or_one(std::uint64_t i, std::uint64_t u) noexcept {
  return u == 0 ? 1.0 : static_cast<double>(i) / static_cast<double>(u);
}

}  // namespace

EpisodeCounts& EpisodeCounts::operator+=(const EpisodeCounts& other) noexcept {
  fg_intersection += other.fg_intersection;
  fg_union += other.fg_union;
  bg_intersection += other.bg_intersection;
  bg_union += other.bg_union;
  return *this;
}

EpisodeCounts episode_iou(const BinaryMask& pred, const BinaryMask& gt) {
  const Overlap fg = overlap(pred, gt);
  // Background sets are the complements: |~p ∩ ~g| = N - |p ∪ g| and
  // |~p ∪ ~g| = N - |p ∩ g|.
  const std::uint64_t n = pred.pixel_count();
  return {fg.intersection, fg.union_, n - fg.union_, n - fg.intersection};
}

void ClassAccumulator::add(std::uint64_t i, std::uint64_t u) noexcept {
  intersection += i;
  union_ += u;
  episodes += 1;
}

double ClassAccumulator::iou() const noexcept { return ratio_or_one(intersection, union_); }

void merge_into(ClassAccumulators& into, const ClassAccumulators& from) {
  for (const auto& [cls, acc] : from) {
    ClassAccumulator& target = into[cls];
    target.intersection += acc.intersection;
    target.union_ += acc.union_;
    target.episodes += acc.episodes;
  }
}

double miou(const ClassAccumulators& accumulators, const std::set<int>& fold_classes) {
  if (fold_classes.empty()) throw Error(ErrorKind::EmptySet, "no classes to average over");
  double sum = 0.0;
  for (int cls : fold_classes) {
    const auto it = accumulators.find(cls);
    if (it == accumulators.end() || it->second.episodes == 0) {
      throw Error(ErrorKind::EmptyClass, "class " + std::to_string(cls) + " has no episodes");
    }
    sum += it->second.iou();
  }
  return sum / static_cast<double>(fold_classes.size());
}

double fb_miou_from_totals(const EpisodeCounts& totals) {
  return (ratio_or_one(totals.fg_intersection, totals.fg_union) +
          ratio_or_one(totals.bg_intersection, totals.bg_union)) /
         2.0;
}

double fb_miou(std::span<const EpisodeCounts> episodes) {
  if (episodes.empty()) throw Error(ErrorKind::EmptySet, "FB-mIoU over an empty episode set");
  EpisodeCounts totals;
  for (const auto& e : episodes) totals += e;
  return fb_miou_from_totals(totals);
}

std::string_view to_string(Situation situation) noexcept {
  switch (situation) {
    case Situation::Improved: return "improved";
    case Situation::Degraded: return "degraded";
    case Situation::Unchanged: return "unchanged";
  }
  return "unchanged";
}

Situation situation_split(double iou_fss_gt, double iou_sam_gt, SelectionSource source) noexcept {
  if (source != SelectionSource::Sam) return Situation::Unchanged;
  if (iou_sam_gt > iou_fss_gt) return Situation::Improved;
  if (iou_sam_gt < iou_fss_gt) return Situation::Degraded;
  return Situation::Unchanged;
}

void SituationTally::add(Situation situation, std::uint64_t intersection,
                         std::uint64_t union_) noexcept {
  SituationGroup& g = groups[static_cast<std::size_t>(situation)];
  g.count += 1;
  g.intersection += intersection;
  g.union_ += union_;
}

void SituationTally::merge(const SituationTally& other) noexcept {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    groups[i].count += other.groups[i].count;
    groups[i].intersection += other.groups[i].intersection;
    groups[i].union_ += other.groups[i].union_;
  }
}

std::uint64_t SituationTally::total() const noexcept {
  std::uint64_t n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

double fb_miou_s(const SituationTally& tally) {
  std::uint64_t i = 0;
  std::uint64_t u = 0;
  for (const auto& g : tally.groups) {
    i += g.intersection;
    u += g.union_;
  }
  if (u == 0) throw Error(ErrorKind::ZeroUnion, "situation groups have zero total union");
  return static_cast<double>(i) / static_cast<double>(u);
}

}  // namespace maskboost
