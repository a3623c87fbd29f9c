#include "maskboost/prs.hpp"

#include <json.hpp>

#include "maskboost/errors.hpp"

namespace maskboost {

std::string_view to_string(SelectionSource source) noexcept {
  switch (source) {
    case SelectionSource::Fss: return "FSS";
    case SelectionSource::Sam: return "SAM";
    case SelectionSource::FssFallbackEmpty: return "FSS_fallback_empty";
    case SelectionSource::FssFallbackError: return "FSS_fallback_error";
  }
  return "FSS";
}

namespace {

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "threshold must lie in [0, 1]");
  }
}

}  // namespace

Selection select(const BinaryMask& fss, const BinaryMask& sam, double threshold,
                 std::string episode_id) {
  check_threshold(threshold);
  const double score = iou(fss, sam);
  const bool take_sam = score > threshold;
  return {std::move(episode_id), take_sam ? sam : fss,
          take_sam ? SelectionSource::Sam : SelectionSource::Fss, score, threshold};
}

std::vector<Selection> select_batch(std::span<const BinaryMask> fss,
                                    std::span<const SamCandidate> sam, double threshold,
                                    std::span<const std::string> episode_ids) {
  if (fss.size() != sam.size() || (!episode_ids.empty() && episode_ids.size() != fss.size())) {
    throw Error(ErrorKind::LengthMismatch,
                "select_batch needs equally long inputs, got " + std::to_string(fss.size()) +
                    " coarse and " + std::to_string(sam.size()) + " boosted masks");
  }
  check_threshold(threshold);
  std::vector<Selection> out;
  out.reserve(fss.size());
  for (std::size_t i = 0; i < fss.size(); ++i) {
    std::string id = episode_ids.empty() ? std::string() : episode_ids[i];
    if (const auto* mask = std::get_if<BinaryMask>(&sam[i])) {
      out.push_back(select(fss[i], *mask, threshold, std::move(id)));
    } else {
      const auto source = std::get<MissingSam>(sam[i]) == MissingSam::EmptyForeground
                              ? SelectionSource::FssFallbackEmpty
                              : SelectionSource::FssFallbackError;
      out.push_back({std::move(id), fss[i], source, std::nullopt, threshold});
    }
  }
  return out;
}

std::string audit_line(const Selection& selection) {
  nlohmann::ordered_json j;
  j["episode_id"] = selection.episode_id;
  j["source"] = std::string(to_string(selection.source));
  j["iou_fss_sam"] = selection.iou_fss_sam ? nlohmann::ordered_json(*selection.iou_fss_sam)
                                           : nlohmann::ordered_json(nullptr);
  j["threshold"] = selection.threshold;
  return j.dump();
}

}  // namespace maskboost
