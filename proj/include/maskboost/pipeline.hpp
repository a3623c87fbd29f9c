#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "maskboost/episodes.hpp"
#include "maskboost/mask.hpp"
#include "maskboost/metrics.hpp"
#include "maskboost/prompts.hpp"
#include "maskboost/prs.hpp"
#include "maskboost/segmenter.hpp"

namespace maskboost {

inline constexpr double kDefaultThreshold = 0.75;
inline constexpr std::size_t kDefaultEpisodeCount = 1000;

struct RunConfig {
  std::filesystem::path manifest;
  /// nullopt runs every fold (0..3 when sampling, the folds present when
  /// importing an episode list).
  std::optional<int> fold = 0;
  int shots = 1;
  std::uint64_t seed = 0;
  std::size_t episode_count = kDefaultEpisodeCount;
  /// Imported episode list (JSON lines); replaces sampling when set.
  std::optional<std::filesystem::path> episodes_file;
  std::filesystem::path fss_dir;
  BackendConfig backend;
  RemoteOptions remote;
  PromptMode prompt_mode = PromptMode::Box;
  double threshold = kDefaultThreshold;
  std::size_t parallelism = 4;
  std::filesystem::path out_dir;

  /// Throws Error(InvalidConfig).
  void validate() const;
};

/// Metrics of one dataset (base, boosted-without-selection, or final) on a fold.
struct StageMetrics {
  ClassAccumulators per_class;
  EpisodeCounts totals;
  double miou = 0.0;
  double fb_miou = 0.0;
};

/// Episodes with a boosted mask, split by how that mask compares with the
/// coarse one against ground truth, regardless of which one was selected.
struct CandidateTally {
  std::uint64_t sam_better = 0;
  std::uint64_t sam_worse = 0;
  std::uint64_t sam_tie = 0;
  std::uint64_t no_sam = 0;
  /// Of the selected boosted masks, how many were worse than the coarse mask.
  std::uint64_t selected_worse = 0;
};

struct FoldReport {
  int fold = 0;
  std::set<int> classes;
  /// Fold classes without any episode; excluded from mIoU.
  std::set<int> missing_classes;
  std::size_t episodes = 0;
  double threshold = kDefaultThreshold;

  StageMetrics base;
  StageMetrics sam_only;
  StageMetrics final_;

  std::uint64_t sam_selected = 0;
  std::uint64_t fss_selected = 0;
  std::uint64_t fallback_empty = 0;
  std::uint64_t fallback_error = 0;

  SituationTally situations;
  double fb_miou_s = 0.0;
  CandidateTally candidates;

  std::vector<Selection> selections;
};

struct MeanMetrics {
  double base_miou = 0.0;
  double base_fb_miou = 0.0;
  double sam_only_miou = 0.0;
  double sam_only_fb_miou = 0.0;
  double final_miou = 0.0;
  double final_fb_miou = 0.0;
  double fb_miou_s = 0.0;
};

struct RunReport {
  std::string backend;
  PromptMode prompt_mode = PromptMode::Box;
  double threshold = kDefaultThreshold;
  int shots = 1;
  std::vector<FoldReport> folds;
  MeanMetrics mean;
};

struct SweepReport {
  std::string backend;
  PromptMode prompt_mode = PromptMode::Box;
  std::vector<double> thresholds;
  /// One run report per threshold, same order as `thresholds`.
  std::vector<RunReport> runs;
};

struct AblationReport {
  std::string backend;
  double threshold = kDefaultThreshold;
  std::vector<PromptMode> modes;
  std::vector<RunReport> runs;
};

struct PromptRecord {
  std::string episode_id;
  /// nullopt marks an episode skipped for an empty coarse mask.
  std::optional<PromptSet> prompts;
};

inline const std::vector<double> kSweepGrid = {0.0, 0.25, 0.5, 0.75, 1.0};

// Each command writes its artifacts into config.out_dir and returns what it
// wrote. Errors carry the failing stage in their message.

/// prompts.jsonl
std::vector<PromptRecord> cmd_gen_prompts(const RunConfig& config);

/// report.json, report.csv, selections.jsonl, prompts.jsonl, failures.jsonl
RunReport cmd_run(const RunConfig& config);

/// sweep.json, sweep.csv. The segmenter runs once; only selection and
/// scoring repeat per threshold.
SweepReport cmd_sweep(const RunConfig& config, const std::vector<double>& thresholds = kSweepGrid);

/// ablation.json, ablation.csv plus a full run per mode under <out>/<mode>/.
/// A precomputed backend directory with point/, box/, mixed/ subdirectories
/// serves each mode from its own subdirectory.
AblationReport cmd_ablate_prompts(const RunConfig& config);

/// Loads the manifest and reports problems; empty result means valid.
std::vector<std::string> cmd_validate_manifest(const std::filesystem::path& manifest);

// Report serialization (report.cpp).
std::string report_json(const RunReport& report);
std::string report_csv(const RunReport& report);
std::string sweep_json(const SweepReport& report);
std::string sweep_csv(const SweepReport& report);
std::string ablation_json(const AblationReport& report);
std::string ablation_csv(const AblationReport& report);
std::string prompts_jsonl(const std::vector<PromptRecord>& records);

}  // namespace maskboost
