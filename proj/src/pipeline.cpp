#include "maskboost/pipeline.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <map>

#include "maskboost/errors.hpp"
#include "maskboost/mask_io.hpp"

namespace maskboost {

namespace {

/// Re-raises library errors with the stage name prepended, keeping the kind.
template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("[{}] {}", stage, e.what()));
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorKind::IoError, fmt::format("[{}] {}", stage, e.what()));
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

struct FoldData {
  int fold = 0;
  std::set<int> classes;
  std::vector<Episode> episodes;
  std::vector<BinaryMask> fss;
  std::vector<BinaryMask> gt;
  std::vector<std::string> ids;
};

struct Prepared {
  DatasetManifest manifest;
  std::vector<FoldData> folds;
};

std::filesystem::path find_fss_mask(const std::filesystem::path& dir, const std::string& ref) {
  std::filesystem::path path = dir / ref;
  if (std::filesystem::exists(path)) return path;
  for (const char* ext : {".png", ".pgm"}) {
    auto alt = path;
    alt.replace_extension(ext);
    if (std::filesystem::exists(alt)) return alt;
  }
  throw Error(ErrorKind::MissingMask, "coarse mask not found: " + path.string());
}

Prepared prepare(const RunConfig& config) {
  config.validate();
  Prepared p;
  p.manifest = in_stage("manifest", [&] { return load_manifest(config.manifest); });

  std::vector<Episode> episodes = in_stage("episodes", [&] {
    std::vector<Episode> out;
    if (config.episodes_file) {
      out = read_episodes(*config.episodes_file);
      if (config.fold) {
        std::erase_if(out, [&](const Episode& e) { return e.fold != *config.fold; });
        if (out.empty()) {
          throw Error(ErrorKind::InsufficientSamples,
                      fmt::format("{} has no episodes for fold {}", config.episodes_file->string(),
                                  *config.fold));
        }
      }
    } else {
      const std::vector<int> folds = config.fold ? std::vector<int>{*config.fold} : std::vector<int>{0, 1, 2, 3};
      for (int f : folds) {
        auto sampled = sample_episodes(p.manifest, f, config.episode_count, config.shots, config.seed);
        out.insert(out.end(), std::make_move_iterator(sampled.begin()),
                   std::make_move_iterator(sampled.end()));
      }
    }
    for (const auto& e : out) {
      if (const std::string problem = episode_problem(p.manifest, e); !problem.empty()) {
        throw Error(ErrorKind::InvalidConfig, problem);
      }
    }
    return out;
  });

  std::map<int, FoldData> by_fold;
  in_stage("load-masks", [&] {
    for (auto& e : episodes) {
      FoldData& fd = by_fold[e.fold];
      fd.fold = e.fold;
      BinaryMask fss = read_mask_file(find_fss_mask(config.fss_dir, e.fss_mask_ref));
      const auto gt_path = p.manifest.resolve(e.query.mask_ref);
      if (!std::filesystem::exists(gt_path)) {
        throw Error(ErrorKind::MissingMask, "ground-truth mask not found: " + gt_path.string());
      }
      BinaryMask gt = read_mask_file(gt_path);
      if (!fss.same_shape(gt)) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("{}: coarse mask is {}x{} but ground truth is {}x{}", e.id,
                                fss.width(), fss.height(), gt.width(), gt.height()));
      }
      fd.ids.push_back(e.id);
      fd.fss.push_back(std::move(fss));
      fd.gt.push_back(std::move(gt));
      fd.episodes.push_back(std::move(e));
    }
  });
  for (auto& [fold, fd] : by_fold) {
    fd.classes = fold_classes(p.manifest, fold);
    p.folds.push_back(std::move(fd));
  }
  return p;
}

std::vector<PromptRecord> make_prompts(const FoldData& fd, PromptMode mode) {
  std::vector<PromptRecord> records;
  records.reserve(fd.fss.size());
  for (std::size_t i = 0; i < fd.fss.size(); ++i) {
    PromptRecord r{fd.ids[i], std::nullopt};
    if (!fd.fss[i].empty()) r.prompts = generate_prompts(fd.fss[i], mode);
    records.push_back(std::move(r));
  }
  return records;
}

struct Boosted {
  std::vector<SamCandidate> candidates;
  std::vector<std::pair<std::string, SegmentFailure>> failures;
};

Boosted boost(const Prepared& p, const FoldData& fd, const std::vector<PromptRecord>& prompts,
              const Segmenter& backend, std::size_t parallelism) {
  std::vector<SegmentRequest> requests;
  std::vector<std::size_t> index_of_request;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (!prompts[i].prompts) continue;
    SegmentRequest r;
    r.episode_id = fd.ids[i];
    r.image_ref = p.manifest.resolve(fd.episodes[i].query.image_ref).string();
    r.prompts = *prompts[i].prompts;
    r.width = fd.fss[i].width();
    r.height = fd.fss[i].height();
    if (!backend.needs_image()) r.source_mask = fd.fss[i];
    requests.push_back(std::move(r));
    index_of_request.push_back(i);
  }

  std::vector<SegmentResult> results = segment_batch(requests, backend, parallelism);

  Boosted out;
  out.candidates.assign(prompts.size(), MissingSam::EmptyForeground);
  for (std::size_t k = 0; k < results.size(); ++k) {
    const std::size_t i = index_of_request[k];
    if (auto* ok = std::get_if<SegmentResponse>(&results[k])) {
      out.candidates[i] = std::move(ok->mask);
    } else {
      out.candidates[i] = MissingSam::BackendError;
      out.failures.emplace_back(fd.ids[i], std::get<SegmentFailure>(results[k]));
    }
  }
  if (!requests.empty() && out.failures.size() == requests.size()) {
    const auto& [id, failure] = out.failures.front();
    throw Error(failure.kind, fmt::format("[segment] all {} requests failed; first ({}): {}",
                                          requests.size(), id, failure.message));
  }
  return out;
}

void finish(StageMetrics& m, const std::set<int>& classes) {
  if (classes.empty()) {
    m.miou = 0.0;
  } else {
    m.miou = miou(m.per_class, classes);
  }
  m.fb_miou = fb_miou_from_totals(m.totals);
}

void accumulate(StageMetrics& m, int class_id, const EpisodeCounts& c) {
  m.per_class[class_id].add(c.fg_intersection, c.fg_union);
  m.totals += c;
}

FoldReport evaluate(const FoldData& fd, const std::vector<SamCandidate>& candidates, double threshold) {
  FoldReport r;
  r.fold = fd.fold;
  r.episodes = fd.episodes.size();
  r.threshold = threshold;
  r.selections = select_batch(fd.fss, candidates, threshold, fd.ids);

  std::set<int> present;
  for (std::size_t i = 0; i < fd.episodes.size(); ++i) {
    const int cls = fd.episodes[i].class_id;
    present.insert(cls);
    const Selection& sel = r.selections[i];

    const EpisodeCounts base = episode_iou(fd.fss[i], fd.gt[i]);
    const EpisodeCounts fin = episode_iou(sel.chosen, fd.gt[i]);
    const BinaryMask* sam = std::get_if<BinaryMask>(&candidates[i]);
    const EpisodeCounts sam_counts = sam ? episode_iou(*sam, fd.gt[i]) : base;

    accumulate(r.base, cls, base);
    accumulate(r.final_, cls, fin);
    accumulate(r.sam_only, cls, sam_counts);

    switch (sel.source) {
      case SelectionSource::Sam: ++r.sam_selected; break;
      case SelectionSource::Fss: ++r.fss_selected; break;
      case SelectionSource::FssFallbackEmpty: ++r.fallback_empty; break;
      case SelectionSource::FssFallbackError: ++r.fallback_error; break;
    }

    const double iou_fss_gt = Overlap{base.fg_intersection, base.fg_union}.ratio();
    const double iou_sam_gt = Overlap{sam_counts.fg_intersection, sam_counts.fg_union}.ratio();
    const Situation s = situation_split(iou_fss_gt, iou_sam_gt, sel.source);
    r.situations.add(s, fin.fg_intersection, fin.fg_union);

    if (!sam) {
      ++r.candidates.no_sam;
    } else if (iou_sam_gt > iou_fss_gt) {
      ++r.candidates.sam_better;
    } else if (iou_sam_gt < iou_fss_gt) {
      ++r.candidates.sam_worse;
      if (sel.source == SelectionSource::Sam) ++r.candidates.selected_worse;
    } else {
      ++r.candidates.sam_tie;
    }
  }

  std::set_intersection(fd.classes.begin(), fd.classes.end(), present.begin(), present.end(),
                        std::inserter(r.classes, r.classes.end()));
  std::set_difference(fd.classes.begin(), fd.classes.end(), present.begin(), present.end(),
                      std::inserter(r.missing_classes, r.missing_classes.end()));
  finish(r.base, r.classes);
  finish(r.final_, r.classes);
  finish(r.sam_only, r.classes);
  // All-empty predictions against all-empty ground truth count as perfect,
  // the same convention as IoU.
  r.fb_miou_s = r.final_.totals.fg_union == 0 ? 1.0 : fb_miou_s(r.situations);
  return r;
}

MeanMetrics mean_of(const std::vector<FoldReport>& folds) {
  MeanMetrics m;
  if (folds.empty()) return m;
  for (const auto& f : folds) {
    m.base_miou += f.base.miou;
    m.base_fb_miou += f.base.fb_miou;
    m.sam_only_miou += f.sam_only.miou;
    m.sam_only_fb_miou += f.sam_only.fb_miou;
    m.final_miou += f.final_.miou;
    m.final_fb_miou += f.final_.fb_miou;
    m.fb_miou_s += f.fb_miou_s;
  }
  const double n = static_cast<double>(folds.size());
  m.base_miou /= n;
  m.base_fb_miou /= n;
  m.sam_only_miou /= n;
  m.sam_only_fb_miou /= n;
  m.final_miou /= n;
  m.final_fb_miou /= n;
  m.fb_miou_s /= n;
  return m;
}

std::unique_ptr<Segmenter> backend_for(const RunConfig& config, const Prepared& p,
                                       const BackendConfig& backend) {
  GroundTruthSegmenter::Lookup lookup;
  if (backend.kind == BackendConfig::Kind::MockGroundTruth) {
    auto table = std::make_shared<std::map<std::string, BinaryMask>>();
    for (const auto& fd : p.folds) {
      for (std::size_t i = 0; i < fd.ids.size(); ++i) table->emplace(fd.ids[i], fd.gt[i]);
    }
    lookup = [table](const std::string& id) {
      const auto it = table->find(id);
      if (it == table->end()) throw Error(ErrorKind::InvalidRequest, "no ground truth for " + id);
      return it->second;
    };
  }
  return in_stage("backend", [&] { return make_segmenter(backend, std::move(lookup), config.remote); });
}

/// Segmented state of every fold for one prompt mode.
struct Segmented {
  std::vector<std::vector<PromptRecord>> prompts;
  std::vector<Boosted> boosted;
};

Segmented segment_all(const RunConfig& config, const Prepared& p, PromptMode mode,
                      const Segmenter& backend) {
  Segmented s;
  for (const auto& fd : p.folds) {
    s.prompts.push_back(in_stage("gen-prompts", [&] { return make_prompts(fd, mode); }));
    s.boosted.push_back(in_stage("segment", [&] {
      return boost(p, fd, s.prompts.back(), backend, config.parallelism);
    }));
  }
  return s;
}

RunReport evaluate_all(const RunConfig& config, const Prepared& p, const Segmented& s,
                       PromptMode mode, double threshold, const std::string& backend_id) {
  RunReport report;
  report.backend = backend_id;
  report.prompt_mode = mode;
  report.threshold = threshold;
  report.shots = config.shots;
  for (std::size_t f = 0; f < p.folds.size(); ++f) {
    report.folds.push_back(in_stage("evaluate", [&] {
      return evaluate(p.folds[f], s.boosted[f].candidates, threshold);
    }));
  }
  report.mean = mean_of(report.folds);
  return report;
}

void write_run_outputs(const std::filesystem::path& out, const RunReport& report, const Segmented& s) {
  in_stage("write-report", [&] {
    std::vector<PromptRecord> all_prompts;
    std::string selections;
    std::string failures;
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
      all_prompts.insert(all_prompts.end(), s.prompts[f].begin(), s.prompts[f].end());
      for (const auto& sel : report.folds[f].selections) selections += audit_line(sel) + "\n";
      for (const auto& [id, failure] : s.boosted[f].failures) {
        nlohmann::ordered_json j;
        j["episode_id"] = id;
        j["error"] = std::string(to_string(failure.kind));
        j["message"] = failure.message;
        failures += j.dump() + "\n";
      }
    }
    write_text(out / "prompts.jsonl", prompts_jsonl(all_prompts));
    write_text(out / "selections.jsonl", selections);
    write_text(out / "failures.jsonl", failures);
    write_text(out / "report.json", report_json(report));
    write_text(out / "report.csv", report_csv(report));
  });
}

}  // namespace

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (manifest.empty()) bad("a manifest path is required");
  if (fss_dir.empty()) bad("a coarse-mask directory is required");
  if (out_dir.empty()) bad("an output directory is required");
  if (fold && (*fold < 0 || *fold > 3)) bad("fold must be 0..3");
  if (shots < 1) bad("shots must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0)) bad("threshold must lie in [0, 1]");
  if (parallelism < 1) bad("parallelism must be positive");
}

std::vector<PromptRecord> cmd_gen_prompts(const RunConfig& config) {
  const Prepared p = prepare(config);
  std::vector<PromptRecord> all;
  for (const auto& fd : p.folds) {
    auto records = in_stage("gen-prompts", [&] { return make_prompts(fd, config.prompt_mode); });
    all.insert(all.end(), std::make_move_iterator(records.begin()),
               std::make_move_iterator(records.end()));
  }
  in_stage("write-prompts", [&] { write_text(config.out_dir / "prompts.jsonl", prompts_jsonl(all)); });
  return all;
}

RunReport cmd_run(const RunConfig& config) {
  const Prepared p = prepare(config);
  const auto backend = backend_for(config, p, config.backend);
  const Segmented s = segment_all(config, p, config.prompt_mode, *backend);
  RunReport report = evaluate_all(config, p, s, config.prompt_mode, config.threshold, backend->id());
  write_run_outputs(config.out_dir, report, s);
  return report;
}

SweepReport cmd_sweep(const RunConfig& config, const std::vector<double>& thresholds) {
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::InvalidConfig, "sweep thresholds must lie in [0, 1]");
  }
  const Prepared p = prepare(config);
  const auto backend = backend_for(config, p, config.backend);
  const Segmented s = segment_all(config, p, config.prompt_mode, *backend);

  SweepReport sweep;
  sweep.backend = backend->id();
  sweep.prompt_mode = config.prompt_mode;
  sweep.thresholds = thresholds;
  for (double t : thresholds) {
    sweep.runs.push_back(evaluate_all(config, p, s, config.prompt_mode, t, backend->id()));
  }
  in_stage("write-report", [&] {
    write_text(config.out_dir / "sweep.json", sweep_json(sweep));
    write_text(config.out_dir / "sweep.csv", sweep_csv(sweep));
  });
  return sweep;
}

AblationReport cmd_ablate_prompts(const RunConfig& config) {
  const Prepared p = prepare(config);
  AblationReport ablation;
  ablation.threshold = config.threshold;
  ablation.modes = {PromptMode::Point, PromptMode::Box, PromptMode::Mixed};
  for (PromptMode mode : ablation.modes) {
    BackendConfig backend_config = config.backend;
    if (backend_config.kind == BackendConfig::Kind::Precomputed) {
      const auto per_mode = std::filesystem::path(backend_config.location) / std::string(to_string(mode));
      if (std::filesystem::is_directory(per_mode)) backend_config.location = per_mode.string();
    }
    const auto backend = backend_for(config, p, backend_config);
    const Segmented s = segment_all(config, p, mode, *backend);
    RunReport report = evaluate_all(config, p, s, mode, config.threshold, backend->id());
    write_run_outputs(config.out_dir / std::string(to_string(mode)), report, s);
    ablation.runs.push_back(std::move(report));
  }
  ablation.backend = config.backend.to_string();
  in_stage("write-report", [&] {
    write_text(config.out_dir / "ablation.json", ablation_json(ablation));
    write_text(config.out_dir / "ablation.csv", ablation_csv(ablation));
  });
  return ablation;
}

std::vector<std::string> cmd_validate_manifest(const std::filesystem::path& path) {
  std::vector<std::string> problems;
  DatasetManifest manifest;
  try {
    manifest = load_manifest(path);
  } catch (const Error& e) {
    return {e.what()};
  }
  problems = validate_manifest(manifest);
  if (manifest.class_count % 4 == 0) {
    for (int fold = 0; fold < 4; ++fold) {
      const auto classes = fold_classes(manifest, fold);
      for (int cls : classes) {
        const auto n = std::count_if(manifest.entries.begin(), manifest.entries.end(),
                                     [&](const ManifestEntry& e) { return e.class_id == cls; });
        if (n == 1) {
          problems.push_back(fmt::format("fold {}: class {} has a single entry and cannot form an episode",
                                         fold, cls));
        }
      }
    }
  }
  return problems;
}

}  // namespace maskboost
