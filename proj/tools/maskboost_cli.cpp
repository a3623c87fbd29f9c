// maskboost: prompt a promptable segmenter with coarse few-shot masks, keep
// the boosted masks that agree with the coarse ones, and score the result.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

#include "maskboost/errors.hpp"
#include "maskboost/mask_io.hpp"
#include "maskboost/pipeline.hpp"

namespace {

using namespace maskboost;

struct Options {
  std::string config_file;
  std::string manifest;
  std::string fold = "0";
  int shots = 1;
  std::uint64_t seed = 0;
  std::size_t count = kDefaultEpisodeCount;
  std::string episodes;
  std::string fss_dir;
  std::string backend = "mock:identity";
  std::string prompt_mode = "box";
  double threshold = kDefaultThreshold;
  std::size_t parallelism = 4;
  std::string out = "out";
  std::vector<double> thresholds = kSweepGrid;
  int timeout_s = 120;
};

/// Options registered on a subcommand, so values from --config can be
/// applied wherever the flag itself was not given.
struct Registered {
  std::vector<std::pair<CLI::Option*, std::function<void(const nlohmann::json&)>>> entries;

  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, T& target,
           const std::string& help) {
    CLI::Option* opt = app->add_option(flag, target, help);
    if constexpr (!std::is_same_v<T, std::vector<double>>) opt->capture_default_str();
    entries.emplace_back(opt, [key, &target](const nlohmann::json& j) {
      if (const auto it = j.find(key); it != j.end()) {
        if constexpr (std::is_same_v<T, std::string>) {
          target = it->is_string() ? it->template get<std::string>() : it->dump();
        } else {
          target = it->template get<T>();
        }
      }
    });
  }

  void apply_config(const std::string& path) const {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config file " + path);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorKind::InvalidConfig, "config file must hold a JSON object: " + path);
    }
    try {
      for (const auto& [opt, apply] : entries) {
        if (opt->count() == 0) apply(j);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidConfig, std::string("config file value: ") + e.what());
    }
  }
};

void add_pipeline_options(CLI::App* app, Options& o, Registered& reg, bool with_threshold) {
  app->add_option("--config", o.config_file, "JSON file with option values; flags take precedence");
  reg.add(app, "--manifest", "manifest", o.manifest, "Dataset manifest (JSON)");
  reg.add(app, "--fold", "fold", o.fold, "Fold 0..3, or 'all'");
  reg.add(app, "--shots", "shots", o.shots, "Support shots per episode (K)");
  reg.add(app, "--seed", "seed", o.seed, "Episode sampling seed");
  reg.add(app, "--count", "count", o.count, "Episodes sampled per fold");
  reg.add(app, "--episodes", "episodes", o.episodes, "Import this episode list (JSON lines) instead of sampling");
  reg.add(app, "--fss-dir", "fss_dir", o.fss_dir, "Directory of coarse masks, one per episode");
  reg.add(app, "--backend", "backend", o.backend,
          "remote:<url> | precomputed:<dir> | mock:identity | mock:gt | mock:dilate:<r>");
  reg.add(app, "--prompt-mode", "prompt_mode", o.prompt_mode, "point | box | mixed");
  if (with_threshold) reg.add(app, "--threshold", "threshold", o.threshold, "Selection threshold T in [0, 1]");
  reg.add(app, "--parallelism", "parallelism", o.parallelism, "Segmentation requests in flight");
  reg.add(app, "--timeout", "timeout", o.timeout_s, "Remote read timeout in seconds");
  reg.add(app, "--out", "out", o.out, "Output directory");
}

RunConfig to_run_config(const Options& o) {
  RunConfig c;
  c.manifest = o.manifest;
  if (o.fold == "all") {
    c.fold.reset();
  } else {
    try {
      std::size_t used = 0;
      c.fold = std::stoi(o.fold, &used);
      if (used != o.fold.size()) throw std::invalid_argument(o.fold);
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidConfig, "--fold must be 0..3 or 'all', got '" + o.fold + "'");
    }
  }
  c.shots = o.shots;
  c.seed = o.seed;
  c.episode_count = o.count;
  if (!o.episodes.empty()) c.episodes_file = o.episodes;
  c.fss_dir = o.fss_dir;
  c.backend = BackendConfig::parse(o.backend);
  c.remote.read_timeout = std::chrono::seconds(o.timeout_s);
  c.prompt_mode = parse_prompt_mode(o.prompt_mode);
  c.threshold = o.threshold;
  c.parallelism = o.parallelism;
  c.out_dir = o.out;
  return c;
}

void print_run(const RunReport& r) {
  for (const auto& f : r.folds) {
    fmt::print("fold {}  episodes {}  T={}  mode={}\n", f.fold, f.episodes, r.threshold,
               to_string(r.prompt_mode));
    fmt::print("  mIoU     base {:.4f}  sam-only {:.4f}  final {:.4f}\n", f.base.miou,
               f.sam_only.miou, f.final_.miou);
    fmt::print("  FB-mIoU  base {:.4f}  sam-only {:.4f}  final {:.4f}  FB-mIoU-S {:.4f}\n",
               f.base.fb_miou, f.sam_only.fb_miou, f.final_.fb_miou, f.fb_miou_s);
    fmt::print("  selected SAM {}  FSS {}  fallback(empty) {}  fallback(error) {}\n", f.sam_selected,
               f.fss_selected, f.fallback_empty, f.fallback_error);
    fmt::print("  improved {}  degraded {}  unchanged {}\n", f.situations[Situation::Improved].count,
               f.situations[Situation::Degraded].count, f.situations[Situation::Unchanged].count);
  }
  if (r.folds.size() > 1) {
    fmt::print("mean  mIoU base {:.4f} final {:.4f}  FB-mIoU base {:.4f} final {:.4f}\n",
               r.mean.base_miou, r.mean.final_miou, r.mean.base_fb_miou, r.mean.final_fb_miou);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boost few-shot segmentation masks with a promptable segmenter"};
  app.require_subcommand(1);

  Options o;
  Registered reg_prompts, reg_run, reg_sweep, reg_ablate, reg_sample;

  auto* gen = app.add_subcommand("gen-prompts", "Derive point/box prompts from coarse masks");
  add_pipeline_options(gen, o, reg_prompts, false);

  auto* run = app.add_subcommand("run", "Prompt, segment, select and score");
  add_pipeline_options(run, o, reg_run, true);

  auto* sweep = app.add_subcommand("sweep", "Score a grid of selection thresholds");
  add_pipeline_options(sweep, o, reg_sweep, false);
  reg_sweep.add(sweep, "--thresholds", "thresholds", o.thresholds, "Threshold grid");

  auto* ablate = app.add_subcommand("ablate-prompts", "Compare point, box and mixed prompts");
  add_pipeline_options(ablate, o, reg_ablate, true);

  auto* validate = app.add_subcommand("validate-manifest", "Check a dataset manifest");
  validate->add_option("--manifest", o.manifest, "Dataset manifest (JSON)")->required();

  auto* sample = app.add_subcommand("sample-episodes", "Write a seeded episode list (JSON lines)");
  sample->add_option("--config", o.config_file, "JSON file with option values");
  reg_sample.add(sample, "--manifest", "manifest", o.manifest, "Dataset manifest (JSON)");
  reg_sample.add(sample, "--fold", "fold", o.fold, "Fold 0..3, or 'all'");
  reg_sample.add(sample, "--shots", "shots", o.shots, "Support shots per episode (K)");
  reg_sample.add(sample, "--seed", "seed", o.seed, "Sampling seed");
  reg_sample.add(sample, "--count", "count", o.count, "Episodes per fold");
  reg_sample.add(sample, "--out", "out", o.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const auto problems = cmd_validate_manifest(o.manifest);
      for (const auto& p : problems) fmt::print(stderr, "{}\n", p);
      if (problems.empty()) fmt::print("{}: ok\n", o.manifest);
      return problems.empty() ? 0 : 1;
    }
    if (sample->parsed()) {
      reg_sample.apply_config(o.config_file);
      RunConfig c = to_run_config(o);
      const auto manifest = load_manifest(c.manifest);
      std::vector<Episode> episodes;
      const std::vector<int> folds = c.fold ? std::vector<int>{*c.fold} : std::vector<int>{0, 1, 2, 3};
      for (int f : folds) {
        auto part = sample_episodes(manifest, f, c.episode_count, c.shots, c.seed);
        episodes.insert(episodes.end(), part.begin(), part.end());
      }
      write_episodes(c.out_dir / "episodes.jsonl", episodes);
      fmt::print("wrote {} episodes to {}\n", episodes.size(), (c.out_dir / "episodes.jsonl").string());
      return 0;
    }
    if (gen->parsed()) {
      reg_prompts.apply_config(o.config_file);
      const auto records = cmd_gen_prompts(to_run_config(o));
      const auto skipped = std::count_if(records.begin(), records.end(),
                                         [](const PromptRecord& r) { return !r.prompts; });
      fmt::print("{} prompt records ({} skipped: empty coarse mask)\n", records.size(), skipped);
      return 0;
    }
    if (run->parsed()) {
      reg_run.apply_config(o.config_file);
      print_run(cmd_run(to_run_config(o)));
      return 0;
    }
    if (sweep->parsed()) {
      reg_sweep.apply_config(o.config_file);
      const auto report = cmd_sweep(to_run_config(o), o.thresholds);
      std::fputs(sweep_csv(report).c_str(), stdout);
      return 0;
    }
    if (ablate->parsed()) {
      reg_ablate.apply_config(o.config_file);
      const auto report = cmd_ablate_prompts(to_run_config(o));
      std::fputs(ablation_csv(report).c_str(), stdout);
      return 0;
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error ({}): {}\n", to_string(e.kind()), e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
