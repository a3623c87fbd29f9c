#include <fmt/format.h>
#include <json.hpp>

#include "maskboost/pipeline.hpp"
#include "maskboost/wire.hpp"

namespace maskboost {

namespace {

using Json = nlohmann::ordered_json;

Json stage_json(const StageMetrics& m) {
  Json j;
  j["miou"] = m.miou;
  j["fb_miou"] = m.fb_miou;
  j["fg_iou"] = Overlap{m.totals.fg_intersection, m.totals.fg_union}.ratio();
  j["bg_iou"] = Overlap{m.totals.bg_intersection, m.totals.bg_union}.ratio();
  j["fg_intersection"] = m.totals.fg_intersection;
  j["fg_union"] = m.totals.fg_union;
  j["bg_intersection"] = m.totals.bg_intersection;
  j["bg_union"] = m.totals.bg_union;
  j["per_class"] = Json::array();
  for (const auto& [cls, acc] : m.per_class) {
    j["per_class"].push_back(Json{{"class_id", cls},
                                  {"episodes", acc.episodes},
                                  {"intersection", acc.intersection},
                                  {"union", acc.union_},
                                  {"iou", acc.iou()}});
  }
  return j;
}

Json fold_json(const FoldReport& f) {
  Json j;
  j["fold"] = f.fold;
  j["classes"] = f.classes;
  j["missing_classes"] = f.missing_classes;
  j["episodes"] = f.episodes;
  j["threshold"] = f.threshold;
  j["base"] = stage_json(f.base);
  j["sam_only"] = stage_json(f.sam_only);
  j["final"] = stage_json(f.final_);
  j["prs"] = Json{{"sam_selected", f.sam_selected},
                  {"fss_selected", f.fss_selected},
                  {"fallback_empty", f.fallback_empty},
                  {"fallback_error", f.fallback_error}};
  Json situations;
  for (Situation s : {Situation::Improved, Situation::Degraded, Situation::Unchanged}) {
    const SituationGroup& g = f.situations[s];
    situations[std::string(to_string(s))] =
        Json{{"count", g.count}, {"intersection", g.intersection}, {"union", g.union_}};
  }
  situations["fb_miou_s"] = f.fb_miou_s;
  j["situations"] = situations;
  j["candidates"] = Json{{"sam_better", f.candidates.sam_better},
                         {"sam_worse", f.candidates.sam_worse},
                         {"sam_tie", f.candidates.sam_tie},
                         {"no_sam", f.candidates.no_sam},
                         {"selected_worse", f.candidates.selected_worse}};
  return j;
}

Json mean_json(const MeanMetrics& m) {
  return Json{{"base", Json{{"miou", m.base_miou}, {"fb_miou", m.base_fb_miou}}},
              {"sam_only", Json{{"miou", m.sam_only_miou}, {"fb_miou", m.sam_only_fb_miou}}},
              {"final", Json{{"miou", m.final_miou}, {"fb_miou", m.final_fb_miou}}},
              {"fb_miou_s", m.fb_miou_s}};
}

Json run_json(const RunReport& r) {
  Json j;
  j["backend"] = r.backend;
  j["prompt_mode"] = std::string(to_string(r.prompt_mode));
  j["threshold"] = r.threshold;
  j["shots"] = r.shots;
  j["folds"] = Json::array();
  for (const auto& f : r.folds) j["folds"].push_back(fold_json(f));
  j["mean"] = mean_json(r.mean);
  return j;
}

std::string num(double v) { return fmt::format("{}", v); }

// fold, prompt_mode, threshold, stage, metric, value
void append_run_rows(std::string& csv, const RunReport& r) {
  const std::string mode(to_string(r.prompt_mode));
  auto row = [&](const std::string& fold, const char* stage, const char* metric, const std::string& value) {
    csv += fmt::format("{},{},{},{},{},{}\n", fold, mode, num(r.threshold), stage, metric, value);
  };
  for (const auto& f : r.folds) {
    const std::string fold = std::to_string(f.fold);
    for (auto [name, m] : {std::pair<const char*, const StageMetrics*>{"base", &f.base},
                           {"sam_only", &f.sam_only},
                           {"final", &f.final_}}) {
      row(fold, name, "miou", num(m->miou));
      row(fold, name, "fb_miou", num(m->fb_miou));
    }
    row(fold, "final", "fb_miou_s", num(f.fb_miou_s));
    row(fold, "prs", "sam_selected", std::to_string(f.sam_selected));
    row(fold, "prs", "fss_selected", std::to_string(f.fss_selected));
    row(fold, "prs", "fallback_empty", std::to_string(f.fallback_empty));
    row(fold, "prs", "fallback_error", std::to_string(f.fallback_error));
    row(fold, "situations", "improved", std::to_string(f.situations[Situation::Improved].count));
    row(fold, "situations", "degraded", std::to_string(f.situations[Situation::Degraded].count));
    row(fold, "situations", "unchanged", std::to_string(f.situations[Situation::Unchanged].count));
  }
  row("mean", "base", "miou", num(r.mean.base_miou));
  row("mean", "base", "fb_miou", num(r.mean.base_fb_miou));
  row("mean", "sam_only", "miou", num(r.mean.sam_only_miou));
  row("mean", "sam_only", "fb_miou", num(r.mean.sam_only_fb_miou));
  row("mean", "final", "miou", num(r.mean.final_miou));
  row("mean", "final", "fb_miou", num(r.mean.final_fb_miou));
  row("mean", "final", "fb_miou_s", num(r.mean.fb_miou_s));
}

constexpr const char* kRunCsvHeader = "fold,prompt_mode,threshold,stage,metric,value\n";

// One summary row per (run, fold) plus the fold mean.
constexpr const char* kSummaryHeader =
    "prompt_mode,threshold,fold,episodes,sam_selected,fss_selected,fallback_empty,fallback_error,"
    "base_miou,final_miou,sam_only_miou,base_fb_miou,final_fb_miou,sam_only_fb_miou,fb_miou_s,"
    "improved,degraded,unchanged\n";

void append_summary_rows(std::string& csv, const RunReport& r) {
  const std::string mode(to_string(r.prompt_mode));
  for (const auto& f : r.folds) {
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", mode,
                       num(r.threshold), f.fold, f.episodes, f.sam_selected, f.fss_selected,
                       f.fallback_empty, f.fallback_error, num(f.base.miou), num(f.final_.miou),
                       num(f.sam_only.miou), num(f.base.fb_miou), num(f.final_.fb_miou),
                       num(f.sam_only.fb_miou), num(f.fb_miou_s),
                       f.situations[Situation::Improved].count,
                       f.situations[Situation::Degraded].count,
                       f.situations[Situation::Unchanged].count);
  }
  if (r.folds.size() > 1) {
    std::uint64_t episodes = 0, sam = 0, fss = 0, empty = 0, error = 0, imp = 0, deg = 0, unch = 0;
    for (const auto& f : r.folds) {
      episodes += f.episodes;
      sam += f.sam_selected;
      fss += f.fss_selected;
      empty += f.fallback_empty;
      error += f.fallback_error;
      imp += f.situations[Situation::Improved].count;
      deg += f.situations[Situation::Degraded].count;
      unch += f.situations[Situation::Unchanged].count;
    }
    const MeanMetrics& m = r.mean;
    csv += fmt::format("{},{},mean,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", mode,
                       num(r.threshold), episodes, sam, fss, empty, error, num(m.base_miou),
                       num(m.final_miou), num(m.sam_only_miou), num(m.base_fb_miou),
                       num(m.final_fb_miou), num(m.sam_only_fb_miou), num(m.fb_miou_s), imp, deg,
                       unch);
  }
}

}  // namespace

std::string report_json(const RunReport& report) { return run_json(report).dump(2) + "\n"; }

std::string report_csv(const RunReport& report) {
  std::string csv = kRunCsvHeader;
  append_run_rows(csv, report);
  return csv;
}

std::string sweep_json(const SweepReport& report) {
  Json j;
  j["backend"] = report.backend;
  j["prompt_mode"] = std::string(to_string(report.prompt_mode));
  j["thresholds"] = report.thresholds;
  j["runs"] = Json::array();
  for (const auto& r : report.runs) j["runs"].push_back(run_json(r));
  return j.dump(2) + "\n";
}

std::string sweep_csv(const SweepReport& report) {
  std::string csv = kSummaryHeader;
  for (const auto& r : report.runs) append_summary_rows(csv, r);
  return csv;
}

std::string ablation_json(const AblationReport& report) {
  Json j;
  j["backend"] = report.backend;
  j["threshold"] = report.threshold;
  j["modes"] = Json::array();
  for (PromptMode m : report.modes) j["modes"].push_back(std::string(to_string(m)));
  j["runs"] = Json::array();
  for (const auto& r : report.runs) j["runs"].push_back(run_json(r));
  return j.dump(2) + "\n";
}

std::string ablation_csv(const AblationReport& report) {
  std::string csv = kSummaryHeader;
  for (const auto& r : report.runs) append_summary_rows(csv, r);
  return csv;
}

std::string prompts_jsonl(const std::vector<PromptRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    Json j;
    j["episode_id"] = r.episode_id;
    if (r.prompts) {
      j["prompts"] = Json::parse(wire::encode_prompts(*r.prompts));
    } else {
      j["skip"] = "empty_foreground";
    }
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace maskboost
