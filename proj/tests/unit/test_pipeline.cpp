#include <doctest.h>

#include <fstream>
#include <sstream>

#include "maskboost/errors.hpp"
#include "maskboost/pipeline.hpp"
#include "../support/golden.hpp"
#include "../support/synthetic.hpp"

using namespace maskboost;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<nlohmann::json> jsonl(const std::filesystem::path& p) {
  std::vector<nlohmann::json> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

void check_clean(const std::vector<std::string>& problems) {
  for (const auto& p : problems) MESSAGE(p);
  CHECK(problems.empty());
}

RunConfig synthetic_config(const synthetic::Dataset& d, const std::filesystem::path& out,
                           const std::string& backend) {
  RunConfig c;
  c.manifest = d.manifest;
  c.episodes_file = d.episodes;
  c.fss_dir = d.fss_dir;
  c.backend = BackendConfig::parse(backend);
  c.out_dir = out;
  return c;
}

}  // namespace

TEST_CASE("golden run matches the oracle report") {
  const auto out = synthetic::scratch_dir("golden_run");
  (void)cmd_run(golden::config(out));
  check_clean(golden::diff(golden::load(golden::root() / "expected" / "run_box.json"),
                           golden::load(out / "report.json")));
}

TEST_CASE("golden sweep matches the oracle report") {
  const auto out = synthetic::scratch_dir("golden_sweep");
  (void)cmd_sweep(golden::config(out));
  check_clean(golden::diff(golden::load(golden::root() / "expected" / "sweep_box.json"),
                           golden::load(out / "sweep.json")));
}

TEST_CASE("golden prompt ablation matches the oracle report") {
  const auto out = synthetic::scratch_dir("golden_ablation");
  const auto report = cmd_ablate_prompts(golden::config(out, ""));
  check_clean(golden::diff(golden::load(golden::root() / "expected" / "ablation.json"),
                           golden::load(out / "ablation.json")));
  REQUIRE(report.runs.size() == 3);
  CHECK(report.runs[0].mean.final_miou != report.runs[1].mean.final_miou);
  for (auto mode : {"point", "box", "mixed"}) CHECK(std::filesystem::exists(out / mode / "report.json"));
}

TEST_CASE("run outputs reconcile") {
  const auto out = synthetic::scratch_dir("golden_reconcile");
  const auto report = cmd_run(golden::config(out));
  const auto selections = jsonl(out / "selections.jsonl");
  const auto failures = jsonl(out / "failures.jsonl");
  std::size_t episodes = 0, fallback_error = 0;
  for (const auto& f : report.folds) {
    episodes += f.episodes;
    fallback_error += f.fallback_error;
    CHECK(f.situations.total() == f.episodes);
    CHECK(f.sam_selected + f.fss_selected + f.fallback_empty + f.fallback_error == f.episodes);
  }
  CHECK(episodes == 20);
  CHECK(selections.size() == episodes);
  CHECK(failures.size() == fallback_error);
  CHECK(std::filesystem::exists(out / "report.csv"));

  const auto prompts = jsonl(out / "prompts.jsonl");
  REQUIRE(prompts.size() == 20);
  CHECK(prompts[3]["skip"] == "empty_foreground");
  CHECK_FALSE(prompts[3].contains("prompts"));
  CHECK(prompts[0]["prompts"]["mode"] == "box");
  CHECK(prompts[0]["prompts"]["point"].is_null());
}

TEST_CASE("reruns are byte-identical") {
  const auto a = synthetic::scratch_dir("rerun_a");
  const auto b = synthetic::scratch_dir("rerun_b");
  auto ca = golden::config(a), cb = golden::config(b);
  cb.parallelism = 7;
  (void)cmd_run(ca);
  (void)cmd_run(cb);
  for (auto f : {"report.json", "report.csv", "selections.jsonl", "prompts.jsonl", "failures.jsonl"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto records = cmd_gen_prompts(ca);
  CHECK(records.size() == 20);
  CHECK(slurp(a / "prompts.jsonl") == prompts_jsonl(records));
}

TEST_CASE("sweep over T equals separate runs and T = 1 equals the base") {
  const auto out = synthetic::scratch_dir("sweep_vs_run");
  const auto sweep = cmd_sweep(golden::config(out));
  for (std::size_t i = 0; i < sweep.thresholds.size(); ++i) {
    auto c = golden::config(synthetic::scratch_dir("sweep_vs_run_" + std::to_string(i)));
    c.threshold = sweep.thresholds[i];
    const auto run = cmd_run(c);
    REQUIRE(run.folds.size() == sweep.runs[i].folds.size());
    for (std::size_t f = 0; f < run.folds.size(); ++f) {
      CHECK(run.folds[f].final_.totals == sweep.runs[i].folds[f].final_.totals);
      CHECK(run.folds[f].sam_selected == sweep.runs[i].folds[f].sam_selected);
    }
  }
  for (const auto& f : sweep.runs.back().folds) {
    CHECK(f.final_.totals == f.base.totals);
    CHECK(f.final_.per_class == f.base.per_class);
    CHECK(f.sam_selected == 0);
  }
}

TEST_CASE("small synthetic set: identity and ground-truth backends") {
  const auto d = synthetic::make(synthetic::scratch_dir("pipeline_synth"), 30, 5);
  auto ident = synthetic_config(d, d.root / "out_identity", "mock:identity");
  const auto r = cmd_run(ident);
  REQUIRE(r.folds.size() == 1);
  CHECK(r.folds[0].final_.totals == r.folds[0].base.totals);

  auto gt = synthetic_config(d, d.root / "out_gt", "mock:gt");
  gt.threshold = 0.5;
  const auto g = cmd_run(gt);
  CHECK(g.folds[0].final_.fb_miou >= g.folds[0].base.fb_miou);
}

TEST_CASE("missing coarse mask is attributed to its stage") {
  const auto d = synthetic::make(synthetic::scratch_dir("pipeline_missing"), 5, 9);
  std::filesystem::remove(d.fss_dir / d.list[2].fss_mask_ref);
  try {
    (void)cmd_run(synthetic_config(d, d.root / "out", "mock:identity"));
    FAIL("expected MissingMask");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingMask);
    CHECK(std::string(e.what()).find('[') == 0);
  }
}

TEST_CASE("a backend that fails everywhere fails the run") {
  const auto d = synthetic::make(synthetic::scratch_dir("pipeline_dead"), 5, 9);
  auto c = synthetic_config(d, d.root / "out", "precomputed:" + (d.root / "nowhere").string());
  std::filesystem::create_directories(d.root / "nowhere");
  CHECK_THROWS_AS(cmd_run(c), Error);
}

TEST_CASE("config validation") {
  RunConfig c;
  c.manifest = "m.json";
  c.fss_dir = "fss";
  c.out_dir = "out";
  c.threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c.threshold = 0.5;
  c.parallelism = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("manifest validation reports missing files") {
  CHECK(cmd_validate_manifest(golden::root() / "manifest.json").empty());
  const auto dir = synthetic::scratch_dir("validate_manifest");
  std::ofstream(dir / "manifest.json")
      << R"({"name":"custom","class_count":4,"entries":[{"image_ref":"a.jpg","gt_mask_ref":"nope.png","class_id":1}]})";
  CHECK_FALSE(cmd_validate_manifest(dir / "manifest.json").empty());
}
