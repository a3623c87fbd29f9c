#include "maskboost/episodes.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>

#include "maskboost/errors.hpp"
#include "maskboost/mask_io.hpp"

namespace maskboost {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void bad_manifest(const std::string& what) {
  throw Error(ErrorKind::InvalidManifest, what);
}

std::string string_member(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) bad_manifest(where + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

std::string sanitize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out;
}

}  // namespace

std::filesystem::path DatasetManifest::resolve(const std::string& ref) const {
  std::filesystem::path p(ref);
  if (p.is_absolute() || root.empty()) return p;
  return root / p;
}

DatasetManifest parse_manifest(std::string_view json_text, std::filesystem::path root) {
  const Json j = Json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad_manifest("manifest is not a JSON object");

  DatasetManifest m;
  m.root = std::move(root);
  m.name = string_member(j, "name", "manifest");
  if (m.name == "pascal5i") {
    m.class_count = 20;
    m.split_scheme = SplitScheme::Contiguous;
  } else if (m.name == "coco20i") {
    m.class_count = 80;
    m.split_scheme = SplitScheme::Interleaved;
  } else if (m.name != "custom") {
    bad_manifest("manifest name must be pascal5i, coco20i or custom");
  }
  if (const auto it = j.find("class_count"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int>() <= 0) bad_manifest("class_count must be a positive integer");
    m.class_count = it->get<int>();
  } else if (m.name == "custom") {
    bad_manifest("custom manifests need class_count");
  }
  if (const auto it = j.find("split_scheme"); it != j.end()) {
    const std::string scheme = it->is_string() ? it->get<std::string>() : "";
    if (scheme == "contiguous") {
      m.split_scheme = SplitScheme::Contiguous;
    } else if (scheme == "interleaved") {
      m.split_scheme = SplitScheme::Interleaved;
    } else {
      bad_manifest("split_scheme must be contiguous or interleaved");
    }
  }

  const auto entries = j.find("entries");
  if (entries == j.end() || !entries->is_array()) bad_manifest("manifest needs an 'entries' array");
  m.entries.reserve(entries->size());
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const Json& e = (*entries)[i];
    const std::string where = "entry " + std::to_string(i);
    if (!e.is_object()) bad_manifest(where + " is not an object");
    ManifestEntry entry;
    entry.image_ref = string_member(e, "image_ref", where);
    entry.gt_mask_ref = string_member(e, "gt_mask_ref", where);
    const auto cls = e.find("class_id");
    if (cls == e.end() || !cls->is_number_integer()) bad_manifest(where + ": class_id must be an integer");
    entry.class_id = cls->get<int>();
    if (entry.class_id < 1 || entry.class_id > m.class_count) {
      bad_manifest(where + ": class_id " + std::to_string(entry.class_id) + " outside [1, " +
                   std::to_string(m.class_count) + "]");
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        path.parent_path());
}

std::vector<std::string> validate_manifest(const DatasetManifest& manifest) {
  std::vector<std::string> problems;
  if (manifest.class_count % 4 != 0) {
    problems.push_back("class_count " + std::to_string(manifest.class_count) +
                       " cannot be split into 4 folds");
  }
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const auto gt = manifest.resolve(e.gt_mask_ref);
    if (!std::filesystem::exists(gt)) {
      problems.push_back("entry " + std::to_string(i) + ": missing mask " + gt.string());
    }
  }
  return problems;
}

std::set<int> fold_classes(const DatasetManifest& manifest, int fold) {
  const int n = manifest.class_count;
  if (n <= 0 || n % 4 != 0) {
    throw Error(ErrorKind::IndivisibleClassCount,
                "class count " + std::to_string(n) + " is not divisible into 4 folds");
  }
  if (fold < 0 || fold > 3) throw Error(ErrorKind::InvalidConfig, "fold must be 0..3");
  std::set<int> classes;
  if (manifest.split_scheme == SplitScheme::Contiguous) {
    const int per_fold = n / 4;
    for (int c = fold * per_fold + 1; c <= (fold + 1) * per_fold; ++c) classes.insert(c);
  } else {
    for (int c = fold + 1; c <= n; c += 4) classes.insert(c);
  }
  return classes;
}

std::uint64_t SplitMix64::next() noexcept {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct Product128 {
  std::uint64_t high;
  std::uint64_t low;
};

Product128 multiply(std::uint64_t a, std::uint64_t b) noexcept {
  const std::uint64_t a_lo = a & 0xffffffffULL, a_hi = a >> 32;
  const std::uint64_t b_lo = b & 0xffffffffULL, b_hi = b >> 32;
  const std::uint64_t lo_lo = a_lo * b_lo;
  const std::uint64_t hi_lo = a_hi * b_lo;
  const std::uint64_t lo_hi = a_lo * b_hi;
  const std::uint64_t cross = (lo_lo >> 32) + (hi_lo & 0xffffffffULL) + lo_hi;
  return {a_hi * b_hi + (hi_lo >> 32) + (cross >> 32), (cross << 32) | (lo_lo & 0xffffffffULL)};
}

}  // namespace

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
  Product128 m = multiply(next(), bound);
  if (m.low < bound) {
    const std::uint64_t floor = (0 - bound) % bound;
    while (m.low < floor) m = multiply(next(), bound);
  }
  return m.high;
}

std::vector<Episode> sample_episodes(const DatasetManifest& manifest, int fold, std::size_t count,
                                     int shots, std::uint64_t seed) {
  if (shots < 1) throw Error(ErrorKind::InvalidConfig, "shots must be positive");
  const std::set<int> classes = fold_classes(manifest, fold);
  if (count == 0) return {};

  std::vector<std::size_t> candidates;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const int cls = manifest.entries[i].class_id;
    if (classes.count(cls)) {
      candidates.push_back(i);
      by_class[cls].push_back(i);
    }
  }
  if (candidates.empty()) {
    throw Error(ErrorKind::InsufficientSamples,
                "fold " + std::to_string(fold) + " has no entries to sample from");
  }
  for (const auto& [cls, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(shots) + 1) {
      throw Error(ErrorKind::InsufficientSamples,
                  fmt::format("class {} has {} entries; {}-shot episodes need {}", cls,
                              members.size(), shots, shots + 1));
    }
  }

  SplitMix64 rng(seed);
  std::vector<Episode> episodes;
  episodes.reserve(count);
  for (std::size_t index = 0; index < count; ++index) {
    const std::size_t q = candidates[rng.below(candidates.size())];
    const ManifestEntry& query = manifest.entries[q];

    std::vector<std::size_t> pool;
    for (std::size_t i : by_class[query.class_id]) {
      if (i != q && manifest.entries[i].image_ref != query.image_ref) pool.push_back(i);
    }
    if (pool.size() < static_cast<std::size_t>(shots)) {
      throw Error(ErrorKind::InsufficientSamples,
                  fmt::format("class {} has only {} support candidates besides {}", query.class_id,
                              pool.size(), query.image_ref));
    }
    for (std::size_t j = 0; j < static_cast<std::size_t>(shots); ++j) {
      std::swap(pool[j], pool[j + rng.below(pool.size() - j)]);
    }

    Episode e;
    e.fold = fold;
    e.class_id = query.class_id;
    e.shots = shots;
    e.query = {query.image_ref, query.gt_mask_ref};
    for (std::size_t j = 0; j < static_cast<std::size_t>(shots); ++j) {
      const ManifestEntry& s = manifest.entries[pool[j]];
      e.supports.push_back({s.image_ref, s.gt_mask_ref});
    }
    e.id = fmt::format("{}-f{}-c{:02}-{}-s{}-{:04}", manifest.name, fold, query.class_id,
                       sanitize(std::filesystem::path(query.image_ref).stem().string()), seed,
                       index);
    e.fss_mask_ref = e.id + ".png";
    episodes.push_back(std::move(e));
  }
  return episodes;
}

std::string episode_problem(const DatasetManifest& manifest, const Episode& episode) {
  if (episode.id.empty()) return "episode has no id";
  if (episode.fold < 0 || episode.fold > 3) return episode.id + ": fold must be 0..3";
  if (!fold_classes(manifest, episode.fold).count(episode.class_id)) {
    return episode.id + ": class " + std::to_string(episode.class_id) + " is not in fold " +
           std::to_string(episode.fold);
  }
  if (episode.supports.size() != static_cast<std::size_t>(episode.shots)) {
    return episode.id + ": has " + std::to_string(episode.supports.size()) + " supports for " +
           std::to_string(episode.shots) + " shots";
  }
  for (const auto& s : episode.supports) {
    if (s.image_ref == episode.query.image_ref) return episode.id + ": query appears among its supports";
  }
  if (episode.fss_mask_ref.empty()) return episode.id + ": no fss_mask_ref";
  return {};
}

std::string episode_to_json(const Episode& e) {
  Json j;
  j["id"] = e.id;
  j["fold"] = e.fold;
  j["class_id"] = e.class_id;
  j["shots"] = e.shots;
  j["query"] = Json{{"image_ref", e.query.image_ref}, {"gt_mask_ref", e.query.mask_ref}};
  j["supports"] = Json::array();
  for (const auto& s : e.supports) {
    j["supports"].push_back(Json{{"image_ref", s.image_ref}, {"mask_ref", s.mask_ref}});
  }
  j["fss_mask_ref"] = e.fss_mask_ref;
  return j.dump();
}

Episode episode_from_json(std::string_view line) {
  const Json j = Json::parse(line, nullptr, false);
  auto bad = [](const std::string& what) -> Error {
    return Error(ErrorKind::InvalidConfig, "episode record: " + what);
  };
  if (j.is_discarded() || !j.is_object()) throw bad("not a JSON object");
  try {
    Episode e;
    e.id = j.at("id").get<std::string>();
    e.fold = j.at("fold").get<int>();
    e.class_id = j.at("class_id").get<int>();
    e.shots = j.at("shots").get<int>();
    e.query = {j.at("query").at("image_ref").get<std::string>(),
               j.at("query").at("gt_mask_ref").get<std::string>()};
    for (const auto& s : j.at("supports")) {
      e.supports.push_back({s.at("image_ref").get<std::string>(), s.at("mask_ref").get<std::string>()});
    }
    e.fss_mask_ref = j.contains("fss_mask_ref") ? j["fss_mask_ref"].get<std::string>() : e.id + ".png";
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw bad(ex.what());
  }
}

void write_episodes(const std::filesystem::path& path, const std::vector<Episode>& episodes) {
  std::string text;
  for (const auto& e : episodes) text += episode_to_json(e) + "\n";
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<Episode> read_episodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<Episode> episodes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    episodes.push_back(episode_from_json(line));
  }
  return episodes;
}

}  // namespace maskboost
