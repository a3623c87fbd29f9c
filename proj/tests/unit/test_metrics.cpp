#include <doctest.h>

#include <random>

#include "maskboost/errors.hpp"
#include "maskboost/metrics.hpp"
#include "../support/oracle.hpp"

using namespace maskboost;

namespace {

BinaryMask with(std::uint32_t w, std::uint32_t h, std::initializer_list<std::pair<int, int>> px) {
  BinaryMask m(w, h);
  for (auto [x, y] : px) m.set(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
  return m;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("episode counts of small fixtures") {
  const auto gt = with(4, 4, {{0, 0}, {1, 1}, {2, 2}});
  const auto same = episode_iou(gt, gt);
  CHECK(same.fg_intersection == same.fg_union);
  CHECK(same.bg_intersection == same.bg_union);

  const auto gt5 = with(4, 4, {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {0, 1}});
  CHECK(episode_iou(BinaryMask(4, 4), gt5) == EpisodeCounts{0, 5, 11, 16});
  CHECK(episode_iou(BinaryMask(2, 2, true), BinaryMask(2, 2)) == EpisodeCounts{0, 4, 0, 4});
  CHECK(kind_of([] { episode_iou(BinaryMask(2, 2), BinaryMask(4, 1)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("mean IoU aggregates before the ratio") {
  ClassAccumulators one;
  one[1].add(4, 4);
  CHECK(miou(one, {1}) == 1.0);

  ClassAccumulators two;
  two[1].add(1, 2);
  two[2].add(3, 3);
  CHECK(miou(two, {1, 2}) == 0.75);

  ClassAccumulators agg;
  agg[7].add(1, 3);
  agg[7].add(2, 2);
  CHECK(agg[7].episodes == 2);
  CHECK(miou(agg, {7}) == 0.6);

  CHECK(kind_of([&] { miou(agg, {7, 8}); }) == ErrorKind::EmptyClass);
  CHECK(kind_of([&] { miou(agg, {}); }) == ErrorKind::EmptySet);
}

TEST_CASE("class accumulators merge associatively") {
  ClassAccumulators a, b, c;
  a[1].add(1, 2);
  b[1].add(2, 5);
  b[2].add(3, 3);
  c[3].add(0, 1);
  ClassAccumulators left = a, right = b;
  merge_into(left, b);
  merge_into(left, c);
  merge_into(right, c);
  merge_into(right, a);
  CHECK(left == right);
  CHECK(left[1] == ClassAccumulator{3, 7, 2});
}

TEST_CASE("foreground-background mean IoU") {
  const auto gt = with(3, 3, {{0, 0}, {1, 1}});
  const std::vector<EpisodeCounts> perfect = {episode_iou(gt, gt)};
  CHECK(fb_miou(perfect) == 1.0);

  // 2x2, gt {(0,0)}, pred {(1,1)}: FG 0/2, BG 2/4.
  const auto e = episode_iou(with(2, 2, {{1, 1}}), with(2, 2, {{0, 0}}));
  const auto o = oracle::counts(oracle::to_grid(with(2, 2, {{1, 1}})), oracle::to_grid(with(2, 2, {{0, 0}})));
  CHECK(e == EpisodeCounts{o.fi, o.fu, o.bi, o.bu});
  const std::vector<EpisodeCounts> single = {e};
  CHECK(fb_miou(single) == 0.25);
  const std::vector<EpisodeCounts> twice = {e, e};
  CHECK(fb_miou(twice) == fb_miou(single));

  CHECK(kind_of([] { fb_miou(std::span<const EpisodeCounts>{}); }) == ErrorKind::EmptySet);
}

TEST_CASE("situation split") {
  CHECK(situation_split(0.6, 0.9, SelectionSource::Fss) == Situation::Unchanged);
  CHECK(situation_split(0.6, 0.9, SelectionSource::Sam) == Situation::Improved);
  CHECK(situation_split(0.9, 0.6, SelectionSource::Sam) == Situation::Degraded);
  CHECK(situation_split(0.7, 0.7, SelectionSource::Sam) == Situation::Unchanged);
  CHECK(situation_split(0.1, 0.9, SelectionSource::FssFallbackError) == Situation::Unchanged);
}

TEST_CASE("situation-weighted score") {
  SituationTally perfect;
  perfect.add(Situation::Improved, 5, 5);
  CHECK(fb_miou_s(perfect) == 1.0);

  SituationTally halves;
  halves.add(Situation::Unchanged, 1, 2);
  halves.add(Situation::Unchanged, 1, 2);
  CHECK(fb_miou_s(halves) == 0.5);

  SituationTally three;
  three.add(Situation::Improved, 3, 4);
  three.add(Situation::Degraded, 1, 4);
  three.add(Situation::Unchanged, 2, 4);
  CHECK(fb_miou_s(three) == 0.5);
  CHECK(three.total() == 3);

  SituationTally merged = halves;
  merged.merge(three);
  CHECK(merged.total() == 5);
  CHECK(merged[Situation::Unchanged] == SituationGroup{3, 4, 8});

  CHECK(kind_of([] { fb_miou_s(SituationTally{}); }) == ErrorKind::ZeroUnion);
}

TEST_CASE("single-sample situation score equals its foreground IoU") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 50; ++i) {
    const auto p = oracle::from_grid(oracle::random_grid(rng, 16, 16, 0.4));
    const auto g = oracle::from_grid(oracle::random_grid(rng, 16, 16, 0.4));
    const auto c = episode_iou(p, g);
    SituationTally t;
    t.add(Situation::Improved, c.fg_intersection, c.fg_union);
    CHECK(fb_miou_s(t) == iou(p, g));
  }
}

TEST_CASE("metrics agree with the per-pixel oracle on random 16x16 fixtures") {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<int> cls(1, 3);
  for (int round = 0; round < 40; ++round) {
    ClassAccumulators acc;
    std::vector<EpisodeCounts> eps;
    std::map<int, std::pair<std::uint64_t, std::uint64_t>> oc;
    oracle::Counts tot;
    for (int e = 0; e < 12; ++e) {
      const auto gp = oracle::random_grid(rng, 16, 16, 0.3);
      const auto gg = oracle::random_grid(rng, 16, 16, 0.3);
      const auto c = episode_iou(oracle::from_grid(gp), oracle::from_grid(gg));
      const auto o = oracle::counts(gp, gg);
      CHECK(c == EpisodeCounts{o.fi, o.fu, o.bi, o.bu});
      const int k = cls(rng);
      acc[k].add(c.fg_intersection, c.fg_union);
      oc[k].first += o.fi;
      oc[k].second += o.fu;
      tot.fi += o.fi;
      tot.fu += o.fu;
      tot.bi += o.bi;
      tot.bu += o.bu;
      eps.push_back(c);
    }
    std::set<int> classes;
    long double want = 0;
    for (const auto& [k, v] : oc) {
      classes.insert(k);
      CHECK(oracle::Rational{acc[k].intersection, acc[k].union_} == oracle::Rational{v.first, v.second});
      want += static_cast<long double>(v.first) / v.second;
    }
    CHECK(std::abs(miou(acc, classes) - static_cast<double>(want / classes.size())) <= 1e-15);
    const double fb = (double(tot.fi) / double(tot.fu) + double(tot.bi) / double(tot.bu)) / 2;
    CHECK(fb_miou(eps) == fb);
  }
}
