#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "maskboost/errors.hpp"
#include "maskboost/mask_io.hpp"
#include "maskboost/segmenter.hpp"
#include "maskboost/wire.hpp"
#include "../support/oracle.hpp"
#include "../support/stub_server.hpp"
#include "../support/synthetic.hpp"

using namespace maskboost;

namespace {

SegmentRequest request_for(const std::string& id, const BinaryMask& m) {
  SegmentRequest r;
  r.episode_id = id;
  r.image_ref = "images/" + id + ".jpg";
  r.prompts = generate_prompts(m, PromptMode::Box);
  r.width = m.width();
  r.height = m.height();
  r.source_mask = m;
  return r;
}

/// Counts overlapping calls to check the in-flight bound.
class SlowSegmenter final : public Segmenter {
 public:
  std::string id() const override { return "test:slow"; }
  mutable std::atomic<int> now{0}, peak{0};

 protected:
  SegmentResponse run(const SegmentRequest& r) const override {
    const int n = ++now;
    int p = peak.load();
    while (n > p && !peak.compare_exchange_weak(p, n)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --now;
    return {*r.source_mask, std::nullopt, id()};
  }
};

}  // namespace

TEST_CASE("identity and ground-truth mocks") {
  std::mt19937_64 rng(61);
  const auto m = oracle::from_grid(oracle::random_grid(rng, 9, 7, 0.5));
  const auto g = oracle::from_grid(oracle::random_grid(rng, 9, 7, 0.5));
  CHECK(segment(request_for("e", m), IdentitySegmenter{}).mask == m);
  const GroundTruthSegmenter gt([&](const std::string& id) {
    CHECK(id == "e");
    return g;
  });
  CHECK(segment(request_for("e", m), gt).mask == g);
  CHECK(segment(request_for("e", m), DilateSegmenter{1}).mask == dilate(m, 1));
}

TEST_CASE("precomputed lookup") {
  const auto dir = synthetic::scratch_dir("precomputed");
  BinaryMask m(6, 4);
  m.set(2, 1);
  write_mask_file(dir / "ep_007.png", m);
  const PrecomputedSegmenter pre(dir);
  CHECK(segment(request_for("ep_007", BinaryMask(6, 4, true)), pre).mask == m);
  try {
    (void)segment(request_for("ep_008", BinaryMask(6, 4, true)), pre);
    FAIL("expected MissingPrecomputed");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingPrecomputed);
  }
  try {
    (void)segment(request_for("ep_007", BinaryMask(5, 4, true)), pre);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("precomputed shapes manifest is checked") {
  const auto dir = synthetic::scratch_dir("precomputed_manifest");
  write_mask_file(dir / "a.png", BinaryMask(6, 4, true));
  std::ofstream(dir / "manifest.json") << R"({"a": {"width": 8, "height": 4}})";
  const PrecomputedSegmenter pre(dir);
  try {
    (void)segment(request_for("a", BinaryMask(6, 4, true)), pre);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("batches keep order and isolate failures") {
  const auto dir = synthetic::scratch_dir("batch");
  std::vector<SegmentRequest> reqs;
  std::mt19937_64 rng(62);
  for (int i = 0; i < 3; ++i) {
    const auto m = oracle::from_grid(oracle::random_grid(rng, 8, 8, 0.5));
    reqs.push_back(request_for("ep_" + std::to_string(i), m));
    if (i != 1) write_mask_file(dir / ("ep_" + std::to_string(i) + ".png"), m);
  }
  for (std::size_t par : {1u, 2u, 8u}) {
    const auto ident = segment_batch(reqs, IdentitySegmenter{}, par);
    REQUIRE(ident.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(std::get<SegmentResponse>(ident[i]).mask == *reqs[i].source_mask);

    const auto pre = segment_batch(reqs, PrecomputedSegmenter{dir}, par);
    CHECK(std::holds_alternative<SegmentResponse>(pre[0]));
    REQUIRE(std::holds_alternative<SegmentFailure>(pre[1]));
    CHECK(std::get<SegmentFailure>(pre[1]).kind == ErrorKind::MissingPrecomputed);
    CHECK(std::get<SegmentResponse>(pre[2]).mask == *reqs[2].source_mask);
  }
  CHECK(segment_batch({}, IdentitySegmenter{}, 4).empty());
}

TEST_CASE("batch parallelism is bounded") {
  std::vector<SegmentRequest> reqs;
  for (int i = 0; i < 24; ++i) reqs.push_back(request_for("e" + std::to_string(i), BinaryMask(4, 4, true)));
  SlowSegmenter slow;
  const auto out = segment_batch(reqs, slow, 3);
  CHECK(out.size() == 24);
  CHECK(slow.peak.load() <= 3);
  CHECK(slow.peak.load() >= 1);
}

TEST_CASE("backend specs") {
  CHECK(BackendConfig::parse("mock:identity").kind == BackendConfig::Kind::MockIdentity);
  CHECK(BackendConfig::parse("mock:gt").kind == BackendConfig::Kind::MockGroundTruth);
  const auto d = BackendConfig::parse("mock:dilate:3");
  CHECK(d.kind == BackendConfig::Kind::MockDilate);
  CHECK(d.dilate_radius == 3);
  const auto r = BackendConfig::parse("remote:http://127.0.0.1:8080");
  CHECK(r.kind == BackendConfig::Kind::Remote);
  CHECK(r.location == "http://127.0.0.1:8080");
  CHECK(BackendConfig::parse("precomputed:/tmp/x").to_string() == "precomputed:/tmp/x");
  CHECK_THROWS_AS(BackendConfig::parse("mock:dilate:x"), Error);
  CHECK_THROWS_AS(BackendConfig::parse("sam"), Error);
}

TEST_CASE("remote backend against the loopback stub") {
  BinaryMask reply(5, 4);
  reply.set(1, 1);
  reply.set(4, 3);
  stub::Server server([&](const std::string& body) {
    const auto req = wire::decode_request(body);
    (void)req;
    return stub::Reply{200, wire::encode_response(reply, 0.9)};
  });
  const RemoteSegmenter remote(server.url());
  CHECK(remote.health().status == "ok");
  CHECK(remote.health().model_id == "stub");
  auto req = request_for("ep_1", BinaryMask(5, 4, true));
  req.source_mask.reset();
  const auto res = segment(req, remote);
  CHECK(res.mask == reply);
  CHECK(res.score == 0.9);
  REQUIRE(server.bodies().size() == 1);
  CHECK(server.bodies()[0] == wire::encode_request(req));
}

TEST_CASE("remote backend maps HTTP failures to error kinds") {
  int status = 503;
  stub::Server server([&](const std::string&) { return stub::Reply{status, "{}"}; });
  const RemoteSegmenter remote(server.url());
  auto req = request_for("ep_1", BinaryMask(2, 2, true));
  auto kind = [&] {
    try {
      (void)segment(req, remote);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;
  };
  CHECK(kind() == ErrorKind::BackendUnavailable);
  status = 500;
  CHECK(kind() == ErrorKind::ProtocolError);
  status = 200;
  CHECK(kind() == ErrorKind::ProtocolError);
}

TEST_CASE("unreachable remote retries once then reports unavailable") {
  const int port = stub::closed_port();
  RemoteOptions opts;
  opts.connect_timeout = std::chrono::milliseconds(300);
  opts.read_timeout = std::chrono::milliseconds(300);
  const RemoteSegmenter remote("http://127.0.0.1:" + std::to_string(port), opts);
  try {
    (void)segment(request_for("e", BinaryMask(2, 2, true)), remote);
    FAIL("expected BackendUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BackendUnavailable);
  }
}

TEST_CASE("remote batch respects the in-flight bound") {
  stub::Server server([&](const std::string&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    return stub::Reply{200, wire::encode_response(BinaryMask(3, 3, true), std::nullopt)};
  });
  const RemoteSegmenter remote(server.url());
  std::vector<SegmentRequest> reqs;
  for (int i = 0; i < 12; ++i) reqs.push_back(request_for("e" + std::to_string(i), BinaryMask(3, 3, true)));
  for (auto& r : reqs) r.prompts = PromptSet{PromptMode::Point, PointPrompt{1, 1, 1}, std::nullopt};
  const auto out = segment_batch(reqs, remote, 2);
  for (const auto& o : out) CHECK(std::holds_alternative<SegmentResponse>(o));
  CHECK(server.max_in_flight() <= 2);
  CHECK(server.bodies().size() == 12);
}
