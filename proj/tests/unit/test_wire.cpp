#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "maskboost/base64.hpp"
#include "maskboost/errors.hpp"
#include "maskboost/wire.hpp"
#include "../support/stub_server.hpp"

using namespace maskboost;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::filesystem::path(MASKBOOST_FIXTURES) / "wire" / name, std::ios::binary);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

BinaryMask expected_4x3() {
  BinaryMask m(4, 3);
  m.set(0, 0);
  m.set(1, 0);
  m.set(2, 1);
  m.set(3, 2);
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

TEST_CASE("golden requests re-encode byte for byte") {
  for (auto name : {"request_box_uri.json", "request_mixed_b64.json", "request_point_uri.json"}) {
    CAPTURE(name);
    const auto body = fixture(name);
    CHECK(wire::encode_request(wire::decode_request(body)) == body);
  }
  const auto mixed = wire::decode_request(fixture("request_mixed_b64.json"));
  REQUIRE(mixed.image_bytes.has_value());
  CHECK(mixed.image_bytes->size() == 52);
  CHECK(mixed.prompts.point == PointPrompt{4.5, 0.25, 1});
  CHECK(mixed.prompts.box == BoxPrompt{0, 0, 9, 9});
}

TEST_CASE("golden responses decode to the expected mask") {
  const auto r = wire::decode_response(fixture("response_4x3.json"));
  CHECK(r.mask == expected_4x3());
  CHECK(r.score == 0.875);
  CHECK_FALSE(wire::decode_response(fixture("response_4x3_null_score.json")).score.has_value());
  CHECK(kind_of([] { wire::decode_response(fixture("response_mismatch.json")); }) ==
        ErrorKind::DimensionMismatch);
  const auto h = wire::decode_health(fixture("health.json"));
  CHECK(h.model_id == "stub-sam-vit-h");
  CHECK(wire::encode_health(h) == fixture("health.json"));
}

TEST_CASE("responses round trip through the encoder") {
  const auto m = expected_4x3();
  const auto back = wire::decode_response(wire::encode_response(m, 0.5));
  CHECK(back.mask == m);
  CHECK(back.score == 0.5);
}

TEST_CASE("malformed bodies are protocol errors") {
  for (std::string body : {"", "[]", "{\"width\":1}", R"({"mask_png_b64":"@@@","width":1,"height":1})",
                           R"({"mask_png_b64":"AAAA","width":1,"height":1})",
                           R"({"mask_png_b64":"AAAA","width":-1,"height":1})"}) {
    CAPTURE(body);
    CHECK(kind_of([&] { wire::decode_response(body); }) == ErrorKind::ProtocolError);
  }
  CHECK(kind_of([] {
          wire::decode_request(R"({"episode_id":"e","image":{},"prompts":{"mode":"box","point":null,"box":null}})");
        }) == ErrorKind::ProtocolError);
  CHECK(kind_of([] {
          wire::decode_prompts(R"({"mode":"box","point":{"x":1,"y":1,"label":1},"box":null})");
        }) == ErrorKind::ProtocolError);
}

TEST_CASE("base64") {
  const std::vector<std::uint8_t> bytes = {0, 1, 2, 250, 251};
  CHECK(base64_decode(base64_encode(bytes)) == bytes);
  CHECK(base64_encode(std::vector<std::uint8_t>{'f', 'o'}) == "Zm8=");
  CHECK(base64_decode("").empty());
  CHECK_THROWS_AS(base64_decode("Zm8"), Error);
}

TEST_CASE("requests cross the loopback stub unchanged") {
  const auto reply = fixture("response_4x3.json");
  stub::Server server([&](const std::string&) { return stub::Reply{200, reply}; });
  for (auto name : {"request_box_uri.json", "request_mixed_b64.json", "request_point_uri.json"}) {
    auto req = wire::decode_request(fixture(name));
    req.width = 4;
    req.height = 3;
    const auto res = segment(req, RemoteSegmenter(server.url()));
    CHECK(res.mask == expected_4x3());
    CHECK(res.score == 0.875);
  }
  const auto bodies = server.bodies();
  REQUIRE(bodies.size() == 3);
  CHECK(bodies[0] == fixture("request_box_uri.json"));
  CHECK(bodies[1] == fixture("request_mixed_b64.json"));
  CHECK(bodies[2] == fixture("request_point_uri.json"));
}

TEST_CASE("stub response with mismatched dimensions") {
  const auto reply = fixture("response_mismatch.json");
  stub::Server server([&](const std::string&) { return stub::Reply{200, reply}; });
  auto req = wire::decode_request(fixture("request_box_uri.json"));
  req.width = 5;
  req.height = 3;
  CHECK(kind_of([&] { segment(req, RemoteSegmenter(server.url())); }) == ErrorKind::DimensionMismatch);
}
