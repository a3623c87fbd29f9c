#include "maskboost/wire.hpp"

#include <json.hpp>

#include "maskboost/base64.hpp"
#include "maskboost/errors.hpp"
#include "maskboost/mask_io.hpp"

namespace maskboost::wire {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void protocol_error(const std::string& what) {
  throw Error(ErrorKind::ProtocolError, what);
}

Json parse_body(std::string_view body) {
  Json j = Json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) protocol_error("body is not valid JSON");
  if (!j.is_object()) protocol_error("body is not a JSON object");
  return j;
}

const Json& field(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) protocol_error(std::string("missing field '") + key + "'");
  return *it;
}

std::uint32_t uint_field(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
      v.get<std::int64_t>() > std::int64_t{0xffffffff}) {
    protocol_error(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint32_t>();
}

double number_field(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_number()) protocol_error(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

const std::string& string_field(const Json& obj, const char* key) {
  const Json& v = field(obj, key);
  if (!v.is_string()) protocol_error(std::string("field '") + key + "' must be a string");
  return v.get_ref<const std::string&>();
}

Json prompts_to_json(const PromptSet& prompts) {
  Json j;
  j["mode"] = std::string(to_string(prompts.mode));
  if (prompts.point) {
    j["point"] = Json{{"x", prompts.point->x}, {"y", prompts.point->y}, {"label", prompts.point->label}};
  } else {
    j["point"] = nullptr;
  }
  if (prompts.box) {
    j["box"] = Json{{"x1", prompts.box->x1}, {"y1", prompts.box->y1},
                    {"x2", prompts.box->x2}, {"y2", prompts.box->y2}};
  } else {
    j["box"] = nullptr;
  }
  return j;
}

PromptSet prompts_from_json(const Json& j) {
  if (!j.is_object()) protocol_error("'prompts' must be an object");
  PromptSet prompts;
  try {
    prompts.mode = parse_prompt_mode(string_field(j, "mode"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ProtocolError) throw;
    protocol_error(e.what());
  }
  const Json& point = field(j, "point");
  if (!point.is_null()) {
    if (!point.is_object()) protocol_error("'point' must be an object or null");
    PointPrompt p;
    p.x = number_field(point, "x");
    p.y = number_field(point, "y");
    if (point.contains("label")) {
      if (!point["label"].is_number_integer()) protocol_error("'label' must be an integer");
      p.label = point["label"].get<int>();
    }
    prompts.point = p;
  }
  const Json& box = field(j, "box");
  if (!box.is_null()) {
    if (!box.is_object()) protocol_error("'box' must be an object or null");
    prompts.box = BoxPrompt{uint_field(box, "x1"), uint_field(box, "y1"),
                            uint_field(box, "x2"), uint_field(box, "y2")};
  }
  if (!prompts.consistent()) protocol_error("prompts do not match their mode");
  return prompts;
}

}  // namespace

std::string encode_prompts(const PromptSet& prompts) { return prompts_to_json(prompts).dump(); }

PromptSet decode_prompts(std::string_view body) { return prompts_from_json(parse_body(body)); }

std::string encode_request(const SegmentRequest& request) {
  Json j;
  j["episode_id"] = request.episode_id;
  if (request.image_bytes) {
    j["image"] = Json{{"png_b64", base64_encode(*request.image_bytes)}};
  } else {
    j["image"] = Json{{"uri", request.image_ref}};
  }
  j["prompts"] = prompts_to_json(request.prompts);
  return j.dump();
}

SegmentRequest decode_request(std::string_view body) {
  const Json j = parse_body(body);
  SegmentRequest request;
  request.episode_id = string_field(j, "episode_id");
  const Json& image = field(j, "image");
  if (!image.is_object()) protocol_error("'image' must be an object");
  const bool has_uri = image.contains("uri");
  const bool has_b64 = image.contains("png_b64");
  if (has_uri == has_b64) protocol_error("'image' needs exactly one of 'uri' or 'png_b64'");
  if (has_uri) {
    request.image_ref = string_field(image, "uri");
  } else {
    request.image_bytes = base64_decode(string_field(image, "png_b64"));
  }
  request.prompts = prompts_from_json(field(j, "prompts"));
  return request;
}

std::string encode_response(const BinaryMask& mask, std::optional<double> score) {
  Json j;
  j["mask_png_b64"] = base64_encode(save_mask(mask, MaskFormat::Png));
  j["score"] = score ? Json(*score) : Json(nullptr);
  j["width"] = mask.width();
  j["height"] = mask.height();
  return j.dump();
}

DecodedResponse decode_response(std::string_view body) {
  const Json j = parse_body(body);
  const std::uint32_t width = uint_field(j, "width");
  const std::uint32_t height = uint_field(j, "height");
  std::optional<double> score;
  if (const auto it = j.find("score"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) protocol_error("'score' must be a number or null");
    score = it->get<double>();
  }
  const std::vector<std::uint8_t> png = base64_decode(string_field(j, "mask_png_b64"));
  std::optional<BinaryMask> mask;
  try {
    mask = load_mask(png, MaskFormat::Png);
  } catch (const Error& e) {
    protocol_error(std::string("mask_png_b64 does not hold a gray PNG: ") + e.what());
  }
  if (mask->width() != width || mask->height() != height) {
    throw Error(ErrorKind::DimensionMismatch,
                "response mask is " + std::to_string(mask->width()) + "x" +
                    std::to_string(mask->height()) + " but declares " +
                    std::to_string(width) + "x" + std::to_string(height));
  }
  return {std::move(*mask), score};
}

std::string encode_health(const HealthStatus& health) {
  Json j;
  j["status"] = health.status;
  j["model_id"] = health.model_id;
  return j.dump();
}

HealthStatus decode_health(std::string_view body) {
  const Json j = parse_body(body);
  return {string_field(j, "status"), string_field(j, "model_id")};
}

}  // namespace maskboost::wire
