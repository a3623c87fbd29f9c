#pragma once

// JSON bodies of the segmentation service protocol:
//
//   POST /segment
//     {"episode_id": str,
//      "image": {"uri": str} | {"png_b64": str},
//      "prompts": {"mode": "point"|"box"|"mixed",
//                  "point": {"x": num, "y": num, "label": 1} | null,
//                  "box": {"x1": int, "y1": int, "x2": int, "y2": int} | null}}
//   -> {"mask_png_b64": str, "score": num|null, "width": int, "height": int}
//
//   GET /health -> {"status": "ok", "model_id": str}
//
// Box corners are inclusive pixel coordinates.

#include <optional>
#include <string>
#include <string_view>

#include "maskboost/mask.hpp"
#include "maskboost/segmenter.hpp"

namespace maskboost::wire {

std::string encode_prompts(const PromptSet& prompts);
/// Throws Error(ProtocolError).
PromptSet decode_prompts(std::string_view body);

std::string encode_request(const SegmentRequest& request);

/// Inverse of encode_request for conforming servers. width/height and
/// source_mask are not part of the wire body and stay unset.
SegmentRequest decode_request(std::string_view body);

std::string encode_response(const BinaryMask& mask, std::optional<double> score);

struct DecodedResponse {
  BinaryMask mask;
  std::optional<double> score;
};

/// Throws Error(ProtocolError) for malformed bodies and
/// Error(DimensionMismatch) when the PNG disagrees with width/height.
DecodedResponse decode_response(std::string_view body);

std::string encode_health(const HealthStatus& health);
HealthStatus decode_health(std::string_view body);

}  // namespace maskboost::wire
