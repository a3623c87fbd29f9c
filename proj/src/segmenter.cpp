#include "maskboost/segmenter.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <thread>

#include "maskboost/mask_io.hpp"
#include "maskboost/wire.hpp"

namespace maskboost {

namespace {

void validate(const SegmentRequest& request, const Segmenter& backend) {
  if (request.episode_id.empty()) {
    throw Error(ErrorKind::InvalidRequest, "request has no episode_id");
  }
  if (request.width == 0 || request.height == 0) {
    throw Error(ErrorKind::InvalidRequest,
                "request " + request.episode_id + " does not declare its image size");
  }
  if (!request.prompts.consistent()) {
    throw Error(ErrorKind::InvalidRequest,
                "request " + request.episode_id + " has prompts inconsistent with their mode");
  }
  if (backend.needs_image() && request.image_ref.empty() == !request.image_bytes.has_value()) {
    throw Error(ErrorKind::InvalidRequest,
                "request " + request.episode_id + " needs exactly one of image_ref or image_bytes");
  }
}

const BinaryMask& source_mask(const SegmentRequest& request) {
  if (!request.source_mask) {
    throw Error(ErrorKind::InvalidRequest,
                "mock backend needs the source mask for " + request.episode_id);
  }
  return *request.source_mask;
}

}  // namespace

SegmentResponse segment(const SegmentRequest& request, const Segmenter& backend) {
  validate(request, backend);
  SegmentResponse response = backend.run(request);
  if (response.mask.width() != request.width || response.mask.height() != request.height) {
    throw Error(ErrorKind::DimensionMismatch,
                "backend returned a " + std::to_string(response.mask.width()) + "x" +
                    std::to_string(response.mask.height()) + " mask for " + request.episode_id +
                    ", expected " + std::to_string(request.width) + "x" +
                    std::to_string(request.height));
  }
  return response;
}

std::vector<SegmentResult> segment_batch(std::span<const SegmentRequest> requests,
                                         const Segmenter& backend,
                                         std::size_t parallelism) {
  std::vector<SegmentResult> results(requests.size(), SegmentFailure{ErrorKind::IoError, "not run"});
  auto run_one = [&](std::size_t i) {
    try {
      results[i] = segment(requests[i], backend);
    } catch (const Error& e) {
      results[i] = SegmentFailure{e.kind(), e.what()};
    } catch (const std::exception& e) {
      results[i] = SegmentFailure{ErrorKind::BackendUnavailable, e.what()};
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(parallelism, 1), requests.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) run_one(i);
      });
    }
  }
  return results;
}

SegmentResponse IdentitySegmenter::run(const SegmentRequest& request) const {
  return {source_mask(request), std::nullopt, id()};
}

SegmentResponse GroundTruthSegmenter::run(const SegmentRequest& request) const {
  if (!lookup_) throw Error(ErrorKind::InvalidConfig, "ground-truth mock has no fixture lookup");
  return {lookup_(request.episode_id), std::nullopt, id()};
}

SegmentResponse DilateSegmenter::run(const SegmentRequest& request) const {
  return {dilate(source_mask(request), radius_), std::nullopt, id()};
}

PrecomputedSegmenter::PrecomputedSegmenter(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw Error(ErrorKind::InvalidConfig, "precomputed mask directory not found: " + dir_.string());
  }
  const auto manifest = dir_ / "manifest.json";
  if (!std::filesystem::exists(manifest)) return;
  const std::vector<std::uint8_t> bytes = read_file_bytes(manifest);
  const auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::InvalidConfig, "malformed " + manifest.string());
  }
  for (const auto& [key, shape] : j.items()) {
    if (!shape.is_object() || !shape.contains("width") || !shape.contains("height") ||
        !shape["width"].is_number_unsigned() || !shape["height"].is_number_unsigned()) {
      throw Error(ErrorKind::InvalidConfig, "bad shape entry for '" + key + "' in " + manifest.string());
    }
    shapes_[key] = {shape["width"].get<std::uint32_t>(), shape["height"].get<std::uint32_t>()};
  }
}

SegmentResponse PrecomputedSegmenter::run(const SegmentRequest& request) const {
  std::filesystem::path path;
  for (const char* ext : {".png", ".pgm"}) {
    auto candidate = dir_ / (request.episode_id + ext);
    if (std::filesystem::exists(candidate)) {
      path = std::move(candidate);
      break;
    }
  }
  if (path.empty()) {
    throw Error(ErrorKind::MissingPrecomputed,
                "no precomputed mask for " + request.episode_id + " in " + dir_.string());
  }
  BinaryMask mask = read_mask_file(path);
  if (const auto it = shapes_.find(request.episode_id); it != shapes_.end()) {
    if (mask.width() != it->second.first || mask.height() != it->second.second) {
      throw Error(ErrorKind::DimensionMismatch,
                  path.string() + " does not match the shape recorded in manifest.json");
    }
  }
  return {std::move(mask), std::nullopt, id()};
}

RemoteSegmenter::RemoteSegmenter(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  constexpr std::string_view scheme = "http://";
  if (base_url_.rfind(scheme, 0) != 0) {
    throw Error(ErrorKind::InvalidConfig, "remote backend URL must start with http://");
  }
  const auto slash = base_url_.find('/', scheme.size());
  scheme_host_port_ = base_url_.substr(0, slash);
  if (slash != std::string::npos) {
    path_prefix_ = base_url_.substr(slash);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

namespace {

httplib::Client make_client(const std::string& scheme_host_port, const RemoteOptions& options) {
  httplib::Client client(scheme_host_port);
  const auto connect = options.connect_timeout.count();
  const auto read = options.read_timeout.count();
  client.set_connection_timeout(connect / 1000, (connect % 1000) * 1000);
  client.set_read_timeout(read / 1000, (read % 1000) * 1000);
  client.set_write_timeout(read / 1000, (read % 1000) * 1000);
  return client;
}

template <typename Call>
httplib::Result with_retry(const RemoteOptions& options, const std::string& what, Call&& call) {
  httplib::Result result = call();
  for (int attempt = 0; !result && attempt < options.retries; ++attempt) result = call();
  if (!result) {
    throw Error(ErrorKind::BackendUnavailable,
                what + ": " + httplib::to_string(result.error()));
  }
  return result;
}

void check_status(const httplib::Response& response, const std::string& what) {
  if (response.status == 200) return;
  const ErrorKind kind =
      response.status == 503 ? ErrorKind::BackendUnavailable : ErrorKind::ProtocolError;
  throw Error(kind, what + " returned HTTP " + std::to_string(response.status) + ": " + response.body);
}

}  // namespace

HealthStatus RemoteSegmenter::health() const {
  auto client = make_client(scheme_host_port_, options_);
  const std::string path = path_prefix_ + "/health";
  auto result = with_retry(options_, "GET " + base_url_ + "/health",
                           [&] { return client.Get(path); });
  check_status(*result, "GET /health");
  return wire::decode_health(result->body);
}

SegmentResponse RemoteSegmenter::run(const SegmentRequest& request) const {
  auto client = make_client(scheme_host_port_, options_);
  const std::string path = path_prefix_ + "/segment";
  const std::string body = wire::encode_request(request);
  auto result = with_retry(options_, "POST " + base_url_ + "/segment",
                           [&] { return client.Post(path, body, "application/json"); });
  check_status(*result, "POST /segment for " + request.episode_id);
  wire::DecodedResponse decoded = wire::decode_response(result->body);
  return {std::move(decoded.mask), decoded.score, id()};
}

BackendConfig BackendConfig::parse(const std::string& text) {
  BackendConfig config;
  auto rest_after = [&](std::string_view prefix) { return text.substr(prefix.size()); };
  if (text.rfind("remote:", 0) == 0) {
    config.kind = Kind::Remote;
    config.location = rest_after("remote:");
  } else if (text.rfind("precomputed:", 0) == 0) {
    config.kind = Kind::Precomputed;
    config.location = rest_after("precomputed:");
  } else if (text == "mock:identity") {
    config.kind = Kind::MockIdentity;
  } else if (text == "mock:gt") {
    config.kind = Kind::MockGroundTruth;
  } else if (text.rfind("mock:dilate:", 0) == 0) {
    config.kind = Kind::MockDilate;
    const std::string radius = rest_after("mock:dilate:");
    if (radius.empty() || !std::all_of(radius.begin(), radius.end(), ::isdigit) || radius.size() > 6) {
      throw Error(ErrorKind::InvalidConfig, "mock:dilate needs a non-negative integer radius");
    }
    config.dilate_radius = static_cast<std::uint32_t>(std::stoul(radius));
  } else {
    throw Error(ErrorKind::InvalidConfig,
                "backend must be remote:<url>, precomputed:<dir> or mock:{identity,gt,dilate:<r>}; got '" +
                    text + "'");
  }
  if ((config.kind == Kind::Remote || config.kind == Kind::Precomputed) && config.location.empty()) {
    throw Error(ErrorKind::InvalidConfig, "backend '" + text + "' is missing its location");
  }
  return config;
}

std::string BackendConfig::to_string() const {
  switch (kind) {
    case Kind::Remote: return "remote:" + location;
    case Kind::Precomputed: return "precomputed:" + location;
    case Kind::MockIdentity: return "mock:identity";
    case Kind::MockGroundTruth: return "mock:gt";
    case Kind::MockDilate: return "mock:dilate:" + std::to_string(dilate_radius);
  }
  return {};
}

std::unique_ptr<Segmenter> make_segmenter(const BackendConfig& config,
                                          GroundTruthSegmenter::Lookup ground_truth,
                                          RemoteOptions remote) {
  switch (config.kind) {
    case BackendConfig::Kind::Remote:
      return std::make_unique<RemoteSegmenter>(config.location, remote);
    case BackendConfig::Kind::Precomputed:
      return std::make_unique<PrecomputedSegmenter>(config.location);
    case BackendConfig::Kind::MockIdentity:
      return std::make_unique<IdentitySegmenter>();
    case BackendConfig::Kind::MockGroundTruth:
      return std::make_unique<GroundTruthSegmenter>(std::move(ground_truth));
    case BackendConfig::Kind::MockDilate:
      return std::make_unique<DilateSegmenter>(config.dilate_radius);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown backend kind");
}

}  // namespace maskboost
