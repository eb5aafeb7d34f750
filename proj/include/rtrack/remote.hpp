#pragma once

// HTTP client for an external detection service.
//
//   POST /detect  {"rgb_image": b64, "thermal_image": b64, "prompt": str,
//                  "image_width": int, "image_height": int}
//   200           {"raw_text": str, "boxes": [[x1,y1,x2,y2], ...],
//                  "model_width": int, "model_height": int}
//
// Boxes are taken from raw_text through parse_answer and mapped from the
// model's coordinate space to the sequence's.

#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"
#include "rtrack/perception.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

namespace rtrack {

struct RemoteConfig {
  std::string endpoint;  // scheme://host:port
  int timeout_ms = 30000;
  int retries = 2;  // attempts after the first
  int retry_backoff_ms = 50;

  /// Fills unset fields from REFTRACK_ENDPOINT / REFTRACK_TIMEOUT_MS.
  static RemoteConfig from_env() { return from_env(RemoteConfig()); }
  static RemoteConfig from_env(RemoteConfig base) {
    if (base.endpoint.empty())
      if (const char* e = std::getenv("REFTRACK_ENDPOINT")) base.endpoint = e;
    if (const char* t = std::getenv("REFTRACK_TIMEOUT_MS")) {
      char* end = nullptr;
      const long v = std::strtol(t, &end, 10);
      if (end && *end == '\0' && v > 0) base.timeout_ms = static_cast<int>(v);
    }
    return base;
  }
};

struct RemoteResponse {
  std::vector<Detection> detections;
  std::string raw_text;
  ImageDims model_dims;
};

namespace detail {

inline std::string read_file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::BackendFailure, "cannot read frame " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline nlohmann::json make_detect_request(const FrameRef& frame, const std::string& prompt) {
  return {{"rgb_image", httplib::detail::base64_encode(detail::read_file_bytes(frame.rgb))},
          {"thermal_image", httplib::detail::base64_encode(detail::read_file_bytes(frame.thermal))},
          {"prompt", prompt},
          {"image_width", frame.dims.width},
          {"image_height", frame.dims.height}};
}

/// Validates a /detect response body and maps its boxes into `seq_dims`.
inline RemoteResponse parse_detect_response(const std::string& body, const ImageDims& seq_dims) {
  RemoteResponse r;
  try {
    const auto j = nlohmann::json::parse(body);
    r.raw_text = j.at("raw_text").get<std::string>();
    r.model_dims = {j.at("model_width").get<int>(), j.at("model_height").get<int>()};
    if (!j.at("boxes").is_array()) throw Error(ErrorCode::ProtocolError, "boxes must be an array");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed /detect response: ") + ex.what());
  }
  if (!r.model_dims.valid()) throw Error(ErrorCode::ProtocolError, "model dimensions must be positive");
  for (const auto& b : parse_answer(r.raw_text).boxes)
    r.detections.push_back({rescale(b, r.model_dims, seq_dims), 1.0, "remote"});
  return r;
}

inline RemoteResponse remote_detect(const RemoteConfig& cfg, const FrameRef& frame,
                                    const std::string& prompt) {
  if (cfg.endpoint.empty()) throw Error(ErrorCode::RemoteError, "no endpoint configured");
  const std::string body = make_detect_request(frame, prompt).dump();

  httplib::Client client(cfg.endpoint);
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_error;
  const int attempts = 1 + std::max(0, cfg.retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && cfg.retry_backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg.retry_backoff_ms));
    auto res = client.Post("/detect", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    return parse_detect_response(res->body, frame.dims);
  }
  throw Error(ErrorCode::RemoteError, cfg.endpoint + "/detect failed after " +
                                          std::to_string(attempts) + " attempt(s): " + last_error);
}

class RemoteBackend final : public DetectorBackend {
 public:
  explicit RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {}

  std::vector<Detection> detect(const FrameRef& frame, std::string_view query) override {
    last_ = remote_detect(cfg_, frame, build_prompt(query));
    return last_.detections;
  }
  std::string name() const override { return "remote"; }
  const RemoteResponse& last_response() const { return last_; }

 private:
  RemoteConfig cfg_;
  RemoteResponse last_;
};

}  // namespace rtrack
