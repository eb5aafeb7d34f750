#pragma once

#include "rtrack/dataio.hpp"
#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"
#include "rtrack/rewards.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rtrack {

struct Detection {
  BBox box;
  double confidence = 1.0;
  std::string source;
};

/// A frame pair handed to a detector. Paths are opaque; nothing here decodes
/// pixels.
struct FrameRef {
  int index = 0;  // 1-based
  std::filesystem::path rgb;
  std::filesystem::path thermal;
  ImageDims dims;
};

inline FrameRef frame_ref(const SequenceManifest& m, int frame) {
  return {frame, m.rgb_frames.at(static_cast<std::size_t>(frame - 1)),
          m.thermal_frames.at(static_cast<std::size_t>(frame - 1)), m.dims};
}

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  /// Throws Error (BackendFailure, RemoteError or ProtocolError) when the
  /// frame cannot be served.
  virtual std::vector<Detection> detect(const FrameRef& frame, std::string_view query) = 0;
  virtual std::string name() const = 0;
};

struct PerturbationConfig {
  double jitter_sigma = 0.0;  // center noise as a fraction of box size
  double scale_sigma = 0.0;   // log-size noise
  double p_miss = 0.0;
  double fp_rate = 0.0;  // expected false positives per frame
  std::uint64_t seed = 0;

  void validate() const {
    if (jitter_sigma < 0 || scale_sigma < 0 || fp_rate < 0)
      throw Error(ErrorCode::InvalidConfig, "noise parameters must be non-negative");
    if (!(p_miss >= 0 && p_miss <= 1)) throw Error(ErrorCode::InvalidConfig, "p_miss must lie in [0,1]");
  }
  bool is_zero() const { return jitter_sigma == 0 && scale_sigma == 0 && p_miss == 0 && fp_rate == 0; }
};

/// Ground-truth-driven detections for one frame. Every target draws its
/// dropout and jitter variates whether or not it is dropped, so runs sharing a
/// seed see nested dropout sets as p_miss grows.
inline std::vector<Detection> oracle_detect(const GroundTruth& gt, const ExpressionAnnotation& expr,
                                            int frame, const ImageDims& dims,
                                            const PerturbationConfig& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Detection> out;

  for (const auto& e : gt.at(frame)) {
    const auto* t = expr.target(e.id);
    if (!t || !t->covers(frame)) continue;
    const double u = unit(rng);
    const double zx = normal(rng), zy = normal(rng), zw = normal(rng), zh = normal(rng);
    if (u < p.p_miss) continue;

    BBox b = e.box;
    if (p.jitter_sigma > 0 || p.scale_sigma > 0) {
      const double cx = b.center_x() + zx * p.jitter_sigma * b.width();
      const double cy = b.center_y() + zy * p.jitter_sigma * b.height();
      const double w = b.width() * std::exp(zw * p.scale_sigma);
      const double h = b.height() * std::exp(zh * p.scale_sigma);
      b = {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
    }
    b = clamp_to_image(b, dims);
    if (b.has_area()) out.push_back({b, 1.0, "oracle"});
  }

  if (p.fp_rate > 0) {
    std::poisson_distribution<int> count(p.fp_rate);
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
      const double w = dims.width * (0.05 + 0.2 * unit(rng));
      const double h = dims.height * (0.05 + 0.2 * unit(rng));
      const double x = unit(rng) * (dims.width - w);
      const double y = unit(rng) * (dims.height - h);
      const BBox b = clamp_to_image(BBox::from_xywh(x, y, w, h), dims);
      if (b.has_area()) out.push_back({b, 1.0, "oracle-fp"});
    }
  }
  return out;
}

class OracleBackend final : public DetectorBackend {
 public:
  OracleBackend(GroundTruth gt, ExpressionAnnotation expr, PerturbationConfig p)
      : gt_(std::move(gt)), expr_(std::move(expr)), p_(p), rng_(p.seed) {
    p_.validate();
  }

  std::vector<Detection> detect(const FrameRef& frame, std::string_view) override {
    return oracle_detect(gt_, expr_, frame.index, frame.dims, p_, rng_);
  }
  std::string name() const override { return "oracle"; }

 private:
  GroundTruth gt_;
  ExpressionAnnotation expr_;
  PerturbationConfig p_;
  std::mt19937_64 rng_;
};

/// Boxes from a cached completion, exactly as parse_answer extracts them.
inline std::vector<Detection> parser_detect(std::string_view completion) {
  std::vector<Detection> out;
  for (const auto& b : parse_answer(completion).boxes) out.push_back({b, 1.0, "parser"});
  return out;
}

/// Replays completions stored as <cache_dir>/NNNNNN.txt, one file per frame.
class ParserBackend final : public DetectorBackend {
 public:
  explicit ParserBackend(std::filesystem::path cache_dir) : dir_(std::move(cache_dir)) {}

  std::vector<Detection> detect(const FrameRef& frame, std::string_view) override {
    const auto path = dir_ / frame_filename(frame.index, ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::BackendFailure, "no cached completion " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parser_detect(ss.str());
  }
  std::string name() const override { return "parser"; }

 private:
  std::filesystem::path dir_;
};

inline constexpr std::string_view kPromptPrefix =
    "You are a Visual Language Model specifically designed for paired and perfectly aligned "
    "RGB + thermal images. Please utilize the information from both modes simultaneously and "
    "detect all targets that match: ";
inline constexpr std::string_view kPromptSuffix =
    " in the image and output their coordinates with [x1,y1,x2,y2] format. First output the "
    "thinking process in <think></think> tags and then output the final answer in "
    "<answer></answer> tags. Note that the <answer></answer> tags should not contain any text, "
    "only the coordinates in the [x1,y1,x2,y2] format.";

inline std::string build_prompt(std::string_view query) {
  if (query.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw Error(ErrorCode::EmptyQuery, "query must not be empty");
  std::string out;
  out.reserve(kPromptPrefix.size() + query.size() + kPromptSuffix.size());
  out.append(kPromptPrefix).append(query).append(kPromptSuffix);
  return out;
}

}  // namespace rtrack
