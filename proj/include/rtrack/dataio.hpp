#pragma once

#include "rtrack/detail/placeholder_jpeg.hpp"
#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"
#include "rtrack/tracking_result.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

// Sequence layout:
//   <root>/visible/NNNNNN.jpg     RGB frames, 6-digit 1-based numbering
//   <root>/infrared/NNNNNN.jpg    thermal frames, pixel-aligned with visible/
//   <root>/gt.txt                 MOT ground truth
//   <root>/expressions.json       expression -> target ids and frame ranges
//   <root>/seqinfo.json           optional: name, image_width, image_height

namespace rtrack {

namespace fs = std::filesystem;

struct SequenceManifest {
  std::string name;
  fs::path root;
  std::vector<fs::path> rgb_frames;
  std::vector<fs::path> thermal_frames;
  ImageDims dims;
  int frame_count = 0;
};

/// One ground-truth row. Fields past the box are optional in the file;
/// anything after visibility is kept verbatim in `extra`.
struct GtEntry {
  int frame = 0;
  int id = 0;
  BBox box;
  double conf = 1.0;
  int cls = 1;
  double visibility = 1.0;
  std::vector<std::string> extra;
};

struct GroundTruth {
  std::map<int, std::vector<GtEntry>> frames;

  const std::vector<GtEntry>& at(int frame) const {
    static const std::vector<GtEntry> empty;
    const auto it = frames.find(frame);
    return it == frames.end() ? empty : it->second;
  }
  std::set<int> ids() const {
    std::set<int> s;
    for (const auto& [f, rows] : frames)
      for (const auto& r : rows) s.insert(r.id);
    return s;
  }
};

struct ExpressionTarget {
  int id = 0;
  std::vector<std::pair<int, int>> ranges;  // inclusive [start, end]

  bool covers(int frame) const {
    for (const auto& [a, b] : ranges)
      if (frame >= a && frame <= b) return true;
    return false;
  }
};

struct ExpressionAnnotation {
  std::string expression;
  std::vector<ExpressionTarget> targets;

  const ExpressionTarget* target(int id) const {
    for (const auto& t : targets)
      if (t.id == id) return &t;
    return nullptr;
  }
};

struct LoadedSequence {
  SequenceManifest manifest;
  GroundTruth gt;
  std::vector<ExpressionAnnotation> expressions;
};

inline std::string frame_filename(int frame, std::string_view ext = ".jpg") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d", frame);
  return std::string(buf) + std::string(ext);
}

/// Filesystem-safe name for an expression: lowercase alphanumerics joined by '-'.
inline std::string expression_slug(std::string_view expression) {
  std::string out;
  bool dash = false;
  for (const unsigned char c : expression) {
    if (std::isalnum(c)) {
      if (dash && !out.empty()) out.push_back('-');
      out.push_back(static_cast<char>(std::tolower(c)));
      dash = false;
    } else {
      dash = true;
    }
  }
  return out.empty() ? std::string("expression") : out;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

inline std::string format_2dp(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v + 0.0);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

// Reads width/height from the first start-of-frame marker of a JPEG file.
inline std::optional<ImageDims> jpeg_dims(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  auto byte = [&]() -> int { return in.get(); };
  if (byte() != 0xFF || byte() != 0xD8) return std::nullopt;
  while (in) {
    int b = byte();
    if (b != 0xFF) return std::nullopt;
    int marker = byte();
    while (marker == 0xFF) marker = byte();
    if (marker == 0xD9 || marker == 0xDA || marker < 0) return std::nullopt;
    const int len = (byte() << 8) | byte();
    const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                     marker != 0xCC;
    if (sof) {
      byte();  // precision
      const int h = (byte() << 8) | byte();
      const int w = (byte() << 8) | byte();
      if (w > 0 && h > 0) return ImageDims{w, h};
      return std::nullopt;
    }
    in.seekg(len - 2, std::ios::cur);
  }
  return std::nullopt;
}

inline std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Parses one MOT row: frame,id,x,y,w,h[,conf,class,visibility,...].
inline GtEntry parse_mot_line(const std::string& line, int line_number) {
  const auto fields = detail::split_csv(line);
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::ParseError, "line " + std::to_string(line_number) + ": " + why);
  };
  if (fields.size() < 6) throw fail("expected at least 6 fields");
  auto num = [&](std::size_t k) {
    try {
      std::size_t used = 0;
      const double v = std::stod(fields[k], &used);
      if (used != fields[k].size() || !std::isfinite(v)) throw fail("bad number '" + fields[k] + "'");
      return v;
    } catch (const std::invalid_argument&) {
      throw fail("bad number '" + fields[k] + "'");
    } catch (const std::out_of_range&) {
      throw fail("number out of range '" + fields[k] + "'");
    }
  };
  GtEntry e;
  const double frame = num(0), id = num(1);
  if (frame != std::floor(frame) || id != std::floor(id)) throw fail("frame and id must be integers");
  e.frame = static_cast<int>(frame);
  e.id = static_cast<int>(id);
  if (e.frame < 1) throw fail("frame must be >= 1");
  const double w = num(4), h = num(5);
  if (w < 0 || h < 0) throw fail("negative width or height");
  e.box = BBox::from_xywh(num(2), num(3), w, h);
  if (fields.size() > 6) e.conf = num(6);
  if (fields.size() > 7) e.cls = static_cast<int>(num(7));
  if (fields.size() > 8) e.visibility = num(8);
  for (std::size_t k = 9; k < fields.size(); ++k) e.extra.push_back(fields[k]);
  return e;
}

inline GroundTruth read_mot_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SequenceLoad, "cannot open " + path.string());
  GroundTruth gt;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    GtEntry e = parse_mot_line(line, n);
    gt.frames[e.frame].push_back(std::move(e));
  }
  for (auto& [f, rows] : gt.frames)
    std::stable_sort(rows.begin(), rows.end(),
                     [](const GtEntry& a, const GtEntry& b) { return a.id < b.id; });
  return gt;
}

inline void write_gt(const GroundTruth& gt, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& [f, rows] : gt.frames)
    for (const auto& e : rows) {
      out << e.frame << ',' << e.id << ',' << detail::format_2dp(e.box.x1) << ','
          << detail::format_2dp(e.box.y1) << ',' << detail::format_2dp(e.box.width()) << ','
          << detail::format_2dp(e.box.height()) << ',' << detail::format_2dp(e.conf) << ','
          << e.cls << ',' << detail::format_2dp(e.visibility);
      for (const auto& x : e.extra) out << ',' << x;
      out << '\n';
    }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline nlohmann::json expressions_to_json(const std::vector<ExpressionAnnotation>& exprs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : exprs) {
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& t : e.targets) {
      nlohmann::json ranges = nlohmann::json::array();
      for (const auto& [a, b] : t.ranges) ranges.push_back({a, b});
      targets.push_back({{"id", t.id}, {"frames", ranges}});
    }
    arr.push_back({{"expression", e.expression}, {"targets", targets}});
  }
  return {{"expressions", arr}};
}

inline std::vector<ExpressionAnnotation> parse_expressions(const nlohmann::json& j,
                                                           int frame_count) {
  std::vector<ExpressionAnnotation> out;
  try {
    for (const auto& je : j.at("expressions")) {
      ExpressionAnnotation e;
      e.expression = je.at("expression").get<std::string>();
      for (const auto& jt : je.at("targets")) {
        ExpressionTarget t;
        t.id = jt.at("id").get<int>();
        for (const auto& jr : jt.at("frames")) {
          const int a = jr.at(0).get<int>(), b = jr.at(1).get<int>();
          if (a < 1 || b > frame_count || a > b)
            throw Error(ErrorCode::ParseError, "expression '" + e.expression + "' target " +
                                                   std::to_string(t.id) + ": range [" +
                                                   std::to_string(a) + "," + std::to_string(b) +
                                                   "] outside [1," + std::to_string(frame_count) + "]");
          if (!t.ranges.empty() && a <= t.ranges.back().second)
            throw Error(ErrorCode::ParseError, "expression '" + e.expression + "' target " +
                                                   std::to_string(t.id) +
                                                   ": ranges must be sorted and disjoint");
          t.ranges.emplace_back(a, b);
        }
        e.targets.push_back(std::move(t));
      }
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("expressions: ") + ex.what());
  }
  return out;
}

inline LoadedSequence load_sequence(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::SequenceLoad, "not a directory: " + root.string());
  const fs::path vis = root / "visible", ir = root / "infrared";
  for (const auto& p : {vis, ir})
    if (!fs::is_directory(p)) throw Error(ErrorCode::SequenceLoad, "missing folder " + p.string());
  for (const char* f : {"gt.txt", "expressions.json"})
    if (!fs::is_regular_file(root / f))
      throw Error(ErrorCode::SequenceLoad, "missing file " + (root / f).string());

  LoadedSequence s;
  auto& m = s.manifest;
  m.root = root;
  m.name = root.filename().string();
  if (m.name.empty()) m.name = root.parent_path().filename().string();
  m.rgb_frames = detail::list_frames(vis);
  m.thermal_frames = detail::list_frames(ir);
  if (m.rgb_frames.size() != m.thermal_frames.size())
    throw Error(ErrorCode::AlignmentViolation,
                std::to_string(m.rgb_frames.size()) + " visible frames vs " +
                    std::to_string(m.thermal_frames.size()) + " infrared frames");
  if (m.rgb_frames.empty()) throw Error(ErrorCode::SequenceLoad, "sequence has no frames");
  m.frame_count = static_cast<int>(m.rgb_frames.size());

  const fs::path info = root / "seqinfo.json";
  if (fs::is_regular_file(info)) {
    try {
      std::ifstream in(info);
      const auto j = nlohmann::json::parse(in);
      if (j.contains("name")) m.name = j.at("name").get<std::string>();
      m.dims = {j.at("image_width").get<int>(), j.at("image_height").get<int>()};
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::ParseError, "seqinfo.json: " + std::string(ex.what()));
    }
  } else if (auto d = detail::jpeg_dims(m.rgb_frames.front())) {
    m.dims = *d;
  }
  if (!m.dims.valid())
    throw Error(ErrorCode::SequenceLoad, "image dimensions unavailable for " + root.string());

  s.gt = read_mot_file(root / "gt.txt");
  for (const auto& [f, rows] : s.gt.frames)
    if (f > m.frame_count)
      throw Error(ErrorCode::ParseError, "gt.txt references frame " + std::to_string(f) +
                                             " beyond " + std::to_string(m.frame_count));

  std::ifstream ein(root / "expressions.json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ein);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, "expressions.json: " + std::string(ex.what()));
  }
  s.expressions = parse_expressions(j, m.frame_count);
  return s;
}

/// A dataset root is either one sequence directory or a directory of them.
inline std::vector<fs::path> list_sequences(const fs::path& dataset_root) {
  if (!fs::is_directory(dataset_root))
    throw Error(ErrorCode::SequenceLoad, "not a directory: " + dataset_root.string());
  if (fs::is_regular_file(dataset_root / "gt.txt")) return {dataset_root};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dataset_root))
    if (e.is_directory() && fs::is_regular_file(e.path() / "gt.txt")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::SequenceLoad, "no sequences under " + dataset_root.string());
  return out;
}

/// Ground truth restricted to one expression's targets and frame ranges.
inline TrackingResult expression_ground_truth(const LoadedSequence& seq,
                                              const ExpressionAnnotation& expr) {
  TrackingResult r;
  r.name = seq.manifest.name + "/" + expression_slug(expr.expression);
  r.frame_count = seq.manifest.frame_count;
  r.dims = seq.manifest.dims;
  for (const auto& [f, rows] : seq.gt.frames)
    for (const auto& e : rows)
      if (const auto* t = expr.target(e.id); t && t->covers(f)) r.frames[f].push_back({e.id, e.box});
  return r;
}

/// MOT text: frame,id,x,y,w,h,1.0,-1,-1,-1 with two-decimal coordinates.
inline void write_results(const TrackingResult& r, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& [f, boxes] : r.frames)
    for (const auto& tb : boxes)
      out << f << ',' << tb.id << ',' << detail::format_2dp(tb.box.x1) << ','
          << detail::format_2dp(tb.box.y1) << ',' << detail::format_2dp(tb.box.width()) << ','
          << detail::format_2dp(tb.box.height()) << ",1.0,-1,-1,-1\n";
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline TrackingResult load_results(const fs::path& path, const std::string& name, int frame_count,
                                   const ImageDims& dims) {
  const GroundTruth rows = read_mot_file(path);
  TrackingResult r;
  r.name = name;
  r.frame_count = frame_count;
  r.dims = dims;
  for (const auto& [f, es] : rows.frames)
    for (const auto& e : es) r.frames[f].push_back({e.id, e.box});
  return r;
}

struct SynthConfig {
  std::string name = "synth";
  int n_targets = 5;
  int n_frames = 200;
  ImageDims dims{640, 512};
  double speed_min = 1.0;  // px / frame
  double speed_max = 4.0;
  double size_min = 30.0;  // px, per side
  double size_max = 80.0;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_targets < 1 || n_frames < 1) throw Error(ErrorCode::InvalidConfig, "n_targets and n_frames must be >= 1");
    if (!dims.valid()) throw Error(ErrorCode::InvalidConfig, "image dims must be positive");
    if (speed_min < 0 || speed_max < speed_min) throw Error(ErrorCode::InvalidConfig, "bad speed range");
    if (size_min <= 0 || size_max < size_min) throw Error(ErrorCode::InvalidConfig, "bad size range");
    if (size_max >= dims.width || size_max >= dims.height)
      throw Error(ErrorCode::InvalidConfig, "targets must fit inside the image");
  }
};

/// Initial state of one synthetic target; frames advance by velocity with
/// reflection at the image border.
struct SynthTarget {
  int id = 0;
  double x = 0, y = 0, w = 0, h = 0;  // top-left + size
  double vx = 0, vy = 0;
};

/// One constant-velocity step with mirror reflection off the borders.
inline void advance(SynthTarget& t, const ImageDims& dims) {
  t.x += t.vx;
  t.y += t.vy;
  const double max_x = dims.width - t.w, max_y = dims.height - t.h;
  if (t.x < 0) {
    t.x = -t.x;
    t.vx = -t.vx;
  } else if (t.x > max_x) {
    t.x = 2 * max_x - t.x;
    t.vx = -t.vx;
  }
  if (t.y < 0) {
    t.y = -t.y;
    t.vy = -t.vy;
  } else if (t.y > max_y) {
    t.y = 2 * max_y - t.y;
    t.vy = -t.vy;
  }
}

inline std::vector<SynthTarget> synth_spawn(const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SynthTarget> out;
  for (int k = 0; k < cfg.n_targets; ++k) {
    SynthTarget t;
    t.id = k + 1;
    t.w = cfg.size_min + unit(rng) * (cfg.size_max - cfg.size_min);
    t.h = cfg.size_min + unit(rng) * (cfg.size_max - cfg.size_min);
    t.x = unit(rng) * (cfg.dims.width - t.w);
    t.y = unit(rng) * (cfg.dims.height - t.h);
    const double speed = cfg.speed_min + unit(rng) * (cfg.speed_max - cfg.speed_min);
    const double heading = 2.0 * std::numbers::pi * unit(rng);
    t.vx = speed * std::cos(heading);
    t.vy = speed * std::sin(heading);
    out.push_back(t);
  }
  return out;
}

/// In-memory ground truth of a synthetic sequence (frame 1 is the spawn state).
inline GroundTruth synth_ground_truth(const SynthConfig& cfg) {
  cfg.validate();
  auto targets = synth_spawn(cfg);
  GroundTruth gt;
  for (int f = 1; f <= cfg.n_frames; ++f) {
    if (f > 1)
      for (auto& t : targets) advance(t, cfg.dims);
    for (const auto& t : targets) {
      GtEntry e;
      e.frame = f;
      e.id = t.id;
      e.box = BBox::from_xywh(t.x, t.y, t.w, t.h);
      gt.frames[f].push_back(e);
    }
  }
  return gt;
}

inline constexpr const char* kSynthExpression = "all moving targets";

/// Writes a complete sequence directory under `dest` and returns its ground truth.
inline GroundTruth synth_generate(const SynthConfig& cfg, const fs::path& dest) {
  GroundTruth gt = synth_ground_truth(cfg);
  std::error_code ec;
  fs::create_directories(dest / "visible", ec);
  if (!ec) fs::create_directories(dest / "infrared", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dest.string() + ": " + ec.message());

  for (int f = 1; f <= cfg.n_frames; ++f)
    for (const char* sub : {"visible", "infrared"}) {
      std::ofstream out(dest / sub / frame_filename(f), std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(detail::kPlaceholderJpeg.data()),
                static_cast<std::streamsize>(detail::kPlaceholderJpeg.size()));
      if (!out) throw Error(ErrorCode::IoError, "cannot write frame under " + dest.string());
    }
  write_gt(gt, dest / "gt.txt");

  ExpressionAnnotation expr;
  expr.expression = kSynthExpression;
  for (int k = 1; k <= cfg.n_targets; ++k) expr.targets.push_back({k, {{1, cfg.n_frames}}});

  auto write_json = [&](const fs::path& p, const nlohmann::json& j) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  };
  write_json(dest / "expressions.json", expressions_to_json({expr}));
  write_json(dest / "seqinfo.json", {{"name", cfg.name},
                                     {"image_width", cfg.dims.width},
                                     {"image_height", cfg.dims.height}});
  return gt;
}

}  // namespace rtrack
