#pragma once

#include "rtrack/assignment.hpp"
#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <numbers>
#include <regex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace rtrack {

struct ParsedAnswer {
  bool has_think = false;
  bool has_answer = false;
  std::string answer_text;
  std::vector<BBox> boxes;
  bool answer_is_pure = false;
  /// Coordinate sets found in the answer but rejected for inverted or
  /// collapsed corners.
  int dropped = 0;
};

struct RewardConfig {
  double alpha = 0.5;
  double beta = 1.0;
  double gamma = 0.5;
  double lambda = 2.0;
  int l_min = 80;
  int l_low = 140;
  int l_high = 200;
  int l_max = 600;
  double w_format = 0.5;
  double w_length = 0.5;
  double w_str = 1.0;
  double w_ctr = 1.0;
  double tau_match = 0.5;
  double phase_switch = 0.5;

  void validate() const {
    if (!(l_min < l_low && l_low <= l_high && l_high < l_max) || l_min <= 0)
      throw Error(ErrorCode::InvalidConfig, "length window requires 0 < L_min < L_low <= L_high < L_max");
    if (alpha < 0 || beta < 0 || lambda < 0 || w_format < 0 || w_length < 0 || w_str < 0 ||
        w_ctr < 0)
      throw Error(ErrorCode::InvalidConfig, "reward weights must be non-negative");
    if (gamma < 0) throw Error(ErrorCode::InvalidConfig, "gamma must be non-negative");
    if (!(tau_match >= 0 && tau_match <= 1))
      throw Error(ErrorCode::InvalidConfig, "tau_match must lie in [0,1]");
    if (!(phase_switch >= 0 && phase_switch <= 1))
      throw Error(ErrorCode::InvalidConfig, "phase_switch must lie in [0,1]");
  }
};

struct MatchSummary {
  int matched_gt = 0;
  double iou_score = 0.0;
  int n_det = 0;
  int n_gt = 0;
};

namespace detail {

inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

inline const std::regex& quadruple_pattern() {
  static const std::regex re(
      R"(\[\s*([-+]?\d+(?:\.\d+)?)\s*,\s*([-+]?\d+(?:\.\d+)?)\s*,\s*([-+]?\d+(?:\.\d+)?)\s*,\s*([-+]?\d+(?:\.\d+)?)\s*\])");
  return re;
}

}  // namespace detail

/// Splits a completion into its reasoning and answer blocks and extracts every
/// [x1,y1,x2,y2] set from the answer. Never throws.
inline ParsedAnswer parse_answer(std::string_view completion) {
  constexpr std::string_view think_open = "<think>", think_close = "</think>";
  constexpr std::string_view answer_open = "<answer>", answer_close = "</answer>";

  ParsedAnswer out;
  const auto count = [&](std::string_view tag) { return detail::count_occurrences(completion, tag); };

  const std::size_t ao = completion.find(answer_open);
  const std::size_t ac = completion.find(answer_close);
  out.has_answer = count(answer_open) == 1 && count(answer_close) == 1 && ao < ac;

  const std::size_t to = completion.find(think_open);
  const std::size_t tc = completion.find(think_close);
  out.has_think = count(think_open) == 1 && count(think_close) == 1 && to < tc;
  // The reasoning block must close before the answer opens.
  if (out.has_think && ao != std::string_view::npos && tc > ao) out.has_think = false;

  if (!out.has_answer) return out;

  const std::size_t body = ao + answer_open.size();
  out.answer_text = std::string(completion.substr(body, ac - body));

  const auto& re = detail::quadruple_pattern();
  for (std::sregex_iterator it(out.answer_text.begin(), out.answer_text.end(), re), end;
       it != end; ++it) {
    const auto& m = *it;
    const auto num = [&](int k) { return std::strtod(m[k].str().c_str(), nullptr); };
    const BBox b{num(1), num(2), num(3), num(4)};
    const bool finite = std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
                        std::isfinite(b.y2);
    if (!finite || b.x2 <= b.x1 || b.y2 <= b.y1) {
      ++out.dropped;
      continue;
    }
    out.boxes.push_back(b);
  }

  std::string residue = std::regex_replace(out.answer_text, re, "");
  residue.erase(std::remove_if(residue.begin(), residue.end(),
                               [](unsigned char c) { return c == ',' || std::isspace(c); }),
                residue.end());
  out.answer_is_pure = residue.empty();
  return out;
}

inline int format_reward(const ParsedAnswer& p) {
  return p.has_think && p.has_answer && !p.boxes.empty() && p.answer_is_pure ? 1 : 0;
}

/// sin^2(pi x / 2) with x clamped into [0, 1] first, so the window saturates
/// at 1 instead of oscillating past its edge.
inline double sine_window(double x) {
  const double t = std::clamp(x, 0.0, 1.0);
  const double s = std::sin(std::numbers::pi / 2.0 * t);
  return std::clamp(s * s, 0.0, 1.0);
}

inline double length_reward(long long length, const RewardConfig& cfg) {
  const double l = static_cast<double>(length);
  const double rise = (l - cfg.l_min) / static_cast<double>(cfg.l_low - cfg.l_min);
  const double fall = (cfg.l_max - l) / static_cast<double>(cfg.l_max - cfg.l_high);
  return sine_window(rise) * sine_window(fall);
}

/// Whitespace-delimited token count; an offline stand-in for the model's
/// completion-mask length.
inline long long approx_token_count(std::string_view text) {
  std::istringstream in{std::string(text)};
  long long n = 0;
  for (std::string tok; in >> tok;) ++n;
  return n;
}

inline MatchSummary match_boxes(std::span<const BBox> dets, std::span<const BBox> gts,
                                const ImageDims& det_dims, const ImageDims& gt_dims,
                                double tau_match) {
  std::vector<BBox> mapped;
  mapped.reserve(dets.size());
  for (const auto& d : dets) mapped.push_back(rescale(d, det_dims, gt_dims));

  MatchSummary m;
  m.n_det = static_cast<int>(dets.size());
  m.n_gt = static_cast<int>(gts.size());
  const Matrix ious = iou_matrix(mapped, gts);
  const Assignment a = solve_gated(ious, tau_match);
  m.matched_gt = static_cast<int>(a.pairs.size());
  for (const auto& [d, g] : a.pairs) m.iou_score += ious(d, g);
  return m;
}

/// Output encouragement: alpha * MatchedGT + beta * IoU_score.
inline double oer(const MatchSummary& m, const RewardConfig& cfg) {
  return cfg.alpha * m.matched_gt + cfg.beta * m.iou_score;
}

/// Precision detection: IoU_score / N_det^gamma + lambda * MatchedGT / N_gt.
/// A term whose denominator count is zero contributes 0.
inline double pdr(const MatchSummary& m, const RewardConfig& cfg) {
  double r = 0.0;
  if (m.n_det > 0) r += m.iou_score / std::pow(static_cast<double>(m.n_det), cfg.gamma);
  if (m.n_gt > 0) r += cfg.lambda * m.matched_gt / static_cast<double>(m.n_gt);
  return r;
}

struct RewardBreakdown {
  ParsedAnswer parsed;
  MatchSummary match;
  int r_format = 0;
  double r_len = 0.0;
  double r_str = 0.0;
  double r_oer = 0.0;
  double r_pdr = 0.0;
  bool uses_pdr = false;
  double r_ctr = 0.0;
  double total = 0.0;
};

/// R = w_str (w_format R_format + w_length R_len) + w_ctr R_ctr, where R_ctr is
/// the output-encouragement reward before phase_switch and the precision
/// reward from then on. `length` is the completion length in tokens.
inline RewardBreakdown composite_reward(std::string_view completion, long long length,
                                        std::span<const BBox> gts, const ImageDims& det_dims,
                                        const ImageDims& gt_dims, double phase,
                                        const RewardConfig& cfg) {
  RewardBreakdown r;
  r.parsed = parse_answer(completion);
  r.r_format = format_reward(r.parsed);
  r.r_len = length_reward(length, cfg);
  r.r_str = cfg.w_format * r.r_format + cfg.w_length * r.r_len;
  r.match = match_boxes(r.parsed.boxes, gts, det_dims, gt_dims, cfg.tau_match);
  r.r_oer = oer(r.match, cfg);
  r.r_pdr = pdr(r.match, cfg);
  r.uses_pdr = phase >= cfg.phase_switch;
  r.r_ctr = r.uses_pdr ? r.r_pdr : r.r_oer;
  r.total = cfg.w_str * r.r_str + cfg.w_ctr * r.r_ctr;
  return r;
}

}  // namespace rtrack
