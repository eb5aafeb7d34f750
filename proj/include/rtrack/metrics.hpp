#pragma once

#include "rtrack/assignment.hpp"
#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"
#include "rtrack/tracking_result.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rtrack {

inline constexpr int kAlphaCount = 19;

/// 0.05, 0.10, ..., 0.95
inline std::array<double, kAlphaCount> alpha_grid() {
  std::array<double, kAlphaCount> a{};
  for (int i = 0; i < kAlphaCount; ++i) a[i] = 0.05 * (i + 1);
  return a;
}

/// Raw counts at one localization threshold. Association sums run over true
/// positives, so counts from different sequences pool by plain addition.
struct AlphaCounts {
  double alpha = 0.0;
  double tp = 0.0;
  double fn = 0.0;
  double fp = 0.0;
  double ass_a_sum = 0.0;
  double ass_re_sum = 0.0;
  double ass_pr_sum = 0.0;
  double loc_sum = 0.0;

  AlphaCounts& operator+=(const AlphaCounts& o) {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    ass_a_sum += o.ass_a_sum;
    ass_re_sum += o.ass_re_sum;
    ass_pr_sum += o.ass_pr_sum;
    loc_sum += o.loc_sum;
    return *this;
  }
};

struct AlphaMetrics {
  double alpha = 0.0;
  double hota = 0.0, deta = 0.0, assa = 0.0, detre = 0.0, detpr = 0.0, assre = 0.0,
         asspr = 0.0, loca = 0.0;
};

struct MetricReport {
  double hota = 0.0, deta = 0.0, assa = 0.0, detre = 0.0, detpr = 0.0, assre = 0.0,
         asspr = 0.0, loca = 0.0;
  std::vector<AlphaMetrics> per_alpha;
  std::vector<AlphaCounts> counts;
};

namespace detail {

inline double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline AlphaMetrics finalize_alpha(const AlphaCounts& c) {
  AlphaMetrics m;
  m.alpha = c.alpha;
  m.detre = safe_div(c.tp, c.tp + c.fn);
  m.detpr = safe_div(c.tp, c.tp + c.fp);
  m.deta = safe_div(c.tp, c.tp + c.fn + c.fp);
  m.assa = safe_div(c.ass_a_sum, c.tp);
  m.assre = safe_div(c.ass_re_sum, c.tp);
  m.asspr = safe_div(c.ass_pr_sum, c.tp);
  m.loca = safe_div(c.loc_sum, c.tp);
  m.hota = std::sqrt(m.deta * m.assa);
  return m;
}

inline void check_extent(const TrackingResult& pred, const TrackingResult& gt) {
  if (pred.frame_count != gt.frame_count)
    throw Error(ErrorCode::SequenceMismatch,
                "frame counts differ: " + std::to_string(pred.frame_count) + " vs " +
                    std::to_string(gt.frame_count));
  for (const auto* r : {&pred, &gt}) {
    for (const auto& [f, boxes] : r->frames)
      if (!boxes.empty() && (f < 1 || f > r->frame_count))
        throw Error(ErrorCode::SequenceMismatch,
                    "frame " + std::to_string(f) + " outside [1," +
                        std::to_string(r->frame_count) + "]");
  }
}

inline std::map<int, int> index_ids(const TrackingResult& r) {
  std::map<int, int> idx;
  for (const auto& [f, boxes] : r.frames)
    for (const auto& b : boxes) idx.emplace(b.id, 0);
  int k = 0;
  for (auto& [id, i] : idx) i = k++;
  return idx;
}

}  // namespace detail

inline MetricReport finalize(std::span<const AlphaCounts> counts) {
  MetricReport r;
  r.counts.assign(counts.begin(), counts.end());
  for (const auto& c : counts) {
    const AlphaMetrics m = detail::finalize_alpha(c);
    r.per_alpha.push_back(m);
    r.hota += m.hota;
    r.deta += m.deta;
    r.assa += m.assa;
    r.detre += m.detre;
    r.detpr += m.detpr;
    r.assre += m.assre;
    r.asspr += m.asspr;
    r.loca += m.loca;
  }
  const double n = counts.empty() ? 1.0 : static_cast<double>(counts.size());
  r.hota /= n;
  r.deta /= n;
  r.assa /= n;
  r.detre /= n;
  r.detpr /= n;
  r.assre /= n;
  r.asspr /= n;
  r.loca /= n;
  return r;
}

/// HOTA counting for one (prediction, ground truth) pair over a set of
/// thresholds.
///
/// Each frame is matched once, maximizing the IoU weighted by the global
/// alignment score of the (gt id, pred id) pair, i.e. how consistently the two
/// ids overlap across the whole sequence. A matched pair counts as a true
/// positive at threshold alpha when its IoU >= alpha.
inline std::vector<AlphaCounts> hota_counts(const TrackingResult& pred, const TrackingResult& gt,
                                            std::span<const double> alphas) {
  detail::check_extent(pred, gt);
  const auto gt_idx = detail::index_ids(gt);
  const auto pr_idx = detail::index_ids(pred);
  const int ng = static_cast<int>(gt_idx.size());
  const int np = static_cast<int>(pr_idx.size());

  struct FrameData {
    std::vector<int> g, p;
    Matrix sim;
  };
  std::vector<FrameData> frames;
  frames.reserve(static_cast<std::size_t>(gt.frame_count));

  Matrix potential = Matrix::Zero(ng, np);
  Eigen::VectorXd gt_id_count = Eigen::VectorXd::Zero(ng);
  Eigen::VectorXd pr_id_count = Eigen::VectorXd::Zero(np);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  for (int f = 1; f <= gt.frame_count; ++f) {
    FrameData fd;
    std::vector<BBox> gb, pb;
    for (const auto& t : gt.at(f)) {
      fd.g.push_back(gt_idx.at(t.id));
      gb.push_back(t.box);
    }
    for (const auto& t : pred.at(f)) {
      fd.p.push_back(pr_idx.at(t.id));
      pb.push_back(t.box);
    }
    fd.sim = iou_matrix(gb, pb);

    if (!fd.g.empty() && !fd.p.empty()) {
      const Eigen::VectorXd row_sum = fd.sim.rowwise().sum();
      const Eigen::RowVectorXd col_sum = fd.sim.colwise().sum();
      for (int i = 0; i < fd.sim.rows(); ++i)
        for (int j = 0; j < fd.sim.cols(); ++j) {
          const double den = row_sum(i) + col_sum(j) - fd.sim(i, j);
          if (den > eps) potential(fd.g[i], fd.p[j]) += fd.sim(i, j) / den;
        }
    }
    for (const int g : fd.g) gt_id_count(g) += 1.0;
    for (const int p : fd.p) pr_id_count(p) += 1.0;
    frames.push_back(std::move(fd));
  }

  Matrix global_alignment = Matrix::Zero(ng, np);
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < np; ++j) {
      const double den = gt_id_count(i) + pr_id_count(j) - potential(i, j);
      global_alignment(i, j) = den > 0.0 ? potential(i, j) / den : 0.0;
    }

  const std::size_t na = alphas.size();
  std::vector<AlphaCounts> counts(na);
  std::vector<Matrix> matches(na, Matrix::Zero(ng, np));
  for (std::size_t a = 0; a < na; ++a) counts[a].alpha = alphas[a];

  for (const auto& fd : frames) {
    const double n_gt = static_cast<double>(fd.g.size());
    const double n_pr = static_cast<double>(fd.p.size());
    if (fd.g.empty() || fd.p.empty()) {
      for (auto& c : counts) {
        c.fn += n_gt;
        c.fp += n_pr;
      }
      continue;
    }
    Matrix score(fd.sim.rows(), fd.sim.cols());
    for (int i = 0; i < score.rows(); ++i)
      for (int j = 0; j < score.cols(); ++j)
        score(i, j) = global_alignment(fd.g[i], fd.p[j]) * fd.sim(i, j);
    const Assignment asg = solve(-score);

    for (std::size_t a = 0; a < na; ++a) {
      double tp = 0.0;
      for (const auto& [i, j] : asg.pairs) {
        const double s = fd.sim(i, j);
        if (s >= alphas[a] - eps && s > 0.0) {
          tp += 1.0;
          counts[a].loc_sum += s;
          matches[a](fd.g[i], fd.p[j]) += 1.0;
        }
      }
      counts[a].tp += tp;
      counts[a].fn += n_gt - tp;
      counts[a].fp += n_pr - tp;
    }
  }

  for (std::size_t a = 0; a < na; ++a) {
    const Matrix& m = matches[a];
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < np; ++j) {
        const double tpa = m(i, j);
        if (tpa <= 0.0) continue;
        // Every true positive of this id pair shares the same association
        // score, so the per-TP sums are tpa times that score.
        const double ass_a = tpa / (gt_id_count(i) + pr_id_count(j) - tpa);
        counts[a].ass_a_sum += tpa * ass_a;
        counts[a].ass_re_sum += tpa * (tpa / gt_id_count(i));
        counts[a].ass_pr_sum += tpa * (tpa / pr_id_count(j));
      }
  }
  return counts;
}

inline AlphaMetrics evaluate_at_alpha(const TrackingResult& pred, const TrackingResult& gt,
                                      double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0,1)");
  const std::array<double, 1> a{alpha};
  return detail::finalize_alpha(hota_counts(pred, gt, a).front());
}

inline MetricReport evaluate(const TrackingResult& pred, const TrackingResult& gt) {
  const auto alphas = alpha_grid();
  const auto counts = hota_counts(pred, gt, alphas);
  return finalize(counts);
}

enum class Aggregation { Micro, Macro };

struct ExpressionPair {
  std::string expression;
  TrackingResult pred;
  TrackingResult gt;
};

/// Micro mode pools the raw counts of every pair before forming ratios; macro
/// mode averages the per-pair headline metrics.
inline MetricReport evaluate_expression_set(std::span<const ExpressionPair> pairs,
                                            Aggregation mode = Aggregation::Micro) {
  if (pairs.empty()) throw Error(ErrorCode::NoData, "no expressions to evaluate");
  const auto alphas = alpha_grid();

  if (mode == Aggregation::Micro) {
    std::vector<AlphaCounts> pooled;
    for (const auto& pr : pairs) {
      const auto c = hota_counts(pr.pred, pr.gt, alphas);
      if (pooled.empty()) {
        pooled = c;
      } else {
        for (std::size_t a = 0; a < c.size(); ++a) pooled[a] += c[a];
      }
    }
    return finalize(pooled);
  }

  MetricReport out;
  std::vector<AlphaMetrics> per_alpha(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) per_alpha[a].alpha = alphas[a];
  for (const auto& pr : pairs) {
    const MetricReport r = evaluate(pr.pred, pr.gt);
    out.hota += r.hota;
    out.deta += r.deta;
    out.assa += r.assa;
    out.detre += r.detre;
    out.detpr += r.detpr;
    out.assre += r.assre;
    out.asspr += r.asspr;
    out.loca += r.loca;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      auto& d = per_alpha[a];
      const auto& s = r.per_alpha[a];
      d.hota += s.hota;
      d.deta += s.deta;
      d.assa += s.assa;
      d.detre += s.detre;
      d.detpr += s.detpr;
      d.assre += s.assre;
      d.asspr += s.asspr;
      d.loca += s.loca;
    }
  }
  const double n = static_cast<double>(pairs.size());
  out.hota /= n;
  out.deta /= n;
  out.assa /= n;
  out.detre /= n;
  out.detpr /= n;
  out.assre /= n;
  out.asspr /= n;
  out.loca /= n;
  for (auto& d : per_alpha) {
    d.hota /= n;
    d.deta /= n;
    d.assa /= n;
    d.detre /= n;
    d.detpr /= n;
    d.assre /= n;
    d.asspr /= n;
    d.loca /= n;
  }
  out.per_alpha = std::move(per_alpha);
  return out;
}

}  // namespace rtrack
