#pragma once

#include "rtrack/assignment.hpp"
#include "rtrack/error.hpp"
#include "rtrack/geometry.hpp"
#include "rtrack/kalman.hpp"
#include "rtrack/tracking_result.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtrack {

enum class TrackStatus { Active, Temporary, Terminated };

constexpr std::string_view to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::Active: return "active";
    case TrackStatus::Temporary: return "temporary";
    case TrackStatus::Terminated: return "terminated";
  }
  return "unknown";
}

struct TrajectoryRecord {
  int frame = 0;
  BBox box;
  TrackStatus status = TrackStatus::Active;
};

struct Trajectory {
  int id = 0;
  KalmanState kalman;
  TrackStatus status = TrackStatus::Active;
  int missing_count = 0;
  int hits = 0;
  std::vector<TrajectoryRecord> history;

  bool live() const { return status != TrackStatus::Terminated; }
};

struct TrackerConfig {
  double tau_iou = 0.3;
  int delta_max = 30;
  bool emit_temporary = false;
  /// Matched frames required before a trajectory is emitted; 0 and 1 both
  /// emit on creation.
  int min_hits = 0;
  NoiseConfig noise;

  void validate() const {
    if (!(tau_iou >= 0.0 && tau_iou <= 1.0))
      throw Error(ErrorCode::InvalidConfig, "tau_iou must lie in [0,1]");
    if (delta_max < 1) throw Error(ErrorCode::InvalidConfig, "delta_max must be >= 1");
    if (min_hits < 0) throw Error(ErrorCode::InvalidConfig, "min_hits must be >= 0");
    if (!noise.valid()) throw Error(ErrorCode::InvalidConfig, "noise weights must be positive");
  }
};

/// Identity association over a single sequence. Frames must arrive in
/// strictly increasing order.
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  /// One predict / match / update / initialize / age cycle. Returns the
  /// emitted (id, box) set for this frame, sorted by id.
  std::vector<TrackedBox> step(std::span<const BBox> detections, int frame) {
    if (started_ && frame <= last_frame_)
      throw Error(ErrorCode::FrameOrder, "frame " + std::to_string(frame) +
                                             " does not follow " + std::to_string(last_frame_));
    last_frame_ = frame;
    started_ = true;

    std::vector<BBox> dets;
    dets.reserve(detections.size());
    // Zero-area boxes cannot seed or correct a filter.
    for (const auto& d : detections)
      if (d.has_area()) dets.push_back(d);

    std::vector<std::size_t> live;
    std::vector<BBox> predicted;
    for (std::size_t t = 0; t < tracks_.size(); ++t) {
      auto& tr = tracks_[t];
      if (!tr.live()) continue;
      tr.kalman = predict_guarded(tr.kalman);
      live.push_back(t);
      predicted.push_back(state_to_box(tr.kalman));
    }

    const Matrix m_iou = iou_matrix(dets, predicted);
    const Assignment assigned = solve_gated(m_iou, cfg_.tau_iou);

    std::vector<TrackedBox> emitted;
    for (const auto& [d, p] : assigned.pairs) {
      auto& tr = tracks_[live[p]];
      tr.kalman = update(tr.kalman, dets[d], cfg_.noise);
      tr.status = TrackStatus::Active;
      tr.missing_count = 0;
      ++tr.hits;
      tr.history.push_back({frame, dets[d], TrackStatus::Active});
      if (tr.hits >= cfg_.min_hits) emitted.push_back({tr.id, dets[d]});
    }

    for (const int d : assigned.unmatched_rows) {
      Trajectory tr;
      tr.id = next_id_++;
      tr.kalman = init_from_box(dets[d], cfg_.noise);
      tr.status = TrackStatus::Active;
      tr.hits = 1;
      tr.history.push_back({frame, dets[d], TrackStatus::Active});
      if (tr.hits >= cfg_.min_hits) emitted.push_back({tr.id, dets[d]});
      tracks_.push_back(std::move(tr));
    }

    for (const int p : assigned.unmatched_cols) {
      auto& tr = tracks_[live[p]];
      ++tr.missing_count;
      tr.status =
          tr.missing_count > cfg_.delta_max ? TrackStatus::Terminated : TrackStatus::Temporary;
      tr.history.push_back({frame, predicted[p], tr.status});
      if (tr.status == TrackStatus::Temporary && cfg_.emit_temporary &&
          tr.hits >= cfg_.min_hits)
        emitted.push_back({tr.id, predicted[p]});
    }

    std::sort(emitted.begin(), emitted.end(),
              [](const TrackedBox& a, const TrackedBox& b) { return a.id < b.id; });
    return emitted;
  }

  const std::vector<Trajectory>& trajectories() const { return tracks_; }
  const Trajectory* find(int id) const {
    for (const auto& t : tracks_)
      if (t.id == id) return &t;
    return nullptr;
  }
  const TrackerConfig& config() const { return cfg_; }
  int last_frame() const { return last_frame_; }

 private:
  // A coasting track can drive its height or aspect through zero; freeze the
  // offending rates instead of producing an invalid box.
  KalmanState predict_guarded(const KalmanState& s) const {
    KalmanState p = predict(s, cfg_.noise);
    if (p.mean(2) > 0.0 && p.mean(3) > 0.0) return p;
    KalmanState held = s;
    held.mean(6) = 0.0;
    held.mean(7) = 0.0;
    return predict(held, cfg_.noise);
  }

  TrackerConfig cfg_;
  std::vector<Trajectory> tracks_;
  int next_id_ = 1;
  int last_frame_ = 0;
  bool started_ = false;
};

}  // namespace rtrack
