#pragma once

#include "rtrack/dataio.hpp"
#include "rtrack/error.hpp"
#include "rtrack/perception.hpp"
#include "rtrack/tracker.hpp"
#include "rtrack/tracking_result.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rtrack {

/// Detect -> track over every frame of a sequence, in order. A frame the
/// backend cannot serve is tracked with zero detections and noted in
/// `warnings`.
inline TrackingResult run_sequence(DetectorBackend& detector, const SequenceManifest& seq,
                                   std::string_view query, const TrackerConfig& cfg) {
  if (seq.frame_count < 1 || seq.rgb_frames.size() != static_cast<std::size_t>(seq.frame_count) ||
      seq.thermal_frames.size() != static_cast<std::size_t>(seq.frame_count))
    throw Error(ErrorCode::SequenceLoad, "sequence '" + seq.name + "' has no usable frames");

  TrackingResult result;
  result.name = seq.name;
  result.frame_count = seq.frame_count;
  result.dims = seq.dims;

  Tracker tracker(cfg);
  for (int f = 1; f <= seq.frame_count; ++f) {
    std::vector<BBox> boxes;
    try {
      for (const auto& d : detector.detect(frame_ref(seq, f), query)) boxes.push_back(d.box);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendFailure && e.code() != ErrorCode::RemoteError &&
          e.code() != ErrorCode::ProtocolError)
        throw;
      result.warnings.push_back("frame " + std::to_string(f) + ": " + e.what());
    }
    auto emitted = tracker.step(boxes, f);
    if (!emitted.empty()) result.frames[f] = std::move(emitted);
  }
  return result;
}

}  // namespace rtrack
