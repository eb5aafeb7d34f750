#pragma once

#include "rtrack/geometry.hpp"

#include <map>
#include <string>
#include <vector>

namespace rtrack {

struct TrackedBox {
  int id = 0;
  BBox box;

  friend bool operator==(const TrackedBox&, const TrackedBox&) = default;
};

/// Per-frame identity/box sets for one sequence (or one expression of a sequence).
/// Frames are 1-based; frames with no boxes may be absent from the map.
struct TrackingResult {
  std::string name;
  int frame_count = 0;
  ImageDims dims;
  std::map<int, std::vector<TrackedBox>> frames;
  std::vector<std::string> warnings;

  const std::vector<TrackedBox>& at(int frame) const {
    static const std::vector<TrackedBox> empty;
    const auto it = frames.find(frame);
    return it == frames.end() ? empty : it->second;
  }

  std::size_t box_count() const {
    std::size_t n = 0;
    for (const auto& [f, boxes] : frames) n += boxes.size();
    return n;
  }
};

}  // namespace rtrack
