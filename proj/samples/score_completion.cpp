// Scores a model completion against one ground-truth box in both reward
// phases.
//
//   score_completion ["<think>...</think><answer>[x1,y1,x2,y2]</answer>"]

#include "rtrack/rewards.hpp"

#include <cstdio>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  const std::string completion =
      argc > 1 ? argv[1]
               : "<think>one person near the left edge, walking right</think><answer>[12,40,58,150]</answer>";
  const std::vector<rtrack::BBox> gts{{10, 40, 60, 150}};
  const rtrack::ImageDims dims{640, 512};
  const rtrack::RewardConfig cfg;
  const long long len = rtrack::approx_token_count(completion);

  for (const double phase : {0.0, 1.0}) {
    const auto r = rtrack::composite_reward(completion, len, gts, dims, dims, phase, cfg);
    std::printf("phase %.0f: format %d  length %.3f  %s %.3f  total %.3f  (%zu box(es))\n", phase, r.r_format,
                r.r_len, r.uses_pdr ? "PDR" : "OER", r.r_ctr, r.total, r.parsed.boxes.size());
  }
  return 0;
}
