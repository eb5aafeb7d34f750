// Generates a synthetic sequence, tracks it with a perturbed ground-truth
// detector and prints HOTA for a few noise levels.
//
//   noisy_oracle [workdir]

#include "rtrack/rtrack.hpp"

#include <cstdio>
#include <filesystem>

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rtrack-sample";

  rtrack::SynthConfig sc;
  sc.n_frames = 120;
  rtrack::synth_generate(sc, dir);
  const auto seq = rtrack::load_sequence(dir);
  const auto& expr = seq.expressions.front();
  const auto gt = rtrack::expression_ground_truth(seq, expr);

  std::printf("%-8s %-8s %8s %8s %8s\n", "p_miss", "jitter", "HOTA", "DetA", "AssA");
  for (const double p_miss : {0.0, 0.2, 0.4})
    for (const double jitter : {0.0, 0.05}) {
      rtrack::PerturbationConfig p;
      p.p_miss = p_miss;
      p.jitter_sigma = jitter;
      p.seed = 1;
      rtrack::OracleBackend oracle(seq.gt, expr, p);
      const auto res = rtrack::run_sequence(oracle, seq.manifest, expr.expression, {});
      const auto m = rtrack::evaluate(res, gt);
      std::printf("%-8.2f %-8.2f %8.4f %8.4f %8.4f\n", p_miss, jitter, m.hota, m.deta, m.assa);
    }
  fs::remove_all(dir);
  return 0;
}
