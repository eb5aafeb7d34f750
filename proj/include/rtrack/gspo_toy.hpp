#pragma once

// Context-free categorical token policy used to exercise the group objective
// end to end: sampling, exact KL, an analytic gradient, and a small
// hill-climbing demo that contrasts clipped advantage scaling with plain
// standardization.

#include "rtrack/error.hpp"
#include "rtrack/gspo.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace rtrack::gspo {

using Logits = Eigen::VectorXd;
using TokenSequences = std::vector<std::vector<int>>;

inline Eigen::VectorXd log_softmax(const Logits& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

inline Eigen::VectorXd softmax(const Logits& logits) { return log_softmax(logits).array().exp(); }

inline std::vector<GroupSample> toy_samples(const Logits& logits_new, const Logits& logits_old,
                                            const TokenSequences& chosen,
                                            std::span<const double> rewards) {
  if (chosen.size() != rewards.size())
    throw Error(ErrorCode::MalformedSample, "one reward per sequence required");
  if (logits_new.size() != logits_old.size())
    throw Error(ErrorCode::MalformedSample, "logit vectors differ in size");
  const Eigen::VectorXd ln = log_softmax(logits_new);
  const Eigen::VectorXd lo = log_softmax(logits_old);
  std::vector<GroupSample> out;
  out.reserve(chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    GroupSample s;
    s.reward = rewards[k];
    for (const int tok : chosen[k]) {
      if (tok < 0 || tok >= ln.size())
        throw Error(ErrorCode::MalformedSample, "token index out of vocabulary");
      s.logp_new.push_back(ln(tok));
      s.logp_old.push_back(lo(tok));
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline double toy_kl(const Logits& logits_new, const Logits& logits_old) {
  const Eigen::VectorXd p = softmax(logits_new);
  const Eigen::VectorXd q = softmax(logits_old);
  return kl_categorical(std::span<const double>(p.data(), p.size()),
                        std::span<const double>(q.data(), q.size()));
}

inline GroupObjective toy_objective(const Logits& logits_new, const Logits& logits_old,
                                    const TokenSequences& chosen, std::span<const double> rewards,
                                    const GspoConfig& cfg) {
  const auto samples = toy_samples(logits_new, logits_old, chosen, rewards);
  return group_objective(samples, cfg, toy_kl(logits_new, logits_old));
}

inline double toy_surrogate(const Logits& logits_new, const Logits& logits_old,
                            const TokenSequences& chosen, std::span<const double> rewards,
                            const GspoConfig& cfg) {
  return toy_objective(logits_new, logits_old, chosen, rewards, cfg).value;
}

/// Analytic gradient of toy_surrogate with respect to logits_new.
///
/// For sequence k with token histogram c_k and length L_k,
///   d ratio_k / d logits = ratio_k * (c_k / L_k - p),
/// and the min() term passes that through (times A_k) unless the clipped
/// branch is active with the ratio outside the band, where it is flat.
/// The KL term contributes p_j * (log p_j - log q_j - KL).
inline Eigen::VectorXd toy_surrogate_gradient(const Logits& logits_new, const Logits& logits_old,
                                              const TokenSequences& chosen,
                                              std::span<const double> rewards,
                                              const GspoConfig& cfg) {
  const GroupObjective obj = toy_objective(logits_new, logits_old, chosen, rewards, cfg);
  const Eigen::Index v = logits_new.size();
  const Eigen::VectorXd p = softmax(logits_new);
  const Eigen::VectorXd logp = log_softmax(logits_new);
  const Eigen::VectorXd logq = log_softmax(logits_old);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(v);
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const SequenceTerm& t = obj.per_sequence[k];
    const bool unclipped_branch = t.ratio * t.advantage <= t.clipped_ratio * t.advantage;
    const bool inside_band = t.ratio > 1.0 - cfg.epsilon && t.ratio < 1.0 + cfg.epsilon;
    if (!unclipped_branch && !inside_band) continue;

    Eigen::VectorXd hist = Eigen::VectorXd::Zero(v);
    for (const int tok : chosen[k]) hist(tok) += 1.0;
    hist /= static_cast<double>(chosen[k].size());
    grad += t.advantage * t.ratio * (hist - p);
  }
  grad /= static_cast<double>(chosen.size());

  const double kl = (p.array() * (logp - logq).array()).sum();
  grad -= cfg.beta_kl * (p.array() * ((logp - logq).array() - kl)).matrix();
  return grad;
}

/// Draws `count` sequences with lengths uniform in [1, max_len] from the
/// policy defined by `logits`.
inline TokenSequences sample_sequences(const Logits& logits, int count, int max_len,
                                       std::mt19937_64& rng) {
  const Eigen::VectorXd p = softmax(logits);
  std::discrete_distribution<int> token(p.data(), p.data() + p.size());
  std::uniform_int_distribution<int> length(1, max_len);
  TokenSequences out(static_cast<std::size_t>(count));
  for (auto& seq : out) {
    const int len = length(rng);
    for (int t = 0; t < len; ++t) seq.push_back(token(rng));
  }
  return out;
}

/// Largest component error of `analytic` against central differences of
/// toy_surrogate, relative to the larger of the two gradients' max norms.
inline double toy_gradient_check(const Logits& logits_new, const Logits& logits_old,
                                 const TokenSequences& chosen, std::span<const double> rewards,
                                 const GspoConfig& cfg, double h = 1e-5) {
  const Eigen::VectorXd analytic =
      toy_surrogate_gradient(logits_new, logits_old, chosen, rewards, cfg);
  Eigen::VectorXd numeric(logits_new.size());
  for (Eigen::Index j = 0; j < logits_new.size(); ++j) {
    Logits plus = logits_new, minus = logits_new;
    plus(j) += h;
    minus(j) -= h;
    numeric(j) = (toy_surrogate(plus, logits_old, chosen, rewards, cfg) -
                  toy_surrogate(minus, logits_old, chosen, rewards, cfg)) /
                 (2.0 * h);
  }
  const double scale =
      std::max({analytic.lpNorm<Eigen::Infinity>(), numeric.lpNorm<Eigen::Infinity>(), 1e-12});
  return (analytic - numeric).lpNorm<Eigen::Infinity>() / scale;
}

struct DemoConfig {
  GspoConfig gspo;
  int steps = 200;
  int vocab = 8;
  int max_len = 6;
  double learning_rate = 2.0;
  std::uint64_t seed = 0;
  /// Normalizer injected into the stability probe group.
  double probe_sigma = 1e-6;
};

struct DemoStep {
  int step = 0;
  double objective = 0.0;
  double mean_ratio = 1.0;
  double max_abs_advantage = 0.0;
  double expected_reward = 0.0;
};

struct StabilityProbe {
  std::vector<double> rewards;
  double injected_sigma = 0.0;
  double max_abs_deviation = 0.0;  // max |r - mu|
  double raw_max_abs_advantage = 0.0;
  double cas_max_abs_advantage = 0.0;
  bool raw_exceeds_1e5 = false;
  bool cas_within_bound = false;  // cas max <= scale_max * max |r - mu|
};

struct DemoReport {
  std::vector<DemoStep> trace;
  double initial_expected_reward = 0.0;
  double final_expected_reward = 0.0;
  double max_abs_advantage = 0.0;
  /// Every training group satisfied |A_k| <= scale_max * |r_k - mu|.
  bool advantage_bound_held = true;
  StabilityProbe probe;
  double gradient_check_error = 0.0;
};

/// Per-token value v / (vocab - 1); a sequence scores the mean of its tokens,
/// so the optimum policy always emits the last token.
inline double toy_reward(const std::vector<int>& seq, int vocab) {
  double s = 0.0;
  for (const int t : seq) s += static_cast<double>(t) / (vocab - 1);
  return s / static_cast<double>(seq.size());
}

inline double toy_expected_reward(const Logits& logits) {
  const Eigen::VectorXd p = softmax(logits);
  const Eigen::Index v = p.size();
  double r = 0.0;
  for (Eigen::Index i = 0; i < v; ++i) r += p(i) * static_cast<double>(i) / (v - 1);
  return r;
}

inline StabilityProbe stability_probe(int group_size, double sigma, double scale_max) {
  StabilityProbe pr;
  pr.injected_sigma = sigma;
  for (int k = 0; k < group_size; ++k)
    pr.rewards.push_back(static_cast<double>(k) / (group_size - 1));
  const GroupStats st = group_stats(pr.rewards);
  for (const double r : pr.rewards)
    pr.max_abs_deviation = std::max(pr.max_abs_deviation, std::abs(r - st.mean));
  for (const double a : standardized_advantages(pr.rewards, sigma))
    pr.raw_max_abs_advantage = std::max(pr.raw_max_abs_advantage, std::abs(a));
  for (const double a : cas_advantages(pr.rewards, scale_max, sigma))
    pr.cas_max_abs_advantage = std::max(pr.cas_max_abs_advantage, std::abs(a));
  pr.raw_exceeds_1e5 = pr.raw_max_abs_advantage > 1e5;
  pr.cas_within_bound = pr.cas_max_abs_advantage <= scale_max * pr.max_abs_deviation;
  return pr;
}

inline DemoReport run_demo(const DemoConfig& cfg) {
  cfg.gspo.validate();
  if (cfg.vocab < 2 || cfg.max_len < 1 || cfg.steps < 0)
    throw Error(ErrorCode::InvalidConfig, "vocab >= 2, max_len >= 1, steps >= 0 required");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 0.1);
  Logits logits(cfg.vocab);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = init(rng);

  const Logits initial = logits;
  DemoReport rep;
  rep.initial_expected_reward = toy_expected_reward(logits);

  for (int step = 1; step <= cfg.steps; ++step) {
    const Logits old = logits;
    const TokenSequences seqs = sample_sequences(old, cfg.gspo.group_size, cfg.max_len, rng);
    std::vector<double> rewards;
    for (const auto& s : seqs) rewards.push_back(toy_reward(s, cfg.vocab));

    const std::vector<double> adv = advantages(rewards, cfg.gspo);
    const GroupStats st = group_stats(rewards);
    double max_adv = 0.0;
    for (std::size_t k = 0; k < adv.size(); ++k) {
      max_adv = std::max(max_adv, std::abs(adv[k]));
      if (std::abs(adv[k]) > cfg.gspo.scale_max * std::abs(rewards[k] - st.mean) + 1e-12)
        rep.advantage_bound_held = false;
    }
    rep.max_abs_advantage = std::max(rep.max_abs_advantage, max_adv);

    logits += cfg.learning_rate * toy_surrogate_gradient(old, old, seqs, rewards, cfg.gspo);

    const GroupObjective obj = toy_objective(logits, old, seqs, rewards, cfg.gspo);
    DemoStep ds;
    ds.step = step;
    ds.objective = obj.value;
    ds.mean_ratio = 0.0;
    for (const auto& t : obj.per_sequence) ds.mean_ratio += t.ratio;
    ds.mean_ratio /= static_cast<double>(obj.per_sequence.size());
    ds.max_abs_advantage = max_adv;
    ds.expected_reward = toy_expected_reward(logits);
    rep.trace.push_back(ds);
  }
  rep.final_expected_reward = toy_expected_reward(logits);
  rep.probe = stability_probe(cfg.gspo.group_size, cfg.probe_sigma, cfg.gspo.scale_max);

  // Gradient check at the initial policy, where the gradient is well away
  // from zero, with the current policy nudged so ratios sit inside the clip
  // band.
  {
    std::mt19937_64 check_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> jitter(0.0, cfg.gspo.epsilon * 0.05);
    Logits perturbed = initial;
    for (Eigen::Index i = 0; i < perturbed.size(); ++i) perturbed(i) += jitter(check_rng);
    const TokenSequences seqs = sample_sequences(initial, cfg.gspo.group_size, cfg.max_len, check_rng);
    std::vector<double> rewards;
    for (const auto& s : seqs) rewards.push_back(toy_reward(s, cfg.vocab));
    rep.gradient_check_error = toy_gradient_check(perturbed, initial, seqs, rewards, cfg.gspo);
  }
  return rep;
}

}  // namespace rtrack::gspo
