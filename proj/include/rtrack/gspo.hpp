#pragma once

#include "rtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rtrack::gspo {

/// One generated sequence: per-token log-probabilities under the current and
/// the sampling policy, plus its scalar reward.
struct GroupSample {
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  double reward = 0.0;
};

struct GspoConfig {
  double epsilon = 1e-3;
  double beta_kl = 0.001;
  double scale_max = 3.0;
  int group_size = 4;
  /// false selects plain (r - mu) / sigma standardization.
  bool clipped_advantage_scaling = true;

  void validate() const {
    if (!(epsilon > 0)) throw Error(ErrorCode::InvalidConfig, "epsilon must be positive");
    if (!(beta_kl >= 0)) throw Error(ErrorCode::InvalidConfig, "beta_kl must be non-negative");
    if (!(scale_max > 0)) throw Error(ErrorCode::InvalidConfig, "scale_max must be positive");
    if (group_size < 2) throw Error(ErrorCode::GroupTooSmall, "group_size must be >= 2");
  }
};

struct SequenceTerm {
  double ratio = 1.0;          // length-normalized importance ratio
  double clipped_ratio = 1.0;  // ratio clamped to [1 - eps, 1 + eps]
  double advantage = 0.0;
  double term = 0.0;  // min(ratio * A, clipped_ratio * A)
};

struct GroupObjective {
  double value = 0.0;
  std::vector<SequenceTerm> per_sequence;
  double kl_term = 0.0;  // beta_kl * kl
};

struct GroupStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline GroupStats group_stats(std::span<const double> rewards) {
  GroupStats s;
  const double n = static_cast<double>(rewards.size());
  s.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (const double r : rewards) ss += (r - s.mean) * (r - s.mean);
  s.stddev = std::sqrt(ss / n);
  return s;
}

/// exp(mean_t(logp_new - logp_old)), i.e. the |y|-th root of the sequence
/// likelihood ratio, evaluated in log space.
inline double seq_ratio(const GroupSample& s) {
  if (s.logp_new.size() != s.logp_old.size())
    throw Error(ErrorCode::MalformedSample, "log-probability lists differ in length");
  if (s.logp_new.empty()) throw Error(ErrorCode::MalformedSample, "empty sequence");
  double sum = 0.0;
  for (std::size_t t = 0; t < s.logp_new.size(); ++t) {
    if (s.logp_new[t] > 0.0 || s.logp_old[t] > 0.0)
      throw Error(ErrorCode::MalformedSample, "log-probabilities must be <= 0");
    sum += s.logp_new[t] - s.logp_old[t];
  }
  return std::exp(sum / static_cast<double>(s.logp_new.size()));
}

inline double clip_ratio(double s1, double epsilon) {
  return std::clamp(s1, 1.0 - epsilon, 1.0 + epsilon);
}

/// Multiplier applied to (r - mu): clip(1 / sigma, 0, scale_max). sigma = 0 is
/// treated as 1/sigma = +inf and therefore saturates at scale_max.
inline double cas_scale(double sigma, double scale_max) {
  if (!(sigma > 0.0)) return scale_max;
  return std::clamp(1.0 / sigma, 0.0, scale_max);
}

inline std::vector<double> cas_advantages(std::span<const double> rewards, double scale_max,
                                          std::optional<double> sigma_override = std::nullopt) {
  if (rewards.size() < 2) throw Error(ErrorCode::GroupTooSmall, "need at least 2 rewards");
  const GroupStats st = group_stats(rewards);
  const double factor = cas_scale(sigma_override.value_or(st.stddev), scale_max);
  std::vector<double> a;
  a.reserve(rewards.size());
  for (const double r : rewards) a.push_back((r - st.mean) * factor);
  return a;
}

/// Plain group standardization (r - mu) / sigma. A zero sigma yields zero
/// advantages, since every deviation is zero as well.
inline std::vector<double> standardized_advantages(
    std::span<const double> rewards, std::optional<double> sigma_override = std::nullopt) {
  if (rewards.size() < 2) throw Error(ErrorCode::GroupTooSmall, "need at least 2 rewards");
  const GroupStats st = group_stats(rewards);
  const double sigma = sigma_override.value_or(st.stddev);
  std::vector<double> a;
  a.reserve(rewards.size());
  for (const double r : rewards) a.push_back(sigma > 0.0 ? (r - st.mean) / sigma : 0.0);
  return a;
}

inline std::vector<double> advantages(std::span<const double> rewards, const GspoConfig& cfg) {
  return cfg.clipped_advantage_scaling ? cas_advantages(rewards, cfg.scale_max)
                                       : standardized_advantages(rewards);
}

/// Clipped sequence-level surrogate averaged over the group, minus beta_kl * kl.
inline GroupObjective group_objective(std::span<const GroupSample> samples, const GspoConfig& cfg,
                                      double kl) {
  cfg.validate();
  if (static_cast<int>(samples.size()) != cfg.group_size)
    throw Error(ErrorCode::MalformedSample, "expected " + std::to_string(cfg.group_size) +
                                                " samples, got " + std::to_string(samples.size()));
  if (!(kl >= 0.0)) throw Error(ErrorCode::MalformedSample, "kl must be non-negative");

  std::vector<double> rewards;
  rewards.reserve(samples.size());
  for (const auto& s : samples) rewards.push_back(s.reward);
  const std::vector<double> adv = advantages(rewards, cfg);

  GroupObjective out;
  double sum = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    SequenceTerm t;
    t.ratio = seq_ratio(samples[k]);
    t.clipped_ratio = clip_ratio(t.ratio, cfg.epsilon);
    t.advantage = adv[k];
    t.term = std::min(t.ratio * t.advantage, t.clipped_ratio * t.advantage);
    sum += t.term;
    out.per_sequence.push_back(t);
  }
  out.kl_term = cfg.beta_kl * kl;
  out.value = sum / static_cast<double>(samples.size()) - out.kl_term;
  return out;
}

/// KL(p || q) for categorical distributions on a shared support.
inline double kl_categorical(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    throw Error(ErrorCode::InvalidDistribution, "distributions must share a non-empty support");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0))
      throw Error(ErrorCode::InvalidDistribution, "negative probability");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidDistribution, "probabilities must sum to 1");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0)
      throw Error(ErrorCode::InvalidDistribution, "q has zero mass where p is positive");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

}  // namespace rtrack::gspo
