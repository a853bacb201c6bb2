// Synthetic user-stream generator. Streams carry the properties the
// evaluation engine is built around: a long-tailed (Zipf) action
// distribution over a per-user action subset, strong local temporal
// correlation via a repeat-previous-action Markov process, class-conditional
// Gaussian features with a per-user mean offset (population-to-user shift)
// and an optional linear-in-time drift.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamadapt/stream.hpp"

namespace streamadapt {

struct SynthConfig {
  int verbs = 24;
  int nouns = 32;
  int actions_per_user = 64;
  double zipf_s = 1.1;        // tail exponent, 0 = uniform
  double repeat_p = 0.76;     // probability the next sample repeats the previous action
  int stream_len = 2000;
  int dim = 64;
  double feature_sigma = 0.5; // class-conditional noise scale
  double user_shift = 0.5;    // per-user feature-mean offset magnitude
  double drift_rate = 0.0;    // per-step feature-mean drift magnitude
  int batch_size = 4;
  std::uint64_t seed = 0;

  Vocab vocab() const { return {verbs, nouns}; }
  void validate() const;
};

// Streams are a pure function of (cfg, user_id): all randomness derives from
// derive_seed(cfg.seed, ..., user_id). The action subset may be supplied
// explicitly (used by tests that need disjoint or identical subsets);
// when empty it is sampled without replacement from the full action space.
UserStream gen_user_stream(const SynthConfig& cfg, const std::string& user_id,
                           std::vector<int> action_subset = {});

// Population users are generated with user_shift = 0 so the population
// model sees the unshifted class-conditional distributions and the per-user
// offset is exactly the population-to-user shift.
StreamCollection gen_collection(const SynthConfig& cfg, int n_population,
                                int n_train, int n_test);

}  // namespace streamadapt
