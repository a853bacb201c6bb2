// Secondary studies over completed adaptation runs: cross-user transfer of
// adapted models, gradient direction alignment over the update trajectory,
// per-class classifier norm drift, and linear probing of feature quality.
// All of these are evaluation-only with respect to their inputs.
#pragma once

#include <string>
#include <vector>

#include "streamadapt/learner.hpp"
#include "streamadapt/metrics.hpp"
#include "streamadapt/model.hpp"
#include "streamadapt/stream.hpp"

namespace streamadapt {

// entries[u][v] = loss-mode hindsight gain of user u's adapted model
// evaluated on user v's stream; diagonal entries equal each user's own
// hag() value by construction (same code path).
struct TransferMatrix {
  std::vector<std::string> user_ids;
  std::vector<std::vector<double>> entries;
};

TransferMatrix transfer_matrix(const std::vector<ModelParams>& models,
                               const std::vector<const UserStream*>& streams,
                               const ModelParams& pop, Level level);

// Mean cosine similarity of the update gradient with the gradient k steps
// earlier, for the full parameter vector and the F/H subvectors. Averaged
// within each user first, then mean +- SE across users. Pairs where either
// side has zero norm are skipped and counted.
struct GradCosineRow {
  int k = 0;
  MeanSe full, feature, head;
  std::size_t skipped_zero = 0;
};

std::vector<GradCosineRow> grad_cosine(const std::vector<GradLog>& logs, int k_max = 10);

// Per-class change of classifier weight L2-norm and |bias| between the
// final and the population model, averaged over users, ordered by the
// class's average relative frequency across the streams. Level must be
// Verb or Noun (those are the classifier heads).
struct ClassNormDelta {
  int class_id = 0;
  double frequency = 0.0;  // average relative frequency across streams
  MeanSe weight_delta;
  MeanSe bias_delta;
};

std::vector<ClassNormDelta> classifier_norm_delta(const std::vector<ModelParams>& finals,
                                                  const ModelParams& pop,
                                                  const std::vector<const UserStream*>& streams,
                                                  Level level);

struct ProbeConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr = 0.01;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double acc_action = 0.0;
  double acc_verb = 0.0;
  double acc_noun = 0.0;
};

// Trains fresh zero-initialized heads on the frozen feature stage of
// `adapted` over an i.i.d.-shuffled pass of the stream, then evaluates
// macro accuracy on the same stream. The input model is never modified.
ProbeResult linear_probe(const ModelParams& adapted, const UserStream& stream,
                         const ProbeConfig& cfg);

}  // namespace streamadapt
