// Two-stage linear model: feature stage F (input -> hidden, optional relu)
// followed by two independent linear classifier heads for verbs and nouns.
// Parameters live in one flat vector with a fixed layout so optimizer state,
// scope masks and gradient logging are plain range operations.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streamadapt/stream.hpp"

namespace streamadapt {

struct ModelDims {
  int input = 0;
  int hidden = 0;
  Vocab vocab;
  bool relu = false;
  bool operator==(const ModelDims&) const = default;
};

// Flat layout: [feat_w hxd][feat_b h][verb_w Vxh][verb_b V][noun_w Nxh][noun_b N].
struct ParamLayout {
  std::size_t feat_w = 0, feat_b = 0, verb_w = 0, verb_b = 0, noun_w = 0, noun_b = 0;
  std::size_t feature_end = 0;  // end of the F block == start of the H block
  std::size_t total = 0;
  static ParamLayout make(const ModelDims& d);
};

struct ModelParams {
  ModelDims dims;
  std::vector<double> data;

  ModelParams() = default;
  explicit ModelParams(const ModelDims& d)
      : dims(d), data(ParamLayout::make(d).total, 0.0) {}

  ParamLayout layout() const { return ParamLayout::make(dims); }

  double* feat_w() { return data.data() + layout().feat_w; }
  double* feat_b() { return data.data() + layout().feat_b; }
  double* verb_w() { return data.data() + layout().verb_w; }
  double* verb_b() { return data.data() + layout().verb_b; }
  double* noun_w() { return data.data() + layout().noun_w; }
  double* noun_b() { return data.data() + layout().noun_b; }
  const double* feat_w() const { return data.data() + layout().feat_w; }
  const double* feat_b() const { return data.data() + layout().feat_b; }
  const double* verb_w() const { return data.data() + layout().verb_w; }
  const double* verb_b() const { return data.data() + layout().verb_b; }
  const double* noun_w() const { return data.data() + layout().noun_w; }
  const double* noun_b() const { return data.data() + layout().noun_b; }

  bool operator==(const ModelParams&) const = default;
};

// Small Gaussian init for weights (sd 1/sqrt(fan_in)), zero biases. A fully
// zero two-stage model has no gradient signal into F, so pretraining always
// starts from this.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

// Per-sample forward + scoring. Predictions are head-wise argmaxes (lowest
// index wins ties); losses are the softmax cross-entropies of each head.
struct SampleEval {
  int verb_pred = -1;
  int noun_pred = -1;
  double verb_loss = 0.0;
  double noun_loss = 0.0;
  double action_loss() const { return verb_loss + noun_loss; }
  bool correct(const ActionLabel& y, Level level) const {
    switch (level) {
      case Level::Verb: return verb_pred == y.verb;
      case Level::Noun: return noun_pred == y.noun;
      case Level::Action: return verb_pred == y.verb && noun_pred == y.noun;
    }
    return false;
  }
};

// Scratch buffers reused across forward/backward calls on one thread.
struct Workspace {
  std::vector<double> hidden, hidden_pre, verb_logits, noun_logits, dverb, dnoun,
      dhidden, dhidden2;
  void resize(const ModelDims& d);
};

void forward(const ModelParams& p, const double* x, Workspace& ws);
SampleEval eval_sample(const ModelParams& p, const Sample& s, Workspace& ws);

// Whole-stream evaluation; OpenMP-parallel over samples (each sample's
// result is computed independently, so thread count never changes values).
std::vector<SampleEval> eval_stream(const ModelParams& p,
                                    std::span<const Sample> samples);

// Mean over samples of (verb CE + noun CE).
double batch_loss(const ModelParams& p, std::span<const Sample* const> batch);
double batch_loss(const ModelParams& p, std::span<const Sample> batch);

// Checkpoints: raw little-endian doubles next to a JSON shape manifest.
// Round-trips are bit-exact.
void save_checkpoint(const ModelParams& p, const std::string& prefix);
ModelParams load_checkpoint(const std::string& prefix);

std::uint64_t params_digest(const ModelParams& p);

}  // namespace streamadapt
