// The trainable side: analytic gradients with parameter-scope control
// (feature stage, heads, or both), SGD with plain/Nesterov momentum,
// multi-update steps, the label-window predictor baseline, population
// pretraining with epoch selection on a holdout, and the per-stream online
// adaptation loop that produces the evaluation, gradient and re-exposure
// forgetting logs.
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "streamadapt/metrics.hpp"
#include "streamadapt/model.hpp"
#include "streamadapt/replay.hpp"
#include "streamadapt/stream.hpp"
#include "streamadapt/synth.hpp"

namespace streamadapt {

enum class Scope { Full, FeatureOnly, HeadOnly };
enum class MomentumScope { All, FeatureOnly, HeadOnly };

Scope scope_from_string(const std::string& s);
std::string to_string(Scope s);

struct OptimConfig {
  double lr = 0.01;
  double momentum = 0.0;
  bool nesterov = false;
  int updates_per_batch = 1;
  Scope scope = Scope::Full;
  MomentumScope momentum_scope = MomentumScope::All;  // momentum study knob
  void validate() const;
};

struct LearnerState {
  ModelParams params;
  std::vector<double> velocity;  // zero-initialized, mirrors params.data
  std::int64_t step = 0;

  explicit LearnerState(ModelParams p)
      : params(std::move(p)), velocity(params.data.size(), 0.0) {}
};

// Exact gradient of the mean-reduced loss over the batch; entries outside
// `scope` stay exactly zero. Returns the batch loss.
double grad_batch(const ModelParams& p, std::span<const Sample* const> batch,
                  Scope scope, std::vector<double>& g);

// rho = 0:        theta -= lr * g
// plain momentum: v = rho v + g;  theta -= lr * v
// Nesterov:       v = rho v + g;  theta -= lr * (g + rho v)
// Only blocks inside cfg.scope are touched; a non-finite gradient throws.
void sgd_step(LearnerState& st, const std::vector<double>& g, const OptimConfig& cfg);

// Label-window predictor: modal label over the W most recent labels
// (W = 0 means unbounded). Ties go to the most recently observed label.
class LwpState {
 public:
  explicit LwpState(std::size_t window) : window_(window) {}

  void update(std::span<const ActionLabel> labels);
  std::optional<int> predict_verb() const;
  std::optional<int> predict_noun() const;
  std::optional<ActionLabel> predict_action() const;
  std::size_t size() const { return buf_.size(); }

 private:
  template <typename Key, typename Proj>
  std::optional<Key> modal(Proj proj) const;

  std::size_t window_;
  std::deque<ActionLabel> buf_;
};

struct PretrainConfig {
  int epochs = 15;
  double lr = 0.01;
  double holdout_frac = 0.1;
  int batch_size = 32;
  int hidden = 32;
  bool relu = false;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  ModelParams params;                  // checkpoint with lowest holdout action loss
  std::vector<double> holdout_losses;  // one per epoch
  int best_epoch = -1;                 // -1 when epochs == 0
};

// Argmin over per-epoch holdout losses; first wins ties.
int select_epoch(const std::vector<double>& holdout_losses);

// Multi-epoch i.i.d.-shuffled SGD over the pooled population samples.
// epochs == 0 returns the seeded initialization unchanged.
PretrainResult pretrain_population(const StreamCollection& c, const PretrainConfig& cfg);

// Raw per-update flattened gradients (recorded only when asked; the
// alignment analysis normalizes on read).
struct GradLog {
  ParamLayout layout;
  std::vector<std::vector<double>> grads;
};

struct AdaptConfig {
  OptimConfig optim;
  bool record_grads = false;
};

struct AdaptResult {
  ModelParams final_params;
  EvalLog eval;
  GradLog grads;
  RfLog rf;
};

// Called with (batch step, params before the step's updates); used by tests
// to checkpoint mid-stream.
using BatchObserver = std::function<void(int, const ModelParams&)>;

// The prequential loop. Per batch step: (1) score the incoming batch with
// the current and the population model before any update; (2) run
// updates_per_batch SGD steps, each on the batch concatenated with an
// equal-sized uniform draw from the replay memory (when provided and
// non-empty); (3) offer the batch to the memory's storage policy;
// (4) advance the re-exposure forgetting bookkeeping. A non-finite loss
// halts the stream with a diagnostic naming the batch step.
AdaptResult adapt_stream(const ModelParams& init, const UserStream& stream,
                         const AdaptConfig& cfg, ReplayMemory* memory,
                         const ModelParams& pop,
                         const BatchObserver& observer = {});

}  // namespace streamadapt
