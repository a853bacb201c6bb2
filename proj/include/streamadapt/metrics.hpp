// Adaptation-gain metrics. Every gain compares the adapting model against
// the frozen population model on identical data:
//   OAG  - prequential: each batch is scored before the model updates on it,
//          gains accumulate over the stream (online generalization).
//   HAG  - hindsight: the end-of-stream model scored over the full stream
//          (retention).
//   RF   - re-exposure forgetting: loss increase on an action's past samples
//          between just-after one occurrence and just-before the next.
// Base metric is class-balanced (macro) accuracy, or the loss (negated so
// positive gain = improvement). Per-user values aggregate as mean +- SE with
// a uniform prior over users.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "streamadapt/common.hpp"
#include "streamadapt/model.hpp"
#include "streamadapt/stream.hpp"

namespace streamadapt {

enum class Mode { Acc, Loss };

// Per-stream predictions of one predictor. Gradient models predict the
// action as the pair of head argmaxes; window predictors produce separate
// per-level modal predictions, so all three are stored. Loss columns are
// empty for predictors without a loss.
struct PredSet {
  std::vector<int> verb;
  std::vector<int> noun;
  std::vector<ActionLabel> action;
  std::vector<double> verb_loss;
  std::vector<double> noun_loss;

  bool has_loss() const { return !verb_loss.empty(); }
  std::size_t size() const { return action.size(); }
  void push(const SampleEval& e);
  // lossless predictors; the action prediction may differ from the
  // (verb, noun) pair when per-level predictions are independent
  void push_label(int verb_pred, int noun_pred);
  void push_label(int verb_pred, int noun_pred, ActionLabel action_pred);
  double loss_at(std::size_t i, Level level) const;
};

PredSet predset_from_evals(const std::vector<SampleEval>& evals);

// One stream's evaluation record: every sample exactly once, adapted and
// population predictions side by side.
struct EvalLog {
  std::vector<ActionLabel> labels;
  std::vector<int> batch_step;
  std::vector<bool> correlated;
  PredSet adapted;
  PredSet pop;

  std::size_t size() const { return labels.size(); }
};

// Labels, correlation flags and batch steps prefilled; predictions empty.
EvalLog eval_log_shell(const UserStream& stream);

// Mean over classes present in `labels` of per-class accuracy, times 100.
double macro_acc(std::span<const ActionLabel> preds,
                 std::span<const ActionLabel> labels, Level level);
double macro_acc(const PredSet& preds, std::span<const ActionLabel> labels,
                 Level level, const std::vector<bool>* mask = nullptr,
                 bool mask_value = true);

inline double ag(double phi_adapted, double phi_pop) { return phi_adapted - phi_pop; }

// Shared gain core: ACC mode is the pooled macro-accuracy difference; loss
// mode is the per-sample mean of (pop loss - adapted loss) at the level.
double gain(const EvalLog& log, Mode mode, Level level,
            const std::vector<bool>* mask = nullptr, bool mask_value = true);

// Prequential gain over an adapt run's log. `mask` (with mask_value)
// restricts to the correlated or decorrelated subset; selecting zero
// samples is an error.
double oag(const EvalLog& log, Mode mode, Level level,
           const std::vector<bool>* mask = nullptr, bool mask_value = true);

// Running cumulative sum of (pop loss - adapted loss), one point per sample.
std::vector<double> oag_curve(const EvalLog& log, Level level);

// Builds the hindsight log for a final checkpoint (evaluation only).
EvalLog hindsight_log(const ModelParams& final_params, const UserStream& stream,
                      const ModelParams& pop);
double hag(const ModelParams& final_params, const UserStream& stream,
           const ModelParams& pop, Mode mode, Level level);

inline MeanSe aggregate(const std::vector<double>& per_user) { return mean_se(per_user); }

// ---- Re-exposure forgetting ----

struct RfEvent {
  ActionLabel action;
  int prior_step = 0;       // batch step t of the previous occurrence
  int reexposure_step = 0;  // batch step e > t+1 of the re-exposure
  std::int64_t gap_updates = 0;  // update iterations between the checkpoints
  double rf = 0.0;               // positive = forgetting
};

struct RfLog {
  std::vector<RfEvent> events;
};

// Interleaves with the adaptation loop. after_update(t, params) records the
// mean loss of each just-seen action over its past samples under the
// post-update model; before_update(e, params) compares the pre-update model
// against that stored value when the action re-occurs with e > t+1.
class RfTracker {
 public:
  RfTracker(const UserStream& stream, int updates_per_batch);

  void before_update(int step, const ModelParams& params);
  void after_update(int step, const ModelParams& params);
  RfLog take() { return std::move(log_); }

 private:
  struct ActionState {
    int last_step = -1;
    double loss_after = 0.0;
    std::vector<std::size_t> sample_idx;  // samples with this label, <= last_step
  };
  double mean_loss(const ModelParams& params, const std::vector<std::size_t>& idx) const;

  const UserStream* stream_;
  int updates_per_batch_;
  std::unordered_map<ActionLabel, ActionState> state_;
  RfLog log_;
};

struct RfBin {
  double log_lo = 0.0;
  double log_hi = 0.0;
  MeanSe stats;
  std::size_t count = 0;
};

// Gaps are log-scaled, the range split into n_bins equal-width bins (right
// edge inclusive, so a gap exactly on an interior edge falls in the lower
// bin). Empty bins are omitted.
std::vector<RfBin> bin_rf(const RfLog& log, int n_bins = 10);

// ---- Per-user metric rows and the aggregated report ----

struct UserMetrics {
  std::string user_id;
  bool has_loss = false;
  // indexed by Level: Action=0, Verb=1, Noun=2
  std::array<double, 3> oag_acc{}, hag_acc{}, oag_loss{}, hag_loss{};
  std::array<double, 3> online_acc{}, hindsight_acc{};
  std::array<double, 3> pop_online_acc{}, pop_hindsight_acc{};
  double oag_acc_cor = 0.0, oag_acc_decor = 0.0;
  double oag_loss_cor = 0.0, oag_loss_decor = 0.0;
  double avg_rf = 0.0;
  std::size_t rf_events = 0;
};

UserMetrics compute_user_metrics(const std::string& user_id, const EvalLog& online,
                                 const EvalLog& hindsight, const RfLog& rf);

struct MetricReport {
  std::vector<UserMetrics> users;
  std::map<std::string, MeanSe> aggregate;  // keyed like "oag_acc_action"
  RfLog pooled_rf;
  MeanSe pooled_avg_rf;  // mean +- SE over all events pooled across users
  std::vector<RfBin> rf_bins;
};

MetricReport build_report(std::vector<UserMetrics> users, std::vector<RfLog> rf_logs);

const char* level_name(Level level);

}  // namespace streamadapt
