// Experiment orchestration: declarative config, the two-phase protocol
// (population pretraining, then per-user online adaptation), hyperparameter
// grids selected on the tuning users, parallel multi-stream execution with
// per-stream seeding, the non-gradient baselines, and CSV/JSON report
// emission. Per-stream randomness derives from hash(seed, user_id), so
// results are independent of the parallelism degree and execution order.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "streamadapt/analysis.hpp"
#include "streamadapt/learner.hpp"
#include "streamadapt/metrics.hpp"
#include "streamadapt/replay.hpp"
#include "streamadapt/stream.hpp"
#include "streamadapt/synth.hpp"

namespace streamadapt {

enum class Method {
  Random,
  Lwp,
  LwpB,
  Sgd,
  SgdHeadOnly,
  SgdFeatOnly,
  SgdIid,
  ErFifo,
  ErReservoir,
  ErHybridCbrs,
  ErFull,
};

Method method_from_string(const std::string& s);
std::string to_string(Method m);
bool method_has_memory(Method m);
bool method_is_gradient(Method m);

struct ExperimentConfig {
  int schema_version = 1;
  // data source: synthetic generator or a JSONL stream file
  bool synthetic = true;
  SynthConfig synth;
  int n_population = 10;
  int n_train = 10;
  int n_test = 40;
  std::string jsonl_path;
  // phase 1
  PretrainConfig pretrain;
  std::string population_checkpoint;  // load instead of pretraining when set
  // phase 2
  Method method = Method::Sgd;
  OptimConfig optim;
  std::size_t memory_capacity = 64;
  std::size_t lwp_window = 1;  // 0 = unbounded
  bool eval_on_train = false;  // ablation style: evaluate the tuning users
  bool record_grads = false;
  // grid search (selected on the tuning users by ACC-mode action OAG,
  // ties broken by lowest lr then lowest momentum)
  bool grid_enabled = false;
  std::vector<double> lr_grid{0.1, 0.01, 0.001};
  std::vector<double> momentum_grid{0.0};
  // run
  std::uint64_t seed = 0;
  int parallel = 1;
  std::string out_dir = "run_out";
  std::vector<std::string> studies;  // for the report subcommand

  void validate() const;
};

ExperimentConfig config_from_json_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// Uniform random permutation of the sample order (t reassigned to the new
// positions), re-batchified; the sample multiset is unchanged.
UserStream run_iid_variant(const UserStream& stream, std::uint64_t seed);

// CSV-backed table; numeric cells round-trip at full double precision.
struct Table {
  std::vector<std::string> columns;
  using Cell = std::variant<std::string, double>;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  void to_csv(const std::string& path) const;
  static Table from_csv(const std::string& path);
};

// One method executed over a set of user streams.
struct MethodRun {
  MetricReport report;
  std::vector<ModelParams> finals;  // empty for Random/LWP
  std::vector<GradLog> grad_logs;
  std::vector<std::pair<std::string, std::vector<double>>> curves;  // per-user OAG loss curve
};

MethodRun run_method(Method method, const std::vector<const UserStream*>& users,
                     const ModelParams& pop, const OptimConfig& optim,
                     std::size_t memory_capacity, std::size_t lwp_window,
                     std::uint64_t seed, int parallel, bool record_grads = false);

struct GridEntry {
  double lr = 0.0;
  double momentum = 0.0;
  double score = 0.0;  // aggregate ACC-mode action OAG on the tuning users
};

// Pure argmax with the documented tie-break; re-selection from persisted
// entries returns the same winner.
std::size_t select_grid_winner(const std::vector<GridEntry>& entries);

struct RunRecord {
  std::string config_hash;   // canonical config minus out/parallel
  std::string input_digest;  // content digest of the data source
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;
  MetricReport report;
  std::vector<std::pair<std::string, std::vector<double>>> curves;
  std::vector<GridEntry> grid;
  OptimConfig selected_optim;  // grid winner (or the configured optim)
  std::map<std::string, Table> tables;
  std::string digest;  // over seed, config hash and all metric values
};

RunRecord run_experiment(const ExperimentConfig& cfg);

// Runs the study list from cfg.studies ("lwp", "finetune", "multi_update",
// "replay", "probe", "final"), each reproducing one report table.
RunRecord run_studies(const ExperimentConfig& cfg);

// summary.json plus one CSV per table in the record, the per-user OAG
// curves and the RF bin profile.
void emit_reports(const RunRecord& record, const std::string& out_dir);

// Shared by run_experiment and the analysis subcommands.
struct Prepared {
  StreamCollection collection;
  ModelParams population;
  std::string input_digest;
};
Prepared prepare_experiment(const ExperimentConfig& cfg);

}  // namespace streamadapt
