#include "streamadapt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "streamadapt/common.hpp"

namespace streamadapt {

void SynthConfig::validate() const {
  if (verbs < 1 || nouns < 1) throw std::invalid_argument("synth: vocab sizes must be >= 1");
  if (actions_per_user < 1 || actions_per_user > verbs * nouns)
    throw std::invalid_argument("synth: actions_per_user must be in [1, V*N]");
  if (zipf_s < 0.0) throw std::invalid_argument("synth: zipf_s must be >= 0");
  if (repeat_p < 0.0 || repeat_p >= 1.0)
    throw std::invalid_argument("synth: repeat_p must be in [0, 1)");
  if (stream_len < 0) throw std::invalid_argument("synth: stream_len must be >= 0");
  if (dim < 1) throw std::invalid_argument("synth: dim must be >= 1");
  if (feature_sigma < 0.0 || user_shift < 0.0 || drift_rate < 0.0)
    throw std::invalid_argument("synth: scales must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("synth: batch_size must be >= 1");
}

namespace {

// Base feature mean for an action, shared by every user so the population
// model transfers: a fixed function of (cfg.seed, action id).
std::vector<double> action_base_mean(const SynthConfig& cfg, int action) {
  auto rng = make_rng(cfg.seed, "action_mean", std::to_string(action));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> mean(cfg.dim);
  for (auto& m : mean) m = gauss(rng);
  return mean;
}

std::vector<int> sample_action_subset(const SynthConfig& cfg, const std::string& user_id) {
  auto rng = make_rng(cfg.seed, "action_subset", user_id);
  // Partial Fisher-Yates over the full action space.
  std::vector<int> all(static_cast<std::size_t>(cfg.verbs) * cfg.nouns);
  std::iota(all.begin(), all.end(), 0);
  const int k = cfg.actions_per_user;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(k);
  return all;
}

// Zipf ranks follow subset order, so each user has its own head classes.
std::vector<double> zipf_cumulative(int k, double s) {
  std::vector<double> cum(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    total += std::pow(static_cast<double>(i + 1), -s);
    cum[i] = total;
  }
  return cum;
}

int draw_zipf(std::mt19937_64& rng, const std::vector<double>& cum) {
  std::uniform_real_distribution<double> unif(0.0, cum.back());
  const double u = unif(rng);
  const auto it = std::lower_bound(cum.begin(), cum.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cum.begin(),
                                                   static_cast<std::ptrdiff_t>(cum.size()) - 1));
}

}  // namespace

UserStream gen_user_stream(const SynthConfig& cfg, const std::string& user_id,
                           std::vector<int> action_subset) {
  cfg.validate();
  if (action_subset.empty()) {
    action_subset = sample_action_subset(cfg, user_id);
  } else {
    const int max_id = cfg.verbs * cfg.nouns;
    for (int a : action_subset)
      if (a < 0 || a >= max_id) throw std::invalid_argument("synth: action id out of range");
  }
  const int k = static_cast<int>(action_subset.size());
  const Vocab vocab = cfg.vocab();

  std::vector<std::vector<double>> means(k);
  for (int i = 0; i < k; ++i) means[i] = action_base_mean(cfg, action_subset[i]);

  std::vector<double> user_offset(cfg.dim, 0.0);
  if (cfg.user_shift > 0.0) {
    auto rng = make_rng(cfg.seed, "user_offset", user_id);
    std::normal_distribution<double> gauss(0.0, cfg.user_shift);
    for (auto& o : user_offset) o = gauss(rng);
  }
  std::vector<double> drift_dir(cfg.dim, 0.0);
  if (cfg.drift_rate > 0.0) {
    auto rng = make_rng(cfg.seed, "drift_dir", user_id);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double norm2 = 0.0;
    for (auto& v : drift_dir) {
      v = gauss(rng);
      norm2 += v * v;
    }
    const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    for (auto& v : drift_dir) v *= inv;
  }

  const auto zipf_cum = zipf_cumulative(k, cfg.zipf_s);
  auto rng = make_rng(cfg.seed, "stream", user_id);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Sample> samples;
  samples.reserve(cfg.stream_len);
  int prev = -1;
  for (int t = 0; t < cfg.stream_len; ++t) {
    int idx;
    if (prev >= 0 && unif(rng) < cfg.repeat_p) {
      idx = prev;
    } else {
      // Fresh draws exclude the previous action so the observed repeat rate
      // equals repeat_p regardless of the tail shape. Degenerate one-action
      // subsets can only repeat.
      idx = draw_zipf(rng, zipf_cum);
      while (k > 1 && idx == prev) idx = draw_zipf(rng, zipf_cum);
    }
    Sample s;
    s.t = t;
    s.label = action_from_id(action_subset[idx], vocab);
    s.features.resize(cfg.dim);
    const double drift = cfg.drift_rate * static_cast<double>(t);
    for (int j = 0; j < cfg.dim; ++j)
      s.features[j] = means[idx][j] + user_offset[j] + drift * drift_dir[j] +
                      cfg.feature_sigma * noise(rng);
    samples.push_back(std::move(s));
    prev = idx;
  }
  return make_stream(user_id, vocab, cfg.batch_size, std::move(samples));
}

StreamCollection gen_collection(const SynthConfig& cfg, int n_population,
                                int n_train, int n_test) {
  cfg.validate();
  if (n_population < 0 || n_train < 0 || n_test < 0)
    throw std::invalid_argument("synth: user counts must be >= 0");
  StreamCollection out;
  out.vocab = cfg.vocab();
  out.dim = cfg.dim;

  SynthConfig pop_cfg = cfg;
  pop_cfg.user_shift = 0.0;
  for (int i = 0; i < n_population; ++i)
    out.population.push_back(gen_user_stream(pop_cfg, "pop" + std::to_string(i)));
  for (int i = 0; i < n_train; ++i)
    out.train_users.push_back(gen_user_stream(cfg, "train" + std::to_string(i)));
  for (int i = 0; i < n_test; ++i)
    out.test_users.push_back(gen_user_stream(cfg, "test" + std::to_string(i)));
  return out;
}

}  // namespace streamadapt
