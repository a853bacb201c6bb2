#include "streamadapt/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "streamadapt/common.hpp"
#include "streamadapt/kernels.hpp"

namespace streamadapt {

Scope scope_from_string(const std::string& s) {
  if (s == "full" || s == "fh") return Scope::Full;
  if (s == "feature" || s == "f") return Scope::FeatureOnly;
  if (s == "head" || s == "h") return Scope::HeadOnly;
  throw std::invalid_argument("unknown scope '" + s + "'");
}

std::string to_string(Scope s) {
  switch (s) {
    case Scope::Full: return "full";
    case Scope::FeatureOnly: return "feature";
    case Scope::HeadOnly: return "head";
  }
  return "?";
}

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("optim: lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("optim: momentum must be in [0, 1)");
  if (updates_per_batch < 1)
    throw std::invalid_argument("optim: updates_per_batch must be >= 1");
}

namespace {

void softmax_delta(const std::vector<double>& logits, int target, double weight,
                   std::vector<double>& out, double* loss) {
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  const double inv = 1.0 / sum;
  for (auto& v : out) v *= inv;
  if (loss) *loss += weight * (std::log(sum) + mx - logits[static_cast<std::size_t>(target)]);
  out[static_cast<std::size_t>(target)] -= 1.0;
  for (auto& v : out) v *= weight;
}

}  // namespace

double grad_batch(const ModelParams& p, std::span<const Sample* const> batch,
                  Scope scope, std::vector<double>& g) {
  if (batch.empty()) throw std::invalid_argument("grad_batch: empty batch");
  const auto& d = p.dims;
  const auto l = p.layout();
  g.assign(l.total, 0.0);
  Workspace ws;
  const double w = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  const bool want_f = scope != Scope::HeadOnly;
  const bool want_h = scope != Scope::FeatureOnly;
  for (const Sample* sp : batch) {
    const Sample& s = *sp;
    forward(p, s.features.data(), ws);
    softmax_delta(ws.verb_logits, s.label.verb, w, ws.dverb, &loss);
    softmax_delta(ws.noun_logits, s.label.noun, w, ws.dnoun, &loss);
    if (want_h) {
      kernels::outer_acc(g.data() + l.verb_w, ws.dverb.data(), ws.hidden.data(), 1.0,
                         d.vocab.verbs, d.hidden);
      for (int i = 0; i < d.vocab.verbs; ++i) g[l.verb_b + i] += ws.dverb[i];
      kernels::outer_acc(g.data() + l.noun_w, ws.dnoun.data(), ws.hidden.data(), 1.0,
                         d.vocab.nouns, d.hidden);
      for (int i = 0; i < d.vocab.nouns; ++i) g[l.noun_b + i] += ws.dnoun[i];
    }
    if (want_f) {
      kernels::matvec_t(p.verb_w(), ws.dverb.data(), ws.dhidden.data(), d.vocab.verbs, d.hidden);
      kernels::matvec_t(p.noun_w(), ws.dnoun.data(), ws.dhidden2.data(), d.vocab.nouns, d.hidden);
      for (int i = 0; i < d.hidden; ++i) ws.dhidden[i] += ws.dhidden2[i];
      if (d.relu)
        for (int i = 0; i < d.hidden; ++i)
          if (ws.hidden_pre[i] <= 0.0) ws.dhidden[i] = 0.0;
      kernels::outer_acc(g.data() + l.feat_w, ws.dhidden.data(), s.features.data(), 1.0,
                         d.hidden, d.input);
      for (int i = 0; i < d.hidden; ++i) g[l.feat_b + i] += ws.dhidden[i];
    }
  }
  return loss;
}

void sgd_step(LearnerState& st, const std::vector<double>& g, const OptimConfig& cfg) {
  if (g.size() != st.params.data.size())
    throw std::invalid_argument("sgd_step: gradient shape mismatch");
  for (double v : g)
    if (!std::isfinite(v)) throw std::runtime_error("sgd_step: non-finite gradient");
  const auto l = st.params.layout();
  auto apply = [&](std::size_t begin, std::size_t end, double rho) {
    double* theta = st.params.data.data();
    double* vel = st.velocity.data();
    if (rho == 0.0) {
      for (std::size_t i = begin; i < end; ++i) theta[i] -= cfg.lr * g[i];
    } else if (!cfg.nesterov) {
      for (std::size_t i = begin; i < end; ++i) {
        vel[i] = rho * vel[i] + g[i];
        theta[i] -= cfg.lr * vel[i];
      }
    } else {
      for (std::size_t i = begin; i < end; ++i) {
        vel[i] = rho * vel[i] + g[i];
        theta[i] -= cfg.lr * (g[i] + rho * vel[i]);
      }
    }
  };
  const double rho_f = cfg.momentum_scope == MomentumScope::HeadOnly ? 0.0 : cfg.momentum;
  const double rho_h = cfg.momentum_scope == MomentumScope::FeatureOnly ? 0.0 : cfg.momentum;
  if (cfg.scope != Scope::HeadOnly) apply(0, l.feature_end, rho_f);
  if (cfg.scope != Scope::FeatureOnly) apply(l.feature_end, l.total, rho_h);
  ++st.step;
}

// ---- Label-window predictor ----

void LwpState::update(std::span<const ActionLabel> labels) {
  for (const auto& y : labels) {
    buf_.push_back(y);
    if (window_ > 0 && buf_.size() > window_) buf_.pop_front();
  }
}

template <typename Key, typename Proj>
std::optional<Key> LwpState::modal(Proj proj) const {
  if (buf_.empty()) return std::nullopt;
  std::map<Key, std::pair<std::size_t, std::size_t>> tally;  // count, last index
  std::size_t pos = 0;
  for (const auto& y : buf_) {
    auto& t = tally[proj(y)];
    ++t.first;
    t.second = pos++;
  }
  Key best{};
  std::size_t best_count = 0, best_last = 0;
  bool first = true;
  for (const auto& [key, t] : tally) {
    if (first || t.first > best_count ||
        (t.first == best_count && t.second > best_last)) {
      best = key;
      best_count = t.first;
      best_last = t.second;
      first = false;
    }
  }
  return best;
}

std::optional<int> LwpState::predict_verb() const {
  return modal<int>([](const ActionLabel& y) { return y.verb; });
}
std::optional<int> LwpState::predict_noun() const {
  return modal<int>([](const ActionLabel& y) { return y.noun; });
}
std::optional<ActionLabel> LwpState::predict_action() const {
  auto key = modal<std::pair<int, int>>(
      [](const ActionLabel& y) { return std::pair<int, int>{y.verb, y.noun}; });
  if (!key) return std::nullopt;
  return ActionLabel{key->first, key->second};
}

// ---- Population pretraining ----

int select_epoch(const std::vector<double>& holdout_losses) {
  if (holdout_losses.empty()) throw std::invalid_argument("select_epoch: empty");
  return static_cast<int>(std::min_element(holdout_losses.begin(), holdout_losses.end()) -
                          holdout_losses.begin());
}

PretrainResult pretrain_population(const StreamCollection& c, const PretrainConfig& cfg) {
  if (c.population.empty())
    throw std::invalid_argument("pretrain_population: empty population");
  if (cfg.holdout_frac < 0.0 || cfg.holdout_frac >= 1.0)
    throw std::invalid_argument("pretrain_population: holdout_frac must be in [0, 1)");
  std::vector<const Sample*> pool;
  for (const auto& stream : c.population)
    for (const auto& s : stream.samples) pool.push_back(&s);
  if (pool.empty()) throw std::invalid_argument("pretrain_population: no samples");

  ModelDims dims{c.dim, cfg.hidden, c.vocab, cfg.relu};
  PretrainResult result;
  result.params = init_params(dims, cfg.seed);
  if (cfg.epochs == 0) return result;

  auto rng = make_rng(cfg.seed, "pretrain");
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto holdout_n = static_cast<std::size_t>(cfg.holdout_frac *
                                                  static_cast<double>(pool.size()));
  std::vector<const Sample*> holdout(pool.begin(), pool.begin() + holdout_n);
  std::vector<const Sample*> train(pool.begin() + holdout_n, pool.end());
  if (train.empty()) throw std::invalid_argument("pretrain_population: holdout leaves no data");
  // Empty holdout (tiny pools): epoch selection falls back to training loss.
  const auto& eval_set = holdout.empty() ? train : holdout;

  OptimConfig optim;
  optim.lr = cfg.lr;
  optim.updates_per_batch = 1;
  optim.scope = Scope::Full;
  LearnerState st(result.params);
  std::vector<double> g;
  ModelParams best = st.params;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t begin = 0; begin < train.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, train.size() - begin);
      grad_batch(st.params, {train.data() + begin, count}, Scope::Full, g);
      sgd_step(st, g, optim);
    }
    const double loss = batch_loss(st.params, std::span<const Sample* const>(eval_set));
    result.holdout_losses.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = st.params;
    }
  }
  result.best_epoch = select_epoch(result.holdout_losses);
  result.params = std::move(best);
  return result;
}

// ---- Online adaptation loop ----

AdaptResult adapt_stream(const ModelParams& init, const UserStream& stream,
                         const AdaptConfig& cfg, ReplayMemory* memory,
                         const ModelParams& pop,
                         const BatchObserver& observer) {
  cfg.optim.validate();
  if (!(init.dims == pop.dims))
    throw std::invalid_argument("adapt_stream: init/population shape mismatch");
  if (stream.samples.empty()) throw std::invalid_argument("adapt_stream: empty stream");

  AdaptResult out;
  out.grads.layout = init.layout();
  out.eval = eval_log_shell(stream);
  auto& log = out.eval;

  LearnerState st(init);
  RfTracker rf(stream, cfg.optim.updates_per_batch);
  Workspace ws;
  std::vector<double> g;
  for (const Batch& b : stream.batches) {
    const auto samples = stream.batch_samples(b);
    // Prequential scoring with the pre-update model and the frozen
    // population model.
    for (const auto& s : samples) {
      log.adapted.push(eval_sample(st.params, s, ws));
      log.pop.push(eval_sample(pop, s, ws));
    }
    if (observer) observer(b.step, st.params);
    rf.before_update(b.step, st.params);

    for (int u = 0; u < cfg.optim.updates_per_batch; ++u) {
      std::vector<const Sample*> ptrs;
      ptrs.reserve(samples.size() * 2);
      for (const auto& s : samples) ptrs.push_back(&s);
      std::vector<Sample> replay;
      if (memory && !memory->empty()) {
        replay = memory->draw(samples.size());
        for (const auto& s : replay) ptrs.push_back(&s);
      }
      const double loss = grad_batch(st.params, ptrs, cfg.optim.scope, g);
      if (!std::isfinite(loss))
        throw std::runtime_error("adapt_stream: non-finite loss at batch step " +
                                 std::to_string(b.step));
      sgd_step(st, g, cfg.optim);
      if (cfg.record_grads) out.grads.grads.push_back(g);
    }

    // Samples enter the memory only after the step's updates, so a batch
    // never replays itself.
    if (memory)
      for (const auto& s : samples) memory->store(s);
    rf.after_update(b.step, st.params);
  }
  out.rf = rf.take();
  out.final_params = std::move(st.params);
  return out;
}

}  // namespace streamadapt
