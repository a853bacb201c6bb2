#include "streamadapt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace streamadapt {

const char* level_name(Level level) {
  switch (level) {
    case Level::Action: return "action";
    case Level::Verb: return "verb";
    case Level::Noun: return "noun";
  }
  return "?";
}

void PredSet::push(const SampleEval& e) {
  verb.push_back(e.verb_pred);
  noun.push_back(e.noun_pred);
  action.push_back({e.verb_pred, e.noun_pred});
  verb_loss.push_back(e.verb_loss);
  noun_loss.push_back(e.noun_loss);
}

void PredSet::push_label(int verb_pred, int noun_pred) {
  push_label(verb_pred, noun_pred, ActionLabel{verb_pred, noun_pred});
}

void PredSet::push_label(int verb_pred, int noun_pred, ActionLabel action_pred) {
  verb.push_back(verb_pred);
  noun.push_back(noun_pred);
  action.push_back(action_pred);
}

double PredSet::loss_at(std::size_t i, Level level) const {
  switch (level) {
    case Level::Action: return verb_loss[i] + noun_loss[i];
    case Level::Verb: return verb_loss[i];
    case Level::Noun: return noun_loss[i];
  }
  return 0.0;
}

PredSet predset_from_evals(const std::vector<SampleEval>& evals) {
  PredSet p;
  p.verb.reserve(evals.size());
  for (const auto& e : evals) p.push(e);
  return p;
}

namespace {

// Class key at a level; actions use the packed pair.
std::int64_t class_key(const ActionLabel& a, Level level) {
  switch (level) {
    case Level::Action:
      return (static_cast<std::int64_t>(a.verb) << 32) | static_cast<std::uint32_t>(a.noun);
    case Level::Verb: return a.verb;
    case Level::Noun: return a.noun;
  }
  return -1;
}

bool pred_correct(const PredSet& p, std::size_t i, const ActionLabel& y, Level level) {
  switch (level) {
    case Level::Action: return p.action[i] == y;
    case Level::Verb: return p.verb[i] == y.verb;
    case Level::Noun: return p.noun[i] == y.noun;
  }
  return false;
}

struct ClassTally {
  std::size_t total = 0;
  std::size_t correct = 0;
};

double macro_from_tallies(const std::map<std::int64_t, ClassTally>& tallies) {
  if (tallies.empty()) throw std::invalid_argument("macro_acc: no samples selected");
  double acc = 0.0;
  for (const auto& [key, t] : tallies)
    acc += static_cast<double>(t.correct) / static_cast<double>(t.total);
  return 100.0 * acc / static_cast<double>(tallies.size());
}

}  // namespace

double macro_acc(std::span<const ActionLabel> preds,
                 std::span<const ActionLabel> labels, Level level) {
  if (preds.size() != labels.size())
    throw std::invalid_argument("macro_acc: length mismatch");
  if (labels.empty()) throw std::invalid_argument("macro_acc: empty input");
  std::map<std::int64_t, ClassTally> tallies;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& t = tallies[class_key(labels[i], level)];
    ++t.total;
    if (class_key(preds[i], level) == class_key(labels[i], level)) ++t.correct;
  }
  return macro_from_tallies(tallies);
}

double macro_acc(const PredSet& preds, std::span<const ActionLabel> labels,
                 Level level, const std::vector<bool>* mask, bool mask_value) {
  if (preds.size() != labels.size())
    throw std::invalid_argument("macro_acc: length mismatch");
  std::map<std::int64_t, ClassTally> tallies;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mask && (*mask)[i] != mask_value) continue;
    auto& t = tallies[class_key(labels[i], level)];
    ++t.total;
    if (pred_correct(preds, i, labels[i], level)) ++t.correct;
  }
  return macro_from_tallies(tallies);
}

double gain(const EvalLog& log, Mode mode, Level level,
            const std::vector<bool>* mask, bool mask_value) {
  if (log.size() == 0) throw std::invalid_argument("gain: empty log");
  if (mode == Mode::Acc) {
    const double a = macro_acc(log.adapted, log.labels, level, mask, mask_value);
    const double p = macro_acc(log.pop, log.labels, level, mask, mask_value);
    return ag(a, p);
  }
  if (!log.adapted.has_loss() || !log.pop.has_loss())
    throw std::invalid_argument("gain: loss mode unavailable for this predictor");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (mask && (*mask)[i] != mask_value) continue;
    sum += log.pop.loss_at(i, level) - log.adapted.loss_at(i, level);
    ++n;
  }
  if (n == 0) throw std::invalid_argument("gain: mask selects zero samples");
  return sum / static_cast<double>(n);
}

double oag(const EvalLog& log, Mode mode, Level level,
           const std::vector<bool>* mask, bool mask_value) {
  return gain(log, mode, level, mask, mask_value);
}

std::vector<double> oag_curve(const EvalLog& log, Level level) {
  if (!log.adapted.has_loss() || !log.pop.has_loss())
    throw std::invalid_argument("oag_curve: loss mode unavailable");
  std::vector<double> curve(log.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    cum += log.pop.loss_at(i, level) - log.adapted.loss_at(i, level);
    curve[i] = cum;
  }
  return curve;
}

EvalLog eval_log_shell(const UserStream& stream) {
  EvalLog log;
  log.labels.reserve(stream.samples.size());
  for (const auto& s : stream.samples) log.labels.push_back(s.label);
  const auto mask = correlation_mask(stream);
  log.correlated.assign(mask.begin(), mask.end());
  log.batch_step.resize(stream.samples.size());
  for (const auto& b : stream.batches)
    for (std::size_t i = b.begin; i < b.begin + b.count; ++i)
      log.batch_step[i] = b.step;
  return log;
}

EvalLog hindsight_log(const ModelParams& final_params, const UserStream& stream,
                      const ModelParams& pop) {
  EvalLog log = eval_log_shell(stream);
  log.adapted = predset_from_evals(eval_stream(final_params, stream.samples));
  log.pop = predset_from_evals(eval_stream(pop, stream.samples));
  return log;
}

double hag(const ModelParams& final_params, const UserStream& stream,
           const ModelParams& pop, Mode mode, Level level) {
  return gain(hindsight_log(final_params, stream, pop), mode, level);
}

// ---- Re-exposure forgetting ----

RfTracker::RfTracker(const UserStream& stream, int updates_per_batch)
    : stream_(&stream), updates_per_batch_(updates_per_batch) {
  if (updates_per_batch < 1)
    throw std::invalid_argument("RfTracker: updates_per_batch must be >= 1");
}

double RfTracker::mean_loss(const ModelParams& params,
                            const std::vector<std::size_t>& idx) const {
  Workspace ws;
  double sum = 0.0;
  for (std::size_t i : idx) sum += eval_sample(params, stream_->samples[i], ws).action_loss();
  return sum / static_cast<double>(idx.size());
}

void RfTracker::before_update(int step, const ModelParams& params) {
  const Batch& b = stream_->batches.at(static_cast<std::size_t>(step));
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = b.begin; i < b.begin + b.count; ++i) {
    const ActionLabel y = stream_->samples[i].label;
    if (!seen.insert({y.verb, y.noun}).second) continue;
    auto it = state_.find(y);
    if (it == state_.end()) continue;                 // first occurrence
    const int t = it->second.last_step;
    if (step <= t + 1) continue;                      // consecutive steps carry no event
    RfEvent ev;
    ev.action = y;
    ev.prior_step = t;
    ev.reexposure_step = step;
    ev.gap_updates = static_cast<std::int64_t>(step - t - 1) * updates_per_batch_;
    ev.rf = mean_loss(params, it->second.sample_idx) - it->second.loss_after;
    log_.events.push_back(ev);
  }
}

void RfTracker::after_update(int step, const ModelParams& params) {
  const Batch& b = stream_->batches.at(static_cast<std::size_t>(step));
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = b.begin; i < b.begin + b.count; ++i) {
    const ActionLabel y = stream_->samples[i].label;
    if (!seen.insert({y.verb, y.noun}).second) continue;
    auto& st = state_[y];
    for (std::size_t j = b.begin; j < b.begin + b.count; ++j)
      if (stream_->samples[j].label == y) st.sample_idx.push_back(j);
    st.last_step = step;
    st.loss_after = mean_loss(params, st.sample_idx);
  }
}

std::vector<RfBin> bin_rf(const RfLog& log, int n_bins) {
  if (log.events.empty()) throw std::invalid_argument("bin_rf: empty log");
  if (n_bins < 1) throw std::invalid_argument("bin_rf: n_bins must be >= 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> lg(log.events.size());
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    lg[i] = std::log(static_cast<double>(log.events[i].gap_updates));
    lo = std::min(lo, lg[i]);
    hi = std::max(hi, lg[i]);
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<std::vector<double>> values(static_cast<std::size_t>(n_bins));
  for (std::size_t i = 0; i < lg.size(); ++i) {
    int idx = 0;
    if (width > 0.0) {
      idx = static_cast<int>(std::ceil((lg[i] - lo) / width)) - 1;
      idx = std::clamp(idx, 0, n_bins - 1);
    }
    values[static_cast<std::size_t>(idx)].push_back(log.events[i].rf);
  }
  std::vector<RfBin> bins;
  for (int i = 0; i < n_bins; ++i) {
    if (values[static_cast<std::size_t>(i)].empty()) continue;
    RfBin b;
    b.log_lo = lo + width * i;
    b.log_hi = width > 0.0 ? lo + width * (i + 1) : hi;
    b.stats = mean_se(values[static_cast<std::size_t>(i)]);
    b.count = values[static_cast<std::size_t>(i)].size();
    bins.push_back(b);
  }
  return bins;
}

// ---- Report assembly ----

UserMetrics compute_user_metrics(const std::string& user_id, const EvalLog& online,
                                 const EvalLog& hindsight, const RfLog& rf) {
  UserMetrics m;
  m.user_id = user_id;
  m.has_loss = online.adapted.has_loss();
  const Level levels[3] = {Level::Action, Level::Verb, Level::Noun};
  for (int li = 0; li < 3; ++li) {
    const Level level = levels[li];
    m.oag_acc[li] = gain(online, Mode::Acc, level);
    m.hag_acc[li] = gain(hindsight, Mode::Acc, level);
    m.online_acc[li] = macro_acc(online.adapted, online.labels, level);
    m.pop_online_acc[li] = macro_acc(online.pop, online.labels, level);
    m.hindsight_acc[li] = macro_acc(hindsight.adapted, hindsight.labels, level);
    m.pop_hindsight_acc[li] = macro_acc(hindsight.pop, hindsight.labels, level);
    if (m.has_loss) {
      m.oag_loss[li] = gain(online, Mode::Loss, level);
      m.hag_loss[li] = gain(hindsight, Mode::Loss, level);
    } else {
      m.oag_loss[li] = m.hag_loss[li] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  auto masked_or_nan = [&](Mode mode, bool mask_value) {
    try {
      return gain(online, mode, Level::Action, &online.correlated, mask_value);
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  m.oag_acc_cor = masked_or_nan(Mode::Acc, true);
  m.oag_acc_decor = masked_or_nan(Mode::Acc, false);
  if (m.has_loss) {
    m.oag_loss_cor = masked_or_nan(Mode::Loss, true);
    m.oag_loss_decor = masked_or_nan(Mode::Loss, false);
  } else {
    m.oag_loss_cor = m.oag_loss_decor = std::numeric_limits<double>::quiet_NaN();
  }
  m.rf_events = rf.events.size();
  if (rf.events.empty()) {
    m.avg_rf = std::numeric_limits<double>::quiet_NaN();
  } else {
    double sum = 0.0;
    for (const auto& e : rf.events) sum += e.rf;
    m.avg_rf = sum / static_cast<double>(rf.events.size());
  }
  return m;
}

namespace {

void aggregate_field(MetricReport& r, const std::string& key,
                     const std::vector<double>& values) {
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (!finite.empty()) r.aggregate[key] = mean_se(finite);
}

}  // namespace

MetricReport build_report(std::vector<UserMetrics> users, std::vector<RfLog> rf_logs) {
  MetricReport r;
  r.users = std::move(users);
  const char* names[3] = {"action", "verb", "noun"};
  for (int li = 0; li < 3; ++li) {
    auto pull = [&](auto member) {
      std::vector<double> v;
      v.reserve(r.users.size());
      for (const auto& u : r.users) v.push_back((u.*member)[static_cast<std::size_t>(li)]);
      return v;
    };
    const std::string suffix = names[li];
    aggregate_field(r, "oag_acc_" + suffix, pull(&UserMetrics::oag_acc));
    aggregate_field(r, "hag_acc_" + suffix, pull(&UserMetrics::hag_acc));
    aggregate_field(r, "oag_loss_" + suffix, pull(&UserMetrics::oag_loss));
    aggregate_field(r, "hag_loss_" + suffix, pull(&UserMetrics::hag_loss));
    aggregate_field(r, "online_acc_" + suffix, pull(&UserMetrics::online_acc));
    aggregate_field(r, "hindsight_acc_" + suffix, pull(&UserMetrics::hindsight_acc));
    aggregate_field(r, "pop_online_acc_" + suffix, pull(&UserMetrics::pop_online_acc));
    aggregate_field(r, "pop_hindsight_acc_" + suffix, pull(&UserMetrics::pop_hindsight_acc));
  }
  auto pull1 = [&](auto member) {
    std::vector<double> v;
    v.reserve(r.users.size());
    for (const auto& u : r.users) v.push_back(u.*member);
    return v;
  };
  aggregate_field(r, "oag_acc_cor", pull1(&UserMetrics::oag_acc_cor));
  aggregate_field(r, "oag_acc_decor", pull1(&UserMetrics::oag_acc_decor));
  aggregate_field(r, "oag_loss_cor", pull1(&UserMetrics::oag_loss_cor));
  aggregate_field(r, "oag_loss_decor", pull1(&UserMetrics::oag_loss_decor));
  aggregate_field(r, "avg_rf", pull1(&UserMetrics::avg_rf));

  for (auto& rl : rf_logs)
    for (auto& e : rl.events) r.pooled_rf.events.push_back(e);
  if (!r.pooled_rf.events.empty()) {
    std::vector<double> vals;
    vals.reserve(r.pooled_rf.events.size());
    for (const auto& e : r.pooled_rf.events) vals.push_back(e.rf);
    r.pooled_avg_rf = mean_se(vals);
    r.rf_bins = bin_rf(r.pooled_rf, 10);
  }
  return r;
}

}  // namespace streamadapt
