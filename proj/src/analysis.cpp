#include "streamadapt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "streamadapt/common.hpp"

namespace streamadapt {

TransferMatrix transfer_matrix(const std::vector<ModelParams>& models,
                               const std::vector<const UserStream*>& streams,
                               const ModelParams& pop, Level level) {
  if (models.size() != streams.size())
    throw std::invalid_argument("transfer_matrix: model/stream count mismatch");
  for (const auto& m : models)
    if (!(m.dims == pop.dims))
      throw std::invalid_argument("transfer_matrix: model shape mismatch");
  TransferMatrix out;
  out.user_ids.reserve(streams.size());
  for (const auto* s : streams) out.user_ids.push_back(s->user_id);
  const auto n = streams.size();
  out.entries.assign(n, std::vector<double>(n, 0.0));
  const auto total = static_cast<std::ptrdiff_t>(n * n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t e = 0; e < total; ++e) {
    const auto u = static_cast<std::size_t>(e) / n;
    const auto v = static_cast<std::size_t>(e) % n;
    out.entries[u][v] = hag(models[u], *streams[v], pop, Mode::Loss, level);
  }
  return out;
}

namespace {

// Cosine over a coordinate range of two flat gradients; nullopt-like flag
// via the bool: false when either side has zero norm.
bool range_cosine(const std::vector<double>& a, const std::vector<double>& b,
                  std::size_t begin, std::size_t end, double* out) {
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return false;
  *out = ab / (std::sqrt(aa) * std::sqrt(bb));
  return true;
}

}  // namespace

std::vector<GradCosineRow> grad_cosine(const std::vector<GradLog>& logs, int k_max) {
  if (k_max < 1) throw std::invalid_argument("grad_cosine: k_max must be >= 1");
  std::vector<GradCosineRow> rows(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    auto& row = rows[static_cast<std::size_t>(k - 1)];
    row.k = k;
    std::vector<double> per_user_full, per_user_f, per_user_h;
    for (const auto& log : logs) {
      const auto& l = log.layout;
      std::vector<double> cf, cF, cH;
      for (std::size_t t = static_cast<std::size_t>(k); t < log.grads.size(); ++t) {
        const auto& gt = log.grads[t];
        const auto& gk = log.grads[t - static_cast<std::size_t>(k)];
        double c;
        if (range_cosine(gt, gk, 0, l.total, &c)) cf.push_back(c);
        else ++row.skipped_zero;
        if (range_cosine(gt, gk, 0, l.feature_end, &c)) cF.push_back(c);
        else ++row.skipped_zero;
        if (range_cosine(gt, gk, l.feature_end, l.total, &c)) cH.push_back(c);
        else ++row.skipped_zero;
      }
      auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      if (!cf.empty()) per_user_full.push_back(mean_of(cf));
      if (!cF.empty()) per_user_f.push_back(mean_of(cF));
      if (!cH.empty()) per_user_h.push_back(mean_of(cH));
    }
    if (!per_user_full.empty()) row.full = mean_se(per_user_full);
    if (!per_user_f.empty()) row.feature = mean_se(per_user_f);
    if (!per_user_h.empty()) row.head = mean_se(per_user_h);
  }
  return rows;
}

std::vector<ClassNormDelta> classifier_norm_delta(const std::vector<ModelParams>& finals,
                                                  const ModelParams& pop,
                                                  const std::vector<const UserStream*>& streams,
                                                  Level level) {
  if (level == Level::Action)
    throw std::invalid_argument("classifier_norm_delta: level must be verb or noun");
  if (finals.empty()) throw std::invalid_argument("classifier_norm_delta: no models");
  for (const auto& m : finals)
    if (!(m.dims == pop.dims))
      throw std::invalid_argument("classifier_norm_delta: shape mismatch");
  const int classes = level == Level::Verb ? pop.dims.vocab.verbs : pop.dims.vocab.nouns;
  const int h = pop.dims.hidden;
  auto head_w = [&](const ModelParams& p) {
    return level == Level::Verb ? p.verb_w() : p.noun_w();
  };
  auto head_b = [&](const ModelParams& p) {
    return level == Level::Verb ? p.verb_b() : p.noun_b();
  };
  auto row_norm = [&](const double* w, int cls) {
    double s = 0.0;
    for (int i = 0; i < h; ++i) {
      const double x = w[static_cast<std::size_t>(cls) * h + i];
      s += x * x;
    }
    return std::sqrt(s);
  };

  // Average relative class frequency across streams (uniform over streams).
  std::vector<double> freq(static_cast<std::size_t>(classes), 0.0);
  for (const auto* s : streams) {
    std::vector<double> local(static_cast<std::size_t>(classes), 0.0);
    for (const auto& sample : s->samples) {
      const int c = level == Level::Verb ? sample.label.verb : sample.label.noun;
      local[static_cast<std::size_t>(c)] += 1.0;
    }
    for (int c = 0; c < classes; ++c)
      freq[static_cast<std::size_t>(c)] +=
          local[static_cast<std::size_t>(c)] / static_cast<double>(s->samples.size());
  }
  if (!streams.empty())
    for (auto& f : freq) f /= static_cast<double>(streams.size());

  std::vector<ClassNormDelta> out;
  out.reserve(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    ClassNormDelta d;
    d.class_id = c;
    d.frequency = freq[static_cast<std::size_t>(c)];
    std::vector<double> wd, bd;
    for (const auto& m : finals) {
      wd.push_back(row_norm(head_w(m), c) - row_norm(head_w(pop), c));
      bd.push_back(std::abs(head_b(m)[c]) - std::abs(head_b(pop)[c]));
    }
    d.weight_delta = mean_se(wd);
    d.bias_delta = mean_se(bd);
    out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), [](const ClassNormDelta& a, const ClassNormDelta& b) {
    return a.frequency > b.frequency;
  });
  return out;
}

ProbeResult linear_probe(const ModelParams& adapted, const UserStream& stream,
                         const ProbeConfig& cfg) {
  if (cfg.epochs < 0) throw std::invalid_argument("linear_probe: epochs must be >= 0");
  // Fresh zero-initialized heads on a copy; the feature stage is carried
  // over bit-for-bit and excluded from the update scope.
  ModelParams probe(adapted.dims);
  const auto l = probe.layout();
  std::copy(adapted.data.begin(), adapted.data.begin() + static_cast<std::ptrdiff_t>(l.feature_end),
            probe.data.begin());

  std::vector<const Sample*> pool;
  pool.reserve(stream.samples.size());
  for (const auto& s : stream.samples) pool.push_back(&s);
  auto rng = make_rng(cfg.seed, "probe", stream.user_id);
  OptimConfig optim;
  optim.lr = cfg.lr;
  optim.scope = Scope::HeadOnly;
  LearnerState st(std::move(probe));
  std::vector<double> g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t begin = 0; begin < pool.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, pool.size() - begin);
      grad_batch(st.params, {pool.data() + begin, count}, Scope::HeadOnly, g);
      sgd_step(st, g, optim);
    }
  }
  const auto evals = eval_stream(st.params, stream.samples);
  const auto preds = predset_from_evals(evals);
  std::vector<ActionLabel> labels;
  labels.reserve(stream.samples.size());
  for (const auto& s : stream.samples) labels.push_back(s.label);
  ProbeResult r;
  r.acc_action = macro_acc(preds, labels, Level::Action);
  r.acc_verb = macro_acc(preds, labels, Level::Verb);
  r.acc_noun = macro_acc(preds, labels, Level::Noun);
  return r;
}

}  // namespace streamadapt
