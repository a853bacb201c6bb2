#include "streamadapt/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "streamadapt/common.hpp"
#include "streamadapt/kernels.hpp"

namespace streamadapt {

ParamLayout ParamLayout::make(const ModelDims& d) {
  ParamLayout l;
  const auto h = static_cast<std::size_t>(d.hidden);
  const auto in = static_cast<std::size_t>(d.input);
  const auto v = static_cast<std::size_t>(d.vocab.verbs);
  const auto n = static_cast<std::size_t>(d.vocab.nouns);
  l.feat_w = 0;
  l.feat_b = l.feat_w + h * in;
  l.verb_w = l.feat_b + h;
  l.verb_b = l.verb_w + v * h;
  l.noun_w = l.verb_b + v;
  l.noun_b = l.noun_w + n * h;
  l.total = l.noun_b + n;
  l.feature_end = l.verb_w;
  return l;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p(dims);
  auto rng = make_rng(seed, "model_init");
  const double f_sd = 1.0 / std::sqrt(static_cast<double>(dims.input));
  const double h_sd = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  std::normal_distribution<double> gf(0.0, f_sd), gh(0.0, h_sd);
  const auto l = p.layout();
  for (std::size_t i = l.feat_w; i < l.feat_b; ++i) p.data[i] = gf(rng);
  for (std::size_t i = l.verb_w; i < l.verb_b; ++i) p.data[i] = gh(rng);
  for (std::size_t i = l.noun_w; i < l.noun_b; ++i) p.data[i] = gh(rng);
  return p;
}

void Workspace::resize(const ModelDims& d) {
  hidden.resize(d.hidden);
  hidden_pre.resize(d.hidden);
  verb_logits.resize(d.vocab.verbs);
  noun_logits.resize(d.vocab.nouns);
  dverb.resize(d.vocab.verbs);
  dnoun.resize(d.vocab.nouns);
  dhidden.resize(d.hidden);
  dhidden2.resize(d.hidden);
}

void forward(const ModelParams& p, const double* x, Workspace& ws) {
  const auto& d = p.dims;
  ws.resize(d);
  kernels::matvec(p.feat_w(), x, p.feat_b(), ws.hidden_pre.data(), d.hidden, d.input);
  if (d.relu) {
    for (int i = 0; i < d.hidden; ++i) ws.hidden[i] = std::max(0.0, ws.hidden_pre[i]);
  } else {
    ws.hidden = ws.hidden_pre;
  }
  kernels::matvec(p.verb_w(), ws.hidden.data(), p.verb_b(), ws.verb_logits.data(),
                  d.vocab.verbs, d.hidden);
  kernels::matvec(p.noun_w(), ws.hidden.data(), p.noun_b(), ws.noun_logits.data(),
                  d.vocab.nouns, d.hidden);
}

namespace {

// Cross entropy via shifted log-sum-exp; also reports the argmax.
double cross_entropy(const std::vector<double>& logits, int target, int* argmax) {
  double mx = logits[0];
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > mx) {
      mx = logits[i];
      best = static_cast<int>(i);
    }
  }
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  if (argmax) *argmax = best;
  return mx + std::log(sum) - logits[static_cast<std::size_t>(target)];
}

}  // namespace

SampleEval eval_sample(const ModelParams& p, const Sample& s, Workspace& ws) {
  const auto& v = p.dims.vocab;
  if (s.label.verb < 0 || s.label.verb >= v.verbs || s.label.noun < 0 || s.label.noun >= v.nouns)
    throw std::invalid_argument("eval_sample: label out of vocabulary");
  if (static_cast<int>(s.features.size()) != p.dims.input)
    throw std::invalid_argument("eval_sample: feature dimension mismatch");
  forward(p, s.features.data(), ws);
  SampleEval e;
  e.verb_loss = cross_entropy(ws.verb_logits, s.label.verb, &e.verb_pred);
  e.noun_loss = cross_entropy(ws.noun_logits, s.label.noun, &e.noun_pred);
  return e;
}

std::vector<SampleEval> eval_stream(const ModelParams& p,
                                    std::span<const Sample> samples) {
  std::vector<SampleEval> out(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel
  {
    Workspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = eval_sample(p, samples[i], ws);
  }
  return out;
}

double batch_loss(const ModelParams& p, std::span<const Sample* const> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  Workspace ws;
  double sum = 0.0;
  for (const Sample* s : batch) sum += eval_sample(p, *s, ws).action_loss();
  return sum / static_cast<double>(batch.size());
}

double batch_loss(const ModelParams& p, std::span<const Sample> batch) {
  std::vector<const Sample*> ptrs(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) ptrs[i] = &batch[i];
  return batch_loss(p, std::span<const Sample* const>(ptrs));
}

void save_checkpoint(const ModelParams& p, const std::string& prefix) {
  {
    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("save_checkpoint: cannot open " + prefix + ".bin");
    bin.write(reinterpret_cast<const char*>(p.data.data()),
              static_cast<std::streamsize>(p.data.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("save_checkpoint: write failed");
  }
  nlohmann::json manifest = {
      {"schema_version", 1},
      {"dtype", "f64"},
      {"input", p.dims.input},
      {"hidden", p.dims.hidden},
      {"verbs", p.dims.vocab.verbs},
      {"nouns", p.dims.vocab.nouns},
      {"relu", p.dims.relu},
      {"count", p.data.size()},
      {"order", {"feat_w", "feat_b", "verb_w", "verb_b", "noun_w", "noun_b"}},
  };
  std::ofstream js(prefix + ".json");
  if (!js) throw std::runtime_error("save_checkpoint: cannot open " + prefix + ".json");
  js << manifest.dump(2) << '\n';
}

ModelParams load_checkpoint(const std::string& prefix) {
  std::ifstream js(prefix + ".json");
  if (!js) throw std::runtime_error("load_checkpoint: cannot open " + prefix + ".json");
  nlohmann::json manifest = nlohmann::json::parse(js);
  ModelDims dims;
  dims.input = manifest.at("input").get<int>();
  dims.hidden = manifest.at("hidden").get<int>();
  dims.vocab.verbs = manifest.at("verbs").get<int>();
  dims.vocab.nouns = manifest.at("nouns").get<int>();
  dims.relu = manifest.at("relu").get<bool>();
  ModelParams p(dims);
  if (manifest.at("count").get<std::size_t>() != p.data.size())
    throw std::runtime_error("load_checkpoint: manifest count does not match dims");
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("load_checkpoint: cannot open " + prefix + ".bin");
  bin.read(reinterpret_cast<char*>(p.data.data()),
           static_cast<std::streamsize>(p.data.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(p.data.size() * sizeof(double)))
    throw std::runtime_error("load_checkpoint: truncated blob " + prefix + ".bin");
  return p;
}

std::uint64_t params_digest(const ModelParams& p) { return digest_doubles(p.data); }

}  // namespace streamadapt
