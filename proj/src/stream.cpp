#include "streamadapt/stream.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace streamadapt {

using nlohmann::json;

std::vector<Batch> batchify(std::size_t n_samples, int batch_size) {
  if (batch_size <= 0) throw std::invalid_argument("batchify: batch_size must be >= 1");
  std::vector<Batch> out;
  const auto b = static_cast<std::size_t>(batch_size);
  out.reserve((n_samples + b - 1) / b);
  for (std::size_t begin = 0; begin < n_samples; begin += b) {
    Batch batch;
    batch.step = static_cast<int>(out.size());
    batch.begin = begin;
    batch.count = std::min(b, n_samples - begin);
    out.push_back(batch);
  }
  return out;
}

UserStream make_stream(std::string user_id, Vocab vocab, int batch_size,
                       std::vector<Sample> samples) {
  UserStream s;
  s.user_id = std::move(user_id);
  s.vocab = vocab;
  s.batch_size = batch_size;
  s.samples = std::move(samples);
  s.batches = batchify(s.samples.size(), batch_size);
  return s;
}

namespace {

struct PendingUser {
  std::string split;
  std::vector<Sample> samples;
};

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("stream file line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

StreamCollection load_streams(const std::string& path, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("load_streams: batch_size must be >= 1");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_streams: cannot open " + path);

  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) throw std::runtime_error("load_streams: empty file " + path);
  ++line_no;
  StreamCollection out;
  try {
    json header = json::parse(line);
    out.vocab.verbs = header.at("vocab").at("verbs").get<int>();
    out.vocab.nouns = header.at("vocab").at("nouns").get<int>();
    out.dim = header.at("dim").get<int>();
  } catch (const json::exception& e) {
    parse_error(line_no, std::string("bad header: ") + e.what());
  }
  if (out.vocab.verbs < 1 || out.vocab.nouns < 1 || out.dim < 1)
    parse_error(line_no, "header vocab/dim must be positive");

  // Preserve first-appearance order of users within each split.
  std::map<std::string, PendingUser> users;
  std::vector<std::string> order;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      parse_error(line_no, std::string("malformed record: ") + e.what());
    }
    std::string user_id, split;
    Sample s;
    try {
      user_id = rec.at("user_id").get<std::string>();
      split = rec.at("split").get<std::string>();
      s.t = rec.at("t").get<std::int64_t>();
      s.label.verb = rec.at("verb").get<int>();
      s.label.noun = rec.at("noun").get<int>();
      s.features = rec.at("features").get<std::vector<double>>();
    } catch (const json::exception& e) {
      parse_error(line_no, std::string("malformed record: ") + e.what());
    }
    if (split != "population" && split != "train" && split != "test")
      parse_error(line_no, "unknown split '" + split + "'");
    if (s.label.verb < 0 || s.label.verb >= out.vocab.verbs ||
        s.label.noun < 0 || s.label.noun >= out.vocab.nouns)
      parse_error(line_no, "label out of vocabulary");
    if (static_cast<int>(s.features.size()) != out.dim)
      parse_error(line_no, "inconsistent feature dimension");

    auto [it, inserted] = users.try_emplace(user_id);
    if (inserted) {
      it->second.split = split;
      order.push_back(user_id);
    } else if (it->second.split != split) {
      parse_error(line_no, "user '" + user_id + "' appears in multiple splits");
    }
    it->second.samples.push_back(std::move(s));
  }

  for (const auto& user_id : order) {
    auto& pending = users.at(user_id);
    std::stable_sort(pending.samples.begin(), pending.samples.end(),
                     [](const Sample& a, const Sample& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < pending.samples.size(); ++i) {
      if (pending.samples[i].t == pending.samples[i - 1].t)
        throw std::runtime_error("load_streams: duplicate (user, t) = (" + user_id + ", " +
                                 std::to_string(pending.samples[i].t) + ")");
    }
    UserStream stream = make_stream(user_id, out.vocab, batch_size, std::move(pending.samples));
    if (pending.split == "population")
      out.population.push_back(std::move(stream));
    else if (pending.split == "train")
      out.train_users.push_back(std::move(stream));
    else
      out.test_users.push_back(std::move(stream));
  }
  return out;
}

void save_streams(const StreamCollection& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_streams: cannot open " + path);
  json header = {{"vocab", {{"verbs", c.vocab.verbs}, {"nouns", c.vocab.nouns}}},
                 {"dim", c.dim}};
  out << header.dump() << '\n';
  auto write_split = [&](const std::vector<UserStream>& streams, const char* split) {
    for (const auto& s : streams) {
      for (const auto& sample : s.samples) {
        json rec = {{"user_id", s.user_id},
                    {"split", split},
                    {"t", sample.t},
                    {"verb", sample.label.verb},
                    {"noun", sample.label.noun},
                    {"features", sample.features}};
        out << rec.dump() << '\n';
      }
    }
  };
  write_split(c.population, "population");
  write_split(c.train_users, "train");
  write_split(c.test_users, "test");
  if (!out) throw std::runtime_error("save_streams: write failed for " + path);
}

std::vector<double> action_cdf(const UserStream& s) {
  if (s.samples.empty()) throw std::invalid_argument("action_cdf: empty stream");
  std::unordered_map<ActionLabel, std::size_t> counts;
  for (const auto& sample : s.samples) ++counts[sample.label];
  std::vector<std::pair<int, std::size_t>> hist;
  hist.reserve(counts.size());
  for (const auto& [label, n] : counts) hist.emplace_back(action_id(label, s.vocab), n);
  // High to low frequency; ties broken by action id for determinism.
  std::sort(hist.begin(), hist.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<double> cdf;
  cdf.reserve(hist.size());
  const double total = static_cast<double>(s.samples.size());
  std::size_t cum = 0;
  for (const auto& [id, n] : hist) {
    cum += n;
    cdf.push_back(static_cast<double>(cum) / total);
  }
  return cdf;
}

namespace {

std::set<std::int64_t> level_set(const UserStream& s, Level level) {
  std::set<std::int64_t> out;
  for (const auto& sample : s.samples) {
    switch (level) {
      case Level::Action: out.insert(action_id(sample.label, s.vocab)); break;
      case Level::Verb: out.insert(sample.label.verb); break;
      case Level::Noun: out.insert(sample.label.noun); break;
    }
  }
  return out;
}

}  // namespace

double label_iou(const UserStream& a, const UserStream& b, Level level) {
  if (!(a.vocab == b.vocab)) throw std::invalid_argument("label_iou: vocab mismatch");
  const auto sa = level_set(a, level);
  const auto sb = level_set(b, level);
  std::size_t inter = 0;
  for (auto v : sa) inter += sb.count(v);
  const std::size_t uni = sa.size() + sb.size() - inter;
  if (uni == 0) return 0.0;  // both streams empty
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<bool> correlation_mask(const UserStream& s) {
  if (s.samples.empty()) throw std::invalid_argument("correlation_mask: empty stream");
  std::vector<bool> mask(s.samples.size(), false);
  for (std::size_t i = 1; i < s.samples.size(); ++i)
    mask[i] = s.samples[i].label == s.samples[i - 1].label;
  return mask;
}

double exchangeable_repeat_probability(const UserStream& s) {
  std::unordered_map<ActionLabel, double> counts;
  for (const auto& sample : s.samples) counts[sample.label] += 1.0;
  const double n = static_cast<double>(s.samples.size());
  if (n < 2) return 0.0;
  double num = 0.0;
  for (const auto& [label, c] : counts) num += c * (c - 1.0);
  return num / (n * (n - 1.0));
}

}  // namespace streamadapt
