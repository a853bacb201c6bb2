// Stream data model: labeled feature-vector streams grouped per user,
// consumed as consecutive mini-batches, plus the stream statistics used
// throughout (action CDF, label IOU, correlation mask) and JSONL ingestion.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace streamadapt {

struct Vocab {
  int verbs = 0;
  int nouns = 0;
  bool operator==(const Vocab&) const = default;
  int actions() const { return verbs * nouns; }
};

// An action is the (verb, noun) pair; equality requires both components.
struct ActionLabel {
  int verb = -1;
  int noun = -1;
  bool operator==(const ActionLabel&) const = default;
};

// Packs a label into a single comparable id. Only valid for labels within
// the vocab. Factorization: id = noun * V + verb.
inline int action_id(const ActionLabel& a, const Vocab& v) {
  return a.noun * v.verbs + a.verb;
}
inline ActionLabel action_from_id(int id, const Vocab& v) {
  return {id % v.verbs, id / v.verbs};
}

struct Sample {
  std::int64_t t = 0;  // stream position, strictly increasing within a stream
  ActionLabel label;
  std::vector<double> features;
};

// Half-open range of consecutive samples within a stream.
struct Batch {
  int step = 0;
  std::size_t begin = 0;
  std::size_t count = 0;
};

// ceil(n/B) consecutive batches; the final one may be partial (kept, not
// dropped). Throws on B == 0.
std::vector<Batch> batchify(std::size_t n_samples, int batch_size);

struct UserStream {
  std::string user_id;
  Vocab vocab;
  int batch_size = 0;
  std::vector<Sample> samples;
  std::vector<Batch> batches;

  std::span<const Sample> batch_samples(const Batch& b) const {
    return {samples.data() + b.begin, b.count};
  }
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].features.size()); }
};

UserStream make_stream(std::string user_id, Vocab vocab, int batch_size,
                       std::vector<Sample> samples);

struct StreamCollection {
  Vocab vocab;
  int dim = 0;
  std::vector<UserStream> population;
  std::vector<UserStream> train_users;
  std::vector<UserStream> test_users;
};

// JSONL ingestion. First line is a header record {"vocab":{"verbs":V,
// "nouns":N},"dim":d}; every following line is one sample with fields
// user_id, split, t, verb, noun, features. Samples are grouped per user,
// sorted ascending by t, and batched. Malformed input reports the line
// number; label indices outside the vocab, inconsistent feature dimensions
// and duplicate (user, t) pairs are errors.
StreamCollection load_streams(const std::string& path, int batch_size);
void save_streams(const StreamCollection& c, const std::string& path);

enum class Level { Action, Verb, Noun };

// Cumulative fraction per distinct action, sorted from most to least
// frequent. Terminal value is 1 (up to rounding); length equals the number
// of distinct actions observed. Throws on an empty stream.
std::vector<double> action_cdf(const UserStream& s);

// Intersection-over-union of the distinct label sets of two streams at the
// given level. Both-empty unions are defined as 0.
double label_iou(const UserStream& a, const UserStream& b, Level level);

// mask[i] is true iff sample i has the same action as sample i-1, in sample
// order across batch boundaries; mask[0] is false. Batch-size invariant.
std::vector<bool> correlation_mask(const UserStream& s);

// Analytic probability that two adjacent samples share a label under a
// uniform random permutation of the stream: sum_a n_a(n_a-1) / (n(n-1)).
double exchangeable_repeat_probability(const UserStream& s);

}  // namespace streamadapt

template <>
struct std::hash<streamadapt::ActionLabel> {
  std::size_t operator()(const streamadapt::ActionLabel& a) const noexcept {
    return std::hash<std::uint64_t>{}(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a.verb)) << 32) |
        static_cast<std::uint32_t>(a.noun));
  }
};
