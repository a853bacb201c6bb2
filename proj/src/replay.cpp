#include "streamadapt/replay.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace streamadapt {

StoragePolicy storage_policy_from_string(const std::string& s) {
  if (s == "fifo") return StoragePolicy::Fifo;
  if (s == "reservoir") return StoragePolicy::Reservoir;
  if (s == "hybrid_cbrs") return StoragePolicy::HybridCbrs;
  if (s == "full") return StoragePolicy::Full;
  throw std::invalid_argument("unknown storage policy '" + s + "'");
}

std::string to_string(StoragePolicy p) {
  switch (p) {
    case StoragePolicy::Fifo: return "fifo";
    case StoragePolicy::Reservoir: return "reservoir";
    case StoragePolicy::HybridCbrs: return "hybrid_cbrs";
    case StoragePolicy::Full: return "full";
  }
  return "?";
}

ReplayMemory::ReplayMemory(StoragePolicy policy, std::size_t capacity, std::uint64_t seed)
    : policy_(policy), capacity_(capacity), rng_(seed) {
  if (policy != StoragePolicy::Full && capacity == 0)
    throw std::invalid_argument("ReplayMemory: capacity must be >= 1");
}

void ReplayMemory::store(const Sample& s) {
  ++seen_;
  ++observed_per_class_[s.label];
  observed_classes_.insert(s.label);
  switch (policy_) {
    case StoragePolicy::Full: stored_.push_back(s); break;
    case StoragePolicy::Fifo: store_fifo(s); break;
    case StoragePolicy::Reservoir: store_reservoir(s); break;
    case StoragePolicy::HybridCbrs: store_hybrid_cbrs(s); break;
  }
}

void ReplayMemory::store_fifo(const Sample& s) {
  stored_.push_back(s);
  if (stored_.size() > capacity_) stored_.erase(stored_.begin());
}

void ReplayMemory::store_reservoir(const Sample& s) {
  if (stored_.size() < capacity_) {
    stored_.push_back(s);
    return;
  }
  std::uniform_int_distribution<std::uint64_t> pick(0, seen_ - 1);
  const std::uint64_t j = pick(rng_);
  if (j < capacity_) stored_[static_cast<std::size_t>(j)] = s;
}

std::size_t ReplayMemory::append_slot(const Sample& s) {
  stored_.push_back(s);
  slot_class_.push_back(s.label);
  const std::size_t idx = stored_.size() - 1;
  slots_of_[s.label].push_back(idx);
  return idx;
}

void ReplayMemory::remove_slot(std::size_t idx) {
  auto& own = slots_of_.at(slot_class_[idx]);
  own.erase(std::find(own.begin(), own.end(), idx));
  const std::size_t last = stored_.size() - 1;
  if (idx != last) {
    stored_[idx] = std::move(stored_[last]);
    auto& moved = slots_of_.at(slot_class_[last]);
    *std::find(moved.begin(), moved.end(), last) = idx;
    slot_class_[idx] = slot_class_[last];
  }
  stored_.pop_back();
  slot_class_.pop_back();
}

void ReplayMemory::replace_global_reservoir(const Sample& s) {
  // Memory is full here; classic replacement with inclusion probability M/t.
  std::uniform_int_distribution<std::uint64_t> pick(0, seen_ - 1);
  const std::uint64_t j = pick(rng_);
  if (j >= capacity_) return;
  const auto idx = static_cast<std::size_t>(j);
  auto& old = slots_of_.at(slot_class_[idx]);
  old.erase(std::find(old.begin(), old.end(), idx));
  stored_[idx] = s;
  slot_class_[idx] = s.label;
  slots_of_[s.label].push_back(idx);
}

void ReplayMemory::store_hybrid_cbrs(const Sample& s) {
  if (stored_.size() < capacity_) {  // fill phase
    append_slot(s);
    return;
  }
  if (observed_classes_.size() >= capacity_) {
    // More observed classes than memory slots: class balancing is moot,
    // switch to reservoir sampling agnostic to conditionals.
    replace_global_reservoir(s);
    return;
  }
  // Largest conditional store becomes (or stays) "filled". Ties prefer the
  // incoming class to avoid ping-pong evictions, otherwise break uniformly.
  std::size_t max_count = 0;
  for (const auto& [cls, slots] : slots_of_) max_count = std::max(max_count, slots.size());
  ActionLabel largest;
  const auto incoming_it = slots_of_.find(s.label);
  if (incoming_it != slots_of_.end() && incoming_it->second.size() == max_count) {
    largest = s.label;
  } else {
    std::vector<ActionLabel> maxima;
    for (const auto& [cls, slots] : slots_of_)
      if (slots.size() == max_count) maxima.push_back(cls);
    std::sort(maxima.begin(), maxima.end(), [](const ActionLabel& a, const ActionLabel& b) {
      return a.verb != b.verb ? a.verb < b.verb : a.noun < b.noun;
    });
    std::uniform_int_distribution<std::size_t> pick(0, maxima.size() - 1);
    largest = maxima[pick(rng_)];
  }
  filled_classes_.insert(largest);

  if (!filled_classes_.contains(s.label)) {
    // Conditional memory not filled: evict from the largest class, keep s.
    auto& victims = slots_of_.at(largest);
    std::uniform_int_distribution<std::size_t> pick(0, victims.size() - 1);
    remove_slot(victims[pick(rng_)]);
    append_slot(s);
  } else {
    // Conditional reservoir over this class, n_c as its time counter.
    const std::uint64_t n_c = observed_per_class_.at(s.label);
    auto& own = slots_of_.at(s.label);
    if (own.empty()) return;
    std::uniform_int_distribution<std::uint64_t> pick(0, n_c - 1);
    const std::uint64_t j = pick(rng_);
    if (j < own.size()) stored_[own[static_cast<std::size_t>(j)]] = s;
  }
}

std::vector<Sample> ReplayMemory::draw(std::size_t k) {
  const std::size_t n = std::min(k, stored_.size());
  std::vector<Sample> out;
  if (n == 0) return out;
  std::vector<std::size_t> idx(stored_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng_)]);
    out.push_back(stored_[idx[i]]);
  }
  return out;
}

std::unordered_map<ActionLabel, std::size_t> ReplayMemory::class_counts() const {
  std::unordered_map<ActionLabel, std::size_t> counts;
  for (const auto& s : stored_) ++counts[s.label];
  return counts;
}

void ReplayMemory::dump_jsonl(const std::string& path, const Vocab& vocab) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_jsonl: cannot open " + path);
  for (const auto& s : stored_) {
    nlohmann::json rec = {{"t", s.t},
                          {"verb", s.label.verb},
                          {"noun", s.label.noun},
                          {"features", s.features}};
    out << rec.dump() << '\n';
  }
  nlohmann::json summary;
  summary["policy"] = to_string(policy_);
  summary["capacity"] = policy_ == StoragePolicy::Full ? 0 : capacity_;
  summary["size"] = stored_.size();
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [label, n] : class_counts())
    counts[std::to_string(action_id(label, vocab))] = n;
  summary["class_counts"] = counts;
  out << summary.dump() << '\n';
}

}  // namespace streamadapt
