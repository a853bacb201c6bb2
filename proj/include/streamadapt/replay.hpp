// Bounded replay memories. Four storage policies decide which observed
// samples are kept:
//   Fifo       - the M most recent samples
//   Reservoir  - classic reservoir sampling (inclusion probability M/t)
//   HybridCbrs - class-balanced reservoir sampling over per-action
//                sub-stores that falls back to plain reservoir sampling
//                once the number of observed classes reaches M
//   Full       - unbounded, stores everything
// Retrieval is uniform over all stored samples, without replacement.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "streamadapt/stream.hpp"

namespace streamadapt {

enum class StoragePolicy { Fifo, Reservoir, HybridCbrs, Full };

StoragePolicy storage_policy_from_string(const std::string& s);
std::string to_string(StoragePolicy p);

class ReplayMemory {
 public:
  // capacity is ignored for Full.
  ReplayMemory(StoragePolicy policy, std::size_t capacity, std::uint64_t seed);

  void store(const Sample& s);

  // min(k, size()) samples drawn uniformly over all stored samples, without
  // replacement. Empty memory yields an empty list.
  std::vector<Sample> draw(std::size_t k);

  std::size_t size() const { return stored_.size(); }
  bool empty() const { return stored_.empty(); }
  StoragePolicy policy() const { return policy_; }
  std::size_t capacity() const { return capacity_; }

  // Stored count per class (class identity = the full action pair).
  std::unordered_map<ActionLabel, std::size_t> class_counts() const;

  // Debug dump: one JSONL record per stored sample plus a trailing
  // class-count summary record.
  void dump_jsonl(const std::string& path, const Vocab& vocab) const;

 private:
  void store_fifo(const Sample& s);
  void store_reservoir(const Sample& s);
  void store_hybrid_cbrs(const Sample& s);
  void replace_global_reservoir(const Sample& s);

  // Slot bookkeeping for the per-class sub-stores: each stored sample lives
  // in stored_[i]; slots_of_[c] lists the indices belonging to class c.
  void remove_slot(std::size_t idx);
  std::size_t append_slot(const Sample& s);

  StoragePolicy policy_;
  std::size_t capacity_;
  std::vector<Sample> stored_;
  std::vector<ActionLabel> slot_class_;
  std::unordered_map<ActionLabel, std::vector<std::size_t>> slots_of_;
  std::unordered_map<ActionLabel, std::uint64_t> observed_per_class_;  // n_c
  std::unordered_set<ActionLabel> observed_classes_;                   // C
  std::unordered_set<ActionLabel> filled_classes_;                     // F
  std::uint64_t seen_ = 0;                                             // t for global reservoir
  std::mt19937_64 rng_;
};

}  // namespace streamadapt
