// Shared low-level utilities: seed derivation, content digests, small math.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace streamadapt {

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic sub-seed: mixes an experiment seed with a purpose tag and an
// optional identifier (user id, action id, ...). All randomness in the
// project flows through this so results are independent of execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::string_view id = {}) {
  std::uint64_t h = fnv1a64(tag);
  h = fnv1a64(id, h);
  return splitmix64(seed ^ h);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view tag,
                                std::string_view id = {}) {
  return std::mt19937_64(derive_seed(seed, tag, id));
}

inline std::uint64_t digest_doubles(const std::vector<double>& v,
                                    std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(v.data(), v.size() * sizeof(double), h);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

// Arithmetic mean with standard error (sample stddev, n-1 denominator).
// n == 1 yields se = 0.
inline MeanSe mean_se(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_se: empty input");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0, 1};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(xs.size())), xs.size()};
}

}  // namespace streamadapt
