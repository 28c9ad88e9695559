#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ibg {

// Deterministic random stream. Only the raw mt19937_64 output is taken from
// the standard library (its sequence is pinned by the standard); uniform and
// normal transforms are done here so results do not depend on the libstdc++
// distribution implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal, Box-Muller
  double normal(double mean, double stddev);
  std::size_t index(std::size_t n);       // uniform in [0, n)

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.empty()) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[index(i + 1)]);
    }
  }

  std::vector<double> normal_vector(std::size_t n, double mean = 0.0, double stddev = 1.0);

  // Derives an independent stream, e.g. one per example id.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);
  static std::uint64_t hash_string(const std::string& s);

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ibg
