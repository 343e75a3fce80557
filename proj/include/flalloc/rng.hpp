#pragma once

#include <cstdint>
#include <random>

namespace flalloc {

/// Seedable generator whose output is identical on every platform.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// library distributions do not, so the uniform and normal transforms are
/// written out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  /// Box-Muller; the second variate of each pair is cached.
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a base seed with a stream index so derived streams do not overlap
/// with consecutive base seeds (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace flalloc
