#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace qim {

/// SplitMix64 finaliser. Used to turn (master seed, index) pairs into
/// decorrelated 64-bit seeds.
std::uint64_t mix64(std::uint64_t value);

/// Seed of the independent stream `index` under `master`. Streams derived
/// from different indices (or different masters) do not overlap in practice.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; uniform and normal transforms are
/// implemented here so that results do not depend on the standard library.
///
/// Normal variates use the Marsaglia polar method (version 1 of the
/// transform; changing it changes every experiment output).
class Rng {
 public:
  static constexpr int kNormalMethodVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal();

  /// Complex normal with independent parts of the given variance each.
  std::complex<double> complex_normal(double part_variance);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qim
