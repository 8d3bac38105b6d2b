#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace clad {

// SplitMix64 generator with explicit bounded/normal draws. The standard
// <random> distributions are implementation-defined, which would break the
// bit-identical-across-toolchains reproducibility contract; this generator
// produces the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, bound); bound must be positive
  int below(int bound) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(next()) *
         static_cast<unsigned __int128>(static_cast<std::uint64_t>(bound))) >>
        64);
  }

  // standard normal via Box-Muller (two draws per value, no cache)
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (int i = static_cast<int>(values.size()) - 1; i > 0; --i) {
      int j = below(i + 1);
      std::swap(values[i], values[j]);
    }
  }

  // derive an independent stream (per tree, per fold, ...)
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return r.next();
  }

 private:
  std::uint64_t state_;
};

}  // namespace clad
