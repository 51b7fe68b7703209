#pragma once

#include <cstdint>
#include <random>

#include "sfw/types.hpp"

namespace sfw {

/// splitmix64 mixing step, used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Decorrelated seed for (master seed, substream index).
std::uint64_t splitmix_seed(std::uint64_t master, std::uint64_t index);

/// Seedable random stream with explicitly specified sampling algorithms so
/// that generated datasets are reproducible for a given seed:
///   engine   std::mt19937_64 (sequence fixed by the C++ standard)
///   uniform  53-bit mantissa draw in [0,1)
///   normal   Box-Muller (two uniforms per variate)
///   poisson  inversion by Knuth's product method for mean < 30,
///            Hormann's PTRS transformed rejection otherwise
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Stream for (master seed, substream index), decorrelated via splitmix64.
  static RandomStream substream(std::uint64_t master, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  double uniform();                           // [0,1)
  double uniform(double a, double b);         // [a,b)
  double normal();                            // standard normal
  Vec normal_vec(Eigen::Index n);
  long long poisson(double mean);

  /// Uniform point in the closed ball of the given radius (rejection in the
  /// bounding cube).
  Vec uniform_in_ball(int dim, double radius);

  /// Fisher-Yates shuffle of 0..n-1.
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sfw
