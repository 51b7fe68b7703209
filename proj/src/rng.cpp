#include "sfw/rng.hpp"

#include <cmath>

namespace sfw {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t splitmix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master;
  (void)splitmix64(state);
  state ^= 0x6a09e667f3bcc909ULL * (index + 1);
  return splitmix64(state);
}

RandomStream RandomStream::substream(std::uint64_t master, std::uint64_t index) {
  return RandomStream(splitmix_seed(master, index));
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double a, double b) { return a + (b - a) * uniform(); }

double RandomStream::normal() {
  // Box-Muller; u1 bumped away from 0 so the log stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Vec RandomStream::normal_vec(Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

long long RandomStream::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson: mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Knuth: count uniforms until their product drops below e^{-mean}.
    const double limit = std::exp(-mean);
    long long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993).
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    double u = uniform() - 0.5;
    double v = uniform();
    double us = 0.5 - std::abs(u);
    auto k = static_cast<long long>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
    if (us >= 0.07 && v <= v_r) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        static_cast<double>(k) * log_mean - mean - std::lgamma(static_cast<double>(k) + 1.0))
      return k;
  }
}

Vec RandomStream::uniform_in_ball(int dim, double radius) {
  Vec x(dim);
  for (;;) {
    for (int j = 0; j < dim; ++j) x[j] = uniform(-1.0, 1.0);
    if (x.squaredNorm() <= 1.0) return radius * x;
  }
}

std::vector<int> RandomStream::permutation(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<int>(next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

}  // namespace sfw
