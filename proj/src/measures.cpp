#include "sfw/measures.hpp"

#include <cmath>
#include <limits>

namespace sfw {

double tv_norm(const DiscreteMeasure& m) {
  double total = 0.0;
  for (const auto& s : m.spikes()) total += std::abs(s.amplitude);
  return total;
}

DiscreteMeasure prune(const DiscreteMeasure& m, double eps_a) {
  if (eps_a < 0.0) throw std::invalid_argument("prune: eps_a must be >= 0");
  std::vector<Spike> kept;
  kept.reserve(m.spikes().size());
  for (const auto& s : m.spikes())
    if (std::abs(s.amplitude) > eps_a) kept.push_back(s);
  return DiscreteMeasure(std::move(kept));
}

double min_separation(const DiscreteMeasure& m) {
  if (m.size() < 2)
    throw std::invalid_argument("min_separation: needs at least two spikes");
  double best = std::numeric_limits<double>::infinity();
  const auto& spikes = m.spikes();
  for (std::size_t i = 0; i < spikes.size(); ++i)
    for (std::size_t j = i + 1; j < spikes.size(); ++j)
      best = std::min(best, (spikes[i].position - spikes[j].position).norm());
  return best;
}

}  // namespace sfw
