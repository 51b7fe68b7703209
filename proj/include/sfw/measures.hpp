#pragma once

#include <vector>

#include "sfw/types.hpp"

namespace sfw {

struct Spike {
  double amplitude = 0.0;
  Vec position;
};

/// Finite sum of weighted Dirac masses.  Spike order is insertion order; no
/// canonical sorting is applied.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(std::vector<Spike> spikes) : spikes_(std::move(spikes)) {}

  static DiscreteMeasure single(double amplitude, Vec position) {
    DiscreteMeasure m;
    m.add(amplitude, std::move(position));
    return m;
  }

  int size() const { return static_cast<int>(spikes_.size()); }
  bool empty() const { return spikes_.empty(); }
  int dim() const { return spikes_.empty() ? 0 : static_cast<int>(spikes_.front().position.size()); }

  const std::vector<Spike>& spikes() const { return spikes_; }
  const Spike& spike(int i) const { return spikes_[static_cast<std::size_t>(i)]; }

  void add(double amplitude, Vec position) { spikes_.push_back({amplitude, std::move(position)}); }

  Vec amplitudes() const {
    Vec a(size());
    for (int i = 0; i < size(); ++i) a[i] = spikes_[static_cast<std::size_t>(i)].amplitude;
    return a;
  }

  /// N x d matrix of spike positions.
  Mat positions() const {
    Mat x(size(), dim());
    for (int i = 0; i < size(); ++i) x.row(i) = spikes_[static_cast<std::size_t>(i)].position.transpose();
    return x;
  }

  std::vector<Vec> position_list() const {
    std::vector<Vec> xs;
    xs.reserve(spikes_.size());
    for (const auto& s : spikes_) xs.push_back(s.position);
    return xs;
  }

 private:
  std::vector<Spike> spikes_;
};

/// Total variation norm: sum of absolute amplitudes.
double tv_norm(const DiscreteMeasure& m);

/// Remove all spikes with |a_i| <= eps_a, preserving order of the survivors.
DiscreteMeasure prune(const DiscreteMeasure& m, double eps_a);

/// Minimum pairwise Euclidean distance between spike positions.
/// Requires at least two spikes.
double min_separation(const DiscreteMeasure& m);

}  // namespace sfw
