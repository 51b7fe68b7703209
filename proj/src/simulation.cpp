#include "sfw/simulation.hpp"

#include <cmath>

namespace sfw {

std::vector<CubicCurve> default_phantom_curves() {
  auto curve = [](std::initializer_list<double> c) {
    CubicCurve k;
    k.coeffs.resize(3, 4);
    auto it = c.begin();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) k.coeffs(i, j) = *it++;
    return k;
  };
  // Rows are (x1; x2; x3) coefficient quadruples (c0, c1, c2, c3).
  return {
      curve({0.4, 5.6, 0.0, 0.0, /**/ 0.6, 1.2, 7.0, -4.6, /**/ 0.10, 0.9, -0.65, 0.0}),
      curve({6.0, -4.2, -1.4, 0.0, /**/ 0.4, 8.0, -9.4, 4.6, /**/ 0.70, -1.1, 0.75, 0.0}),
      curve({0.3, 1.0, 8.2, -4.3, /**/ 6.0, -5.4, 0.0, 0.0, /**/ 0.05, 0.35, 0.0, 0.0}),
      curve({5.9, -0.6, -9.6, 5.4, /**/ 5.9, -2.0, -6.8, 4.2, /**/ 0.45, 0.6, -0.9, 0.3}),
  };
}

namespace {

struct ArcTable {
  std::vector<Vec> nodes;
  std::vector<double> cumulative;  // cumulative[i] = length up to node i
  double total = 0.0;
};

ArcTable tabulate(const CubicCurve& curve, const Box& domain, int steps) {
  ArcTable t;
  t.nodes.reserve(static_cast<std::size_t>(steps) + 1);
  t.cumulative.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    Vec x = curve.at(static_cast<double>(i) / steps);
    if (!domain.contains(x))
      throw std::invalid_argument("generate_phantom: curve leaves the domain box");
    if (i == 0) {
      t.cumulative.push_back(0.0);
    } else {
      t.total += (x - t.nodes.back()).norm();
      t.cumulative.push_back(t.total);
    }
    t.nodes.push_back(std::move(x));
  }
  return t;
}

Vec point_at_arclength(const ArcTable& t, double s) {
  auto it = std::lower_bound(t.cumulative.begin(), t.cumulative.end(), s);
  if (it == t.cumulative.begin()) return t.nodes.front();
  if (it == t.cumulative.end()) return t.nodes.back();
  const auto hi = static_cast<std::size_t>(it - t.cumulative.begin());
  const double seg = t.cumulative[hi] - t.cumulative[hi - 1];
  const double w = seg > 0.0 ? (s - t.cumulative[hi - 1]) / seg : 0.0;
  return t.nodes[hi - 1] + w * (t.nodes[hi] - t.nodes[hi - 1]);
}

}  // namespace

Phantom generate_phantom(const std::vector<CubicCurve>& curves, const Box& domain, int n_total,
                         double jitter_radius, std::uint64_t seed) {
  if (n_total < 1) throw std::invalid_argument("generate_phantom: n_total must be >= 1");
  if (curves.empty()) throw std::invalid_argument("generate_phantom: no curves given");
  if (jitter_radius < 0.0) throw std::invalid_argument("generate_phantom: negative jitter radius");

  const int kSteps = 2048;
  std::vector<ArcTable> tables;
  tables.reserve(curves.size());
  double total = 0.0;
  for (const auto& c : curves) {
    tables.push_back(tabulate(c, domain, kSteps));
    total += tables.back().total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("generate_phantom: curves have zero length");

  RandomStream rng(seed);
  Phantom phantom;
  phantom.seed = seed;
  phantom.points.resize(n_total, domain.dim());
  for (int i = 0; i < n_total; ++i) {
    // Curve chosen with probability proportional to arc length, so points are
    // uniform along the whole filament network.
    double pick = rng.uniform() * total;
    std::size_t c = 0;
    while (c + 1 < tables.size() && pick > tables[c].total) {
      pick -= tables[c].total;
      ++c;
    }
    Vec x = point_at_arclength(tables[c], pick);
    if (jitter_radius > 0.0) x += rng.uniform_in_ball(domain.dim(), jitter_radius);
    phantom.points.row(i) = domain.clamp(x).transpose();
  }
  return phantom;
}

std::vector<ActivationSet> partition_activations(const Phantom& phantom, int n_per_frame,
                                                 std::uint64_t seed) {
  const int total = static_cast<int>(phantom.points.rows());
  if (n_per_frame < 1)
    throw std::invalid_argument("partition_activations: n_per_frame must be >= 1");
  if (n_per_frame > total)
    throw std::invalid_argument("partition_activations: n_per_frame exceeds the molecule count");
  const int n_frames = total / n_per_frame;  // excess molecules are dropped

  RandomStream rng(seed);
  std::vector<int> perm = rng.permutation(total);
  std::vector<ActivationSet> frames;
  frames.reserve(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    ActivationSet set;
    set.frame = f;
    for (int i = 0; i < n_per_frame; ++i) {
      const int idx = perm[static_cast<std::size_t>(f * n_per_frame + i)];
      set.measure.add(rng.uniform(1.0, 1.5), phantom.points.row(idx).transpose());
    }
    frames.push_back(std::move(set));
  }
  return frames;
}

Vec render_noiseless(const Kernel& kernel, const DiscreteMeasure& m0) {
  return apply_forward(kernel, m0);
}

NoisyFrame apply_noise(const Vec& y0, int pixels, int planes, const NoiseConfig& cfg) {
  if (!(cfg.n_photon > 0.0)) throw std::invalid_argument("apply_noise: n_photon must be positive");
  if (cfg.gauss_variance < 0.0) throw std::invalid_argument("apply_noise: negative variance");
  if (y0.size() != static_cast<Eigen::Index>(pixels) * planes)
    throw std::invalid_argument("apply_noise: size does not match pixels * planes");
  if (y0.minCoeff() < 0.0) throw std::invalid_argument("apply_noise: negative intensities");

  double max_sum = 0.0;
  for (int i = 0; i < pixels; ++i) {
    double s = 0.0;
    for (int k = 0; k < planes; ++k) s += y0[static_cast<Eigen::Index>(k) * pixels + i];
    max_sum = std::max(max_sum, s);
  }
  if (!(max_sum > 0.0)) throw std::invalid_argument("apply_noise: frame is identically zero");

  NoisyFrame out;
  out.scale = cfg.n_photon / max_sum;
  out.y.resize(y0.size());
  RandomStream rng(cfg.seed);
  const double sigma = std::sqrt(cfg.gauss_variance);
  for (Eigen::Index i = 0; i < y0.size(); ++i)
    out.y[i] = static_cast<double>(rng.poisson(out.scale * y0[i]));
  for (Eigen::Index i = 0; i < y0.size(); ++i) out.y[i] += sigma * rng.normal();
  return out;
}

}  // namespace sfw
