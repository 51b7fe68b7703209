#pragma once

#include <cstdint>
#include <vector>

#include "sfw/kernels.hpp"
#include "sfw/measures.hpp"
#include "sfw/rng.hpp"

namespace sfw {

/// Cubic space curve c0 + c1 t + c2 t^2 + c3 t^3, t in [0,1].
struct CubicCurve {
  Mat coeffs;  ///< d x 4

  Vec at(double t) const {
    return coeffs.col(0) + t * (coeffs.col(1) + t * (coeffs.col(2) + t * coeffs.col(3)));
  }
};

/// The four filament curves used for the default phantom, spanning the
/// 6.4 x 6.4 x 0.8 um volume.  The coefficients are artifact-defined (listed
/// in the README); they are chosen to stay inside the box and cross each
/// other laterally like a microtubule network.
std::vector<CubicCurve> default_phantom_curves();

struct Phantom {
  Mat points;  ///< n_total x d molecule positions
  std::uint64_t seed = 0;
};

/// Sample n_total molecules: pick a curve uniformly, draw a point uniformly
/// by arc length (via a fine piecewise-linear reparametrization), then jitter
/// uniformly in a ball of the given radius.  Deterministic per seed.
/// Throws if any curve leaves the domain box.
Phantom generate_phantom(const std::vector<CubicCurve>& curves, const Box& domain, int n_total,
                         double jitter_radius, std::uint64_t seed);

struct ActivationSet {
  int frame = 0;
  DiscreteMeasure measure;
};

/// Shuffle the phantom molecules with a random permutation and split them
/// into frames of exactly n_per_frame molecules; amplitudes are drawn
/// uniformly in [1, 1.5].  Molecules beyond the last full frame are dropped.
std::vector<ActivationSet> partition_activations(const Phantom& phantom, int n_per_frame,
                                                 std::uint64_t seed);

/// Noiseless acquisition y0 = Phi m0.
Vec render_noiseless(const Kernel& kernel, const DiscreteMeasure& m0);

struct NoiseConfig {
  double n_photon = 1000.0;     ///< maximal photon budget per pixel
  double gauss_variance = 1e-4; ///< readout-noise variance
  std::uint64_t seed = 0;
};

struct NoisyFrame {
  Vec y;
  double scale = 1.0;  ///< factor applied to y0 before Poisson sampling
};

/// Scale y0 so the max over pixels of the sum over planes equals n_photon,
/// replace each entry by a Poisson draw with that mean, then add Gaussian
/// readout noise.  Deterministic per seed.
NoisyFrame apply_noise(const Vec& y0, int pixels, int planes, const NoiseConfig& cfg);

}  // namespace sfw
