#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "sfw/measures.hpp"
#include "sfw/types.hpp"

namespace sfw {

enum class KernelVariant {
  Gaussian1D,
  LaplaceUnnormalized,
  LaplaceNormalized,
  Astigmatism,
  DoubleHelix,
  MaTirf,
};

const char* to_string(KernelVariant v);
KernelVariant kernel_variant_from_string(const std::string& name);

/// Declarative description of a measurement kernel.  Defaults for the 3-D
/// microscopy variants follow the simulation parameter set used throughout
/// (6.4 x 6.4 x 0.8 um volume, 64 x 64 detector, NA 1.49 optics at 0.66 um).
struct KernelSpec {
  KernelVariant variant = KernelVariant::Gaussian1D;

  /// Domain box upper bounds; size 1 for the 1-D variants, 3 otherwise.
  Vec box = point1d(1.0);

  // Gaussian1D
  double sigma = 0.05;        ///< width of the sampled Gaussian
  int detector_samples = 100; ///< number of 1-D detector samples

  // Laplace variants: decay-rate sample points, >= 0 and strictly increasing
  Vec laplace_s;

  // Shared 3-D parameters
  int n1 = 64;               ///< detector rows (x1)
  int n2 = 64;               ///< detector columns (x2)
  int planes = 4;            ///< number of focal planes / TIRF angles (K)
  double na = 1.49;          ///< objective numerical aperture
  double n_i = 1.515;        ///< refractive index, incident medium
  double n_t = 1.333;        ///< refractive index, transmitted medium
  double lambda_exc = 0.66;  ///< excitation wavelength (um)
  double psf_sigma = 0.42 * 0.66 / 1.49;  ///< lateral PSF sigma for DH / MA-TIRF

  // Astigmatism
  double astig_sigma0 = 0.42 * 0.66 / 1.49;
  double astig_alpha = -0.79;
  double astig_beta = 0.2;
  double astig_d = 0.66 * 1.515 / (2.0 * 1.49 * 1.49);

  // Double helix
  double helix_omega = 1.0;                     ///< lobe separation (um)
  double helix_theta_speed = 0.3846 * M_PI;     ///< rotation speed (rad/um)

  // MA-TIRF: when true, apply a square root to the sine term of the
  // penetration-depth formula (sensitivity-study variant; default follows
  // s = 4 pi n_i / lambda (sin^2 a - sin^2 a_c) as printed).
  bool tirf_sqrt_depth = false;

  int dim() const { return static_cast<int>(box.size()); }
  /// Observation dimension M for this spec.
  int obs_dim() const;
  void validate() const;

  static KernelSpec gaussian1d(double sigma = 0.05, int samples = 100, double b = 1.0);
  static KernelSpec laplace(Vec s, bool normalized, double b);
  static KernelSpec astigmatism(int planes = 4);
  static KernelSpec double_helix(int planes = 4);
  static KernelSpec ma_tirf(int planes = 4);
};

/// Uniform decay-rate samples s_k = k * (scale / sqrt(K)), k = 0..K-1: the
/// spacing shrinks and the range grows with K, so the sampled kernel
/// approaches the continuous Laplace transform.
Vec uniform_laplace_samples(int count, double scale = 2.0);

/// Atom matrix Phi_x (and optionally the stacked derivative blocks of
/// Gamma_x = [Phi_x | d_1 Phi_x | ... | d_d Phi_x]).
struct AtomMatrix {
  Mat phi;   ///< M x N, column i = phi(x_i)
  Mat dphi;  ///< M x (N*d), derivative blocks ordered by dimension; may be empty
  bool duplicate_positions = false;

  /// [phi | dphi], the matrix of Gamma_x.
  Mat joint() const;
};

class Kernel {
 public:
  virtual ~Kernel() = default;

  const KernelSpec& spec() const { return spec_; }
  const Box& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  int obs_dim() const { return obs_dim_; }

  /// phi(x); x must lie in the domain box.
  Vec phi(const Vec& x) const;
  /// Jacobian of phi, M x d; x must lie strictly inside the domain box.
  Mat grad_phi(const Vec& x) const;

  /// <phi(x), phi(x')>.
  virtual double correlation(const Vec& x, const Vec& xp) const;

  /// 1-D variants only: M x (order+1) matrix [phi(x), phi'(x), ..., phi^(order)(x)].
  virtual Mat derivative_stack(double x, int order) const;

  /// Values of <phi(x), p> on the tensor grid spanned by the per-axis node
  /// vectors, flattened with the last axis fastest.  The default loops over
  /// nodes; 3-D kernels override with a separable fast path.
  virtual Vec adjoint_on_grid(const Vec& p, const std::vector<Vec>& axes) const;

  /// Per-axis node counts of the default certificate search grid.
  virtual std::vector<int> default_grid() const = 0;

 protected:
  explicit Kernel(KernelSpec spec)
      : spec_(std::move(spec)), domain_(spec_.box), obs_dim_(spec_.obs_dim()) {}

  virtual void do_phi(const Vec& x, Vec& out) const = 0;
  virtual void do_grad_phi(const Vec& x, Mat& out) const = 0;

  void require_in_domain(const Vec& x) const;

  KernelSpec spec_;
  Box domain_;
  int obs_dim_;
};

std::shared_ptr<const Kernel> make_kernel(const KernelSpec& spec);

/// Phi m = sum_i a_i phi(x_i).
Vec apply_forward(const Kernel& k, const DiscreteMeasure& m);

/// (Phi* p)(x) = <phi(x), p>.
double apply_adjoint(const Kernel& k, const Vec& p, const Vec& x);

AtomMatrix atom_matrices(const Kernel& k, const std::vector<Vec>& positions,
                         bool with_derivatives);

struct TirfGeometry {
  Vec angles_deg;  ///< incident angles, degrees
  Vec depths;      ///< penetration decay rates s_k (1/um)
};

/// Incident angles spaced linearly from the critical angle to the maximal
/// aperture angle, and the matching evanescent decay rates.
TirfGeometry tirf_angles_and_depths(const KernelSpec& spec);

/// (sigma_1(z), sigma_2(z)) of the astigmatic PSF.
std::pair<double, double> astig_sigmas(const KernelSpec& spec, double z);

/// Lateral offsets (r_1(z), r_2(z)) of the double-helix lobe centers.
std::pair<double, double> helix_offsets(const KernelSpec& spec, double z);

}  // namespace sfw
