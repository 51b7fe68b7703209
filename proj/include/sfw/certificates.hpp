#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sfw/kernels.hpp"
#include "sfw/measures.hpp"

namespace sfw {

enum class CertificateKind { EtaLambda, EtaV, EtaW };

const char* to_string(CertificateKind k);

/// Scalar field eta(x) = <phi(x), p> for a coefficient vector p in
/// observation space.  Immutable; evaluation is pure.
class Certificate {
 public:
  Certificate(CertificateKind kind, std::shared_ptr<const Kernel> kernel, Vec p,
              double condition_number = 0.0, int eta_w_spikes = 0)
      : kind_(kind),
        kernel_(std::move(kernel)),
        p_(std::move(p)),
        condition_number_(condition_number),
        eta_w_spikes_(eta_w_spikes) {}

  double operator()(const Vec& x) const { return apply_adjoint(*kernel_, p_, x); }
  double value1d(double x) const { return (*this)(point1d(x)); }

  /// Gradient of eta at x: grad_phi(x)^T p.
  Vec gradient(const Vec& x) const { return kernel_->grad_phi(x).transpose() * p_; }

  /// 1-D variants: analytic k-th derivative of eta at x.
  double derivative(double x, int order) const {
    return kernel_->derivative_stack(x, order).col(order).dot(p_);
  }

  Vec on_grid(const std::vector<Vec>& axes) const { return kernel_->adjoint_on_grid(p_, axes); }

  CertificateKind kind() const { return kind_; }
  const Vec& coefficients() const { return p_; }
  double condition_number() const { return condition_number_; }
  const Kernel& kernel() const { return *kernel_; }
  std::shared_ptr<const Kernel> kernel_ptr() const { return kernel_; }
  /// For EtaW: the spike count N the certificate was built for (2N-1
  /// vanishing derivatives); 0 otherwise.
  int eta_w_spikes() const { return eta_w_spikes_; }

 private:
  CertificateKind kind_;
  std::shared_ptr<const Kernel> kernel_;
  Vec p_;
  double condition_number_;
  int eta_w_spikes_;
};

/// eta = Phi^*(y - Phi m) / lambda.
Certificate eta_lambda(std::shared_ptr<const Kernel> kernel, const Vec& y, double lambda,
                       const DiscreteMeasure& m);

/// Vanishing-derivatives precertificate: minimum-norm p with
/// eta(x_{0,i}) = sign(a_{0,i}) and grad eta(x_{0,i}) = 0.
Certificate eta_v(std::shared_ptr<const Kernel> kernel, const DiscreteMeasure& m0);

/// 2N-1 vanishing derivatives precertificate at the cluster point x_c
/// (1-D kernels only): minimum-norm p with eta^{(k)}(x_c) = delta_{0,k},
/// k = 0..2N-1.
Certificate eta_w(std::shared_ptr<const Kernel> kernel, double x_c, int n_spikes);

/// Closed-form eta_W for the continuous-mu Laplace operators:
///   unnormalized:  1 - ((x-x_c)/(x+x_c))^{2N}
///   normalized:    2 sqrt(x x_c)/(x+x_c) * sum_{k<N} (2k)!/(2^{2k} k!^2) u^{2k}
double closed_form_eta_w_laplace(double x, double x_c, int n_spikes, bool normalized);

/// Correlation kernel of the continuous-mu Laplace operators and its mixed
/// partial derivatives, from the analytic moments
/// int s^n e^{-(x+x')s} ds = n! / (x+x')^{n+1}.
class LaplaceCorrelation {
 public:
  explicit LaplaceCorrelation(bool normalized) : normalized_(normalized) {}
  bool normalized() const { return normalized_; }
  double operator()(double x, double xp) const { return partial(0, 0, x, xp); }
  /// d_1^i d_2^j C(x, x').
  double partial(int i, int j, double x, double xp) const;

 private:
  bool normalized_;
};

/// eta_W for a continuous-mu Laplace operator, built by the linear-algebra
/// route: eta(x) = sum_k alpha_k d_2^k C(x, x_c) with the alpha solving the
/// interpolation system on the moment Gram matrix (solved in long double).
class ContinuousEtaW {
 public:
  ContinuousEtaW(const LaplaceCorrelation& corr, double x_c, int n_spikes);

  double operator()(double x) const;
  /// Analytic derivative of any order (d_1^order of the correlation sum).
  double derivative(double x, int order) const;

  double x_c() const { return x_c_; }
  int n_spikes() const { return n_spikes_; }
  double condition_number() const { return condition_number_; }
  const std::vector<double>& coefficients() const { return alpha_; }

 private:
  LaplaceCorrelation corr_;
  double x_c_;
  int n_spikes_;
  std::vector<double> alpha_;
  double condition_number_;
};

struct NondegeneracyOptions {
  double exclusion_steps = 2.0;  ///< off-support sweep excludes +-k grid steps around spikes
  double hessian_step = 1e-4;    ///< central-difference step for D^2 eta
  double det_floor = 1e-8;       ///< |det| below this counts as degenerate
  double sup_margin = 1e-6;      ///< off-support sup must stay below 1 - 0 (reported, not enforced)
};

struct NondegeneracyReport {
  double max_abs_off_support = 0.0;
  Vec argmax_off_support;
  std::vector<double> hessian_dets;
  std::optional<double> eta_deriv_2n;  ///< 2N-th derivative at x_c, EtaW only
  bool nondegenerate = false;
  int grid_per_axis = 0;
  NondegeneracyOptions options;
};

/// Report-only numerical nondegeneracy check on a generic scalar field.  An
/// optional fast grid evaluator may be supplied (values flattened with the
/// last axis fastest, matching Kernel::adjoint_on_grid).
NondegeneracyReport check_nondegeneracy(
    const std::function<double(const Vec&)>& eta, const Box& domain,
    const std::vector<Vec>& spikes, int grid_per_axis,
    const NondegeneracyOptions& opt = {},
    const std::function<Vec(const std::vector<Vec>&)>& grid_eval = nullptr);

NondegeneracyReport check_nondegeneracy(const Certificate& cert,
                                        const std::vector<Vec>& spikes, int grid_per_axis,
                                        const NondegeneracyOptions& opt = {});

NondegeneracyReport check_nondegeneracy(const ContinuousEtaW& eta, const Box& domain,
                                        int grid_per_axis,
                                        const NondegeneracyOptions& opt = {});

}  // namespace sfw
