#pragma once

#include <vector>

#include "sfw/certificates.hpp"
#include "sfw/kernels.hpp"

namespace sfw {

enum class SignMode { Free, NonNegative };

struct LassoConfig {
  int max_iters = 20000;
  double tol = 1e-10;  ///< relative objective-change tolerance
  SignMode sign_mode = SignMode::Free;
};

struct LassoResult {
  Vec amplitudes;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Fixed-support LASSO  min_a 1/2 ||Phi_x a - y||^2 + lambda ||a||_1  solved
/// with FISTA on the Gram system, step size from a power-iteration Lipschitz
/// estimate, and a function-value restart that keeps the objective monotone.
///
/// Per-atom sign constraints: +1 nonnegative, -1 nonpositive, 0 free.  An
/// empty vector derives them from cfg.sign_mode (NonNegative -> all +1).
LassoResult lasso_fixed_support(const Kernel& kernel, const std::vector<Vec>& positions,
                                const Vec& y, double lambda, const LassoConfig& cfg,
                                const Eigen::VectorXi& signs = {});

struct DescentConfig {
  int max_iters = 500;
  double grad_tol = 1e-9;  ///< projected-gradient tolerance, scaled by max(1, lambda)
  int memory = 10;         ///< number of stored quasi-Newton pairs
};

struct DescentResult {
  Vec amplitudes;
  std::vector<Vec> positions;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool line_search_failure = false;
  std::vector<double> objective_trace;  ///< objective after each accepted step
};

/// Joint non-convex descent over amplitudes and positions from (a0, x0),
/// bounded to the domain box and to the sign-preserving amplitude half-lines.
/// Limited-memory BFGS two-loop direction with gradient projection and a
/// backtracking Armijo line search; the objective never increases.
DescentResult local_descent(const Kernel& kernel, const Vec& a0, const std::vector<Vec>& x0,
                            const Vec& y, double lambda, const DescentConfig& cfg);

struct ArgmaxResult {
  Vec x;
  double value = 0.0;  ///< |eta(x)| (or eta(x) when positive_only)
};

/// Best grid point of |eta| (or eta), refined by a curvature-informed ascent
/// constrained to the box.  Ties between equal grid maxima break to the
/// lowest linear index; the refined value never falls below the grid value.
ArgmaxResult argmax_certificate(const Certificate& cert, const std::vector<int>& grid_per_axis,
                                bool positive_only);

/// Upper estimate of ||Phi_x||^2 by power iteration on the Gram matrix
/// (50 iterations or relative change < 1e-8), inflated by 1.01.
double lipschitz_estimate(const Kernel& kernel, const std::vector<Vec>& positions);

}  // namespace sfw
