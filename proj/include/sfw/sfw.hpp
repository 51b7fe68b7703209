#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "sfw/certificates.hpp"
#include "sfw/kernels.hpp"
#include "sfw/measures.hpp"
#include "sfw/solvers.hpp"

namespace sfw {

struct BlassoProblem {
  std::shared_ptr<const Kernel> kernel;
  Vec y;
  double lambda = 1.0;
  bool positive = false;
  LassoConfig lasso;
  DescentConfig descent;
  std::vector<int> grid_per_axis;  ///< empty -> kernel default
  double stop_tol = 1e-9;          ///< certificate stopping tolerance

  void validate() const;
  std::vector<int> effective_grid() const;
};

enum class Termination { CertificateBounded, IterationCap };

const char* to_string(Termination t);

struct SfwIterationRecord {
  int iteration = 0;
  double certificate_max = 0.0;  ///< |eta(x*)| (or eta(x*)) at the selection step
  Vec inserted_position;
  double objective = 0.0;  ///< after the LASSO + descent update
  int spike_count = 0;
  DiscreteMeasure measure;               ///< iterate after the update
  std::vector<double> inner_objectives;  ///< descent trace, recorded on request
};

struct SfwTrace {
  std::vector<SfwIterationRecord> iterations;
  Termination termination = Termination::IterationCap;
  double final_objective = 0.0;
  double final_certificate_max = 0.0;
};

struct SfwOptions {
  int max_outer = 100;
  bool record_inner = false;
};

/// BLASSO objective 1/2 ||Phi m - y||^2 + lambda ||m||_TV.
double objective(const BlassoProblem& problem, const DiscreteMeasure& m);

Certificate eta_lambda(const BlassoProblem& problem, const DiscreteMeasure& m);

/// Sliding Frank-Wolfe: per outer iteration, insert the certificate argmax,
/// re-fit amplitudes on the fixed support (FISTA), then jointly slide
/// amplitudes and positions (bounded quasi-Newton), pruning zero amplitudes
/// after each solve.  Stops when |eta(x*)| <= 1 (eta(x*) <= 1 in positive
/// mode) within stop_tol.
std::pair<DiscreteMeasure, SfwTrace> run_sfw(const BlassoProblem& problem,
                                             const SfwOptions& options = {});

/// Classical Frank-Wolfe on the epigraphical lift with step 2/(k+2) and no
/// sliding; extreme points are (0,0) and +-M delta_x with M = ||y||^2/(2 lambda).
/// Baseline only.
std::pair<DiscreteMeasure, SfwTrace> run_fw_reference(const BlassoProblem& problem,
                                                      const SfwOptions& options = {});

struct OptimalityReport {
  double max_certificate = 0.0;        ///< max over the search grid (refined)
  std::vector<double> value_residuals; ///< |eta(x_i) - sign(a_i)| per spike
  std::vector<double> gradient_norms;  ///< ||grad eta(x_i)|| per spike
  bool optimal = false;
  double tol = 1e-6;
};

/// Check the certificate conditions of a candidate solution: the certificate
/// stays within 1 + tol on the grid (refined) and eta matches the amplitude
/// signs at every spike within tol.  Gradient norms are reported, not gated.
OptimalityReport verify_optimality(const BlassoProblem& problem, const DiscreteMeasure& m,
                                   const std::vector<int>& grid_per_axis = {},
                                   double tol = 1e-6);

}  // namespace sfw
