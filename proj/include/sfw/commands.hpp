#pragma once

#include <string>
#include <vector>

#include "sfw/config.hpp"

namespace sfw {

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDimensionMismatch = 3;
inline constexpr int kExitPartialFailure = 4;

struct EvaluateArgs {
  std::string estimated_csv;
  std::string ground_truth_csv;
  std::string tag;      ///< free-form label written to the scores CSV
  bool append = false;  ///< append the aggregate row instead of truncating
};

struct CertifyArgs {
  std::string mode = "eta_w";  ///< eta_w | eta_v | closed_form
  bool continuous = false;     ///< eta_w from the continuous-mu Laplace oracle
  double x_c = 1.0;
  int n_spikes = 1;
  int grid = 0;                ///< CSV samples / sweep nodes per axis; 0 = default
  std::string measure_csv;     ///< eta_v: localization CSV holding the measure
  int frame = 0;               ///< eta_v: frame index within measure_csv
};

int cmd_simulate(const RunConfig& cfg);
int cmd_reconstruct(const RunConfig& cfg, const std::vector<std::string>& frame_files);
int cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args);
int cmd_certify(const RunConfig& cfg, const CertifyArgs& args);
int cmd_demo1d(const RunConfig& cfg);

/// Run job(0..count-1) on a fixed pool of workers (0 = all cores).  Each job
/// writes only its own result slot; callers serialize file output afterwards.
void parallel_for_frames(int count, int workers, const std::function<void(int)>& job);

/// The frozen regularization strength of the 1-D Gaussian demo.
double demo1d_default_lambda();

}  // namespace sfw
