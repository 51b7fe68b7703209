#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfw/kernels.hpp"
#include "sfw/simulation.hpp"
#include "sfw/solvers.hpp"

namespace sfw {

/// Configuration problems map to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Effective run configuration.  Every key has a default (the simulation
/// parameter set of the 3-D experiments) except kernel.variant; solver.lambda
/// is required by `reconstruct`.
struct RunConfig {
  // [run]
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;  ///< 0 = all available cores
  std::string frames_format = "binary";  ///< binary | csv

  // [kernel]
  KernelSpec kernel;
  int laplace_s_count = 0;      ///< >0: generate uniform samples instead of a list
  double laplace_s_scale = 2.0;

  // [solver]
  double lambda = 0.0;  ///< 0 = unset
  bool positive = true;
  int max_outer = 100;
  double stop_tol = 1e-9;
  LassoConfig lasso;
  DescentConfig descent;
  std::vector<int> grid;  ///< empty = kernel default

  // [noise]
  bool noise_enabled = true;
  NoiseConfig noise;

  // [simulation]
  int n_total = 100;
  int n_per_frame = 5;
  double jitter_radius = 0.01;

  // [evaluation]
  double radius_jaccard = 0.02;
  double radius_rmse = 0.1;
  std::vector<double> lambda_grid;  ///< empty = heuristic default grid
  int training_frames = 3;

  /// Kernel spec with the Laplace sample shorthand expanded.
  KernelSpec effective_kernel() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Canonical dump; parsing the dump reproduces the same effective config.
std::string dump_config(const RunConfig& cfg);

}  // namespace sfw
