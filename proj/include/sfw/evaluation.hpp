#pragma once

#include <functional>
#include <vector>

#include "sfw/types.hpp"

namespace sfw {

struct MatchResult {
  struct Pair {
    int est = -1;
    int gt = -1;
    double distance = 0.0;
  };
  std::vector<Pair> pairs;
  std::vector<int> false_positives;  ///< unpaired estimate indices
  std::vector<int> false_negatives;  ///< unpaired ground-truth indices
  double radius = 0.0;
};

/// Pair estimated and ground-truth points within radius r by optimal
/// assignment: maximum cardinality first, minimum total distance among
/// maximum matchings.  Deterministic and order-independent.
MatchResult match_points(const std::vector<Vec>& est, const std::vector<Vec>& gt, double r);

struct FrameScore {
  double jaccard = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  Vec rmse;         ///< per-axis RMSE over paired points
  int tp = 0, fp = 0, fn = 0;
  Vec squared_err;  ///< per-axis sums of squared errors (for pooling)
};

FrameScore score_frame(const MatchResult& match, const std::vector<Vec>& est,
                       const std::vector<Vec>& gt);

struct AggregateScore {
  FrameScore per_frame_mean;
  FrameScore pooled;
  int frames = 0;
};

AggregateScore aggregate_scores(const std::vector<FrameScore>& scores);

/// Logarithmic lambda grid of `points` candidates spanning `decades` decades
/// centered on lambda0.
std::vector<double> default_lambda_grid(double lambda0, int points = 8, double decades = 3.0);

/// Smallest lambda in the grid maximizing the supplied mean-Jaccard callback.
double select_lambda(std::vector<double> grid,
                     const std::function<double(double)>& mean_jaccard);

}  // namespace sfw
