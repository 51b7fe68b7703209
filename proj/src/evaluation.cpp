#include "sfw/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sfw {

namespace {

// An assignment through a kBig edge means "leave unmatched"; kBig dominates
// any achievable sum of true distances, so minimizing total cost maximizes
// the number of true pairs first and their total distance second.
constexpr double kBig = 1e6;

/// O(n^3) Hungarian algorithm with potentials on a square cost matrix;
/// returns row_of_col assignments.
std::vector<int> hungarian(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1,
                             std::numeric_limits<double>::infinity());
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_of_col(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) row_of_col[static_cast<std::size_t>(j - 1)] = p[static_cast<std::size_t>(j)] - 1;
  return row_of_col;
}

}  // namespace

MatchResult match_points(const std::vector<Vec>& est, const std::vector<Vec>& gt, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("match_points: radius must be positive");
  MatchResult res;
  res.radius = r;
  const int ne = static_cast<int>(est.size());
  const int ng = static_cast<int>(gt.size());
  const int n = std::max(ne, ng);
  if (n == 0) return res;

  Mat cost = Mat::Constant(n, n, kBig);
  for (int i = 0; i < ne; ++i)
    for (int j = 0; j < ng; ++j) {
      const double d = (est[static_cast<std::size_t>(i)] - gt[static_cast<std::size_t>(j)]).norm();
      if (d <= r) cost(i, j) = d;
    }

  const auto row_of_col = hungarian(cost);
  std::vector<char> est_used(static_cast<std::size_t>(ne), 0);
  std::vector<char> gt_used(static_cast<std::size_t>(ng), 0);
  for (int j = 0; j < ng; ++j) {
    const int i = row_of_col[static_cast<std::size_t>(j)];
    if (i >= 0 && i < ne && cost(i, j) < kBig) {
      res.pairs.push_back({i, j, cost(i, j)});
      est_used[static_cast<std::size_t>(i)] = 1;
      gt_used[static_cast<std::size_t>(j)] = 1;
    }
  }
  for (int i = 0; i < ne; ++i)
    if (!est_used[static_cast<std::size_t>(i)]) res.false_positives.push_back(i);
  for (int j = 0; j < ng; ++j)
    if (!gt_used[static_cast<std::size_t>(j)]) res.false_negatives.push_back(j);
  return res;
}

namespace {
double safe_ratio(int num, int den, bool both_empty) {
  if (den == 0) return both_empty ? 1.0 : 0.0;
  return static_cast<double>(num) / den;
}
}  // namespace

FrameScore score_frame(const MatchResult& match, const std::vector<Vec>& est,
                       const std::vector<Vec>& gt) {
  FrameScore s;
  s.tp = static_cast<int>(match.pairs.size());
  s.fp = static_cast<int>(match.false_positives.size());
  s.fn = static_cast<int>(match.false_negatives.size());
  const bool both_empty = est.empty() && gt.empty();
  s.jaccard = safe_ratio(s.tp, s.tp + s.fp + s.fn, both_empty);
  s.recall = safe_ratio(s.tp, s.tp + s.fn, both_empty);
  s.precision = safe_ratio(s.tp, s.tp + s.fp, both_empty);

  const int d = gt.empty() ? (est.empty() ? 0 : static_cast<int>(est.front().size()))
                           : static_cast<int>(gt.front().size());
  s.squared_err = Vec::Zero(d);
  for (const auto& p : match.pairs) {
    const Vec diff = est[static_cast<std::size_t>(p.est)] - gt[static_cast<std::size_t>(p.gt)];
    s.squared_err += diff.cwiseAbs2();
  }
  s.rmse = s.tp > 0 ? Vec((s.squared_err / s.tp).cwiseSqrt()) : Vec(Vec::Zero(d));
  return s;
}

AggregateScore aggregate_scores(const std::vector<FrameScore>& scores) {
  AggregateScore agg;
  agg.frames = static_cast<int>(scores.size());
  if (scores.empty()) return agg;
  const auto d = scores.front().squared_err.size();
  agg.per_frame_mean.rmse = Vec::Zero(d);
  agg.pooled.squared_err = Vec::Zero(d);
  for (const auto& s : scores) {
    agg.per_frame_mean.jaccard += s.jaccard;
    agg.per_frame_mean.recall += s.recall;
    agg.per_frame_mean.precision += s.precision;
    agg.per_frame_mean.rmse += s.rmse;
    agg.pooled.tp += s.tp;
    agg.pooled.fp += s.fp;
    agg.pooled.fn += s.fn;
    agg.pooled.squared_err += s.squared_err;
  }
  const double inv = 1.0 / agg.frames;
  agg.per_frame_mean.jaccard *= inv;
  agg.per_frame_mean.recall *= inv;
  agg.per_frame_mean.precision *= inv;
  agg.per_frame_mean.rmse *= inv;

  const bool empty = agg.pooled.tp + agg.pooled.fp + agg.pooled.fn == 0;
  agg.pooled.jaccard = safe_ratio(agg.pooled.tp, agg.pooled.tp + agg.pooled.fp + agg.pooled.fn, empty);
  agg.pooled.recall = safe_ratio(agg.pooled.tp, agg.pooled.tp + agg.pooled.fn, empty);
  agg.pooled.precision = safe_ratio(agg.pooled.tp, agg.pooled.tp + agg.pooled.fp, empty);
  agg.pooled.rmse = agg.pooled.tp > 0 ? Vec((agg.pooled.squared_err / agg.pooled.tp).cwiseSqrt())
                                      : Vec(Vec::Zero(d));
  return agg;
}

std::vector<double> default_lambda_grid(double lambda0, int points, double decades) {
  if (points < 1) throw std::invalid_argument("default_lambda_grid: need at least one point");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double e = points == 1 ? 0.0 : -decades / 2.0 + decades * i / (points - 1);
    grid[static_cast<std::size_t>(i)] = lambda0 * std::pow(10.0, e);
  }
  return grid;
}

double select_lambda(std::vector<double> grid, const std::function<double(double)>& mean_jaccard) {
  if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
  std::sort(grid.begin(), grid.end());
  double best_lambda = grid.front();
  double best_score = -1.0;
  for (double lambda : grid) {
    const double score = mean_jaccard(lambda);
    if (score > best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace sfw
