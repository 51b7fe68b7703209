#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sfw/evaluation.hpp"
#include "sfw/rng.hpp"

using namespace sfw;

TEST_SUITE("evaluation") {

TEST_CASE("exact sets pair perfectly") {
  std::vector<Vec> pts = {point3d(1, 2, 0.1), point3d(4, 4, 0.5), point3d(2, 5, 0.3)};
  auto match = match_points(pts, pts, 0.02);
  CHECK(match.pairs.size() == 3);
  for (const auto& p : match.pairs) CHECK(p.distance == 0.0);
  CHECK(match.false_positives.empty());
  CHECK(match.false_negatives.empty());
}

TEST_CASE("radius violations stay unmatched") {
  std::vector<Vec> est = {point1d(0.5)};
  std::vector<Vec> gt = {point1d(0.5 + 0.04)};
  auto match = match_points(est, gt, 0.02);
  CHECK(match.pairs.empty());
  CHECK(match.false_positives.size() == 1);
  CHECK(match.false_negatives.size() == 1);
}

TEST_CASE("cardinality constraint: one gt pairs with one estimate") {
  std::vector<Vec> est = {point1d(0.49), point1d(0.51)};
  std::vector<Vec> gt = {point1d(0.5)};
  auto match = match_points(est, gt, 0.02);
  CHECK(match.pairs.size() == 1);
  CHECK(match.false_positives.size() == 1);
}

TEST_CASE("matching is order independent") {
  RandomStream rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec> est, gt;
    for (int i = 0; i < 5; ++i) est.push_back(point3d(rng.uniform(0, 1), rng.uniform(0, 1), 0));
    for (int i = 0; i < 4; ++i) gt.push_back(point3d(rng.uniform(0, 1), rng.uniform(0, 1), 0));
    auto fwd = match_points(est, gt, 0.3);
    std::vector<Vec> est_rev(est.rbegin(), est.rend());
    std::vector<Vec> gt_rev(gt.rbegin(), gt.rend());
    auto rev = match_points(est_rev, gt_rev, 0.3);
    CHECK(fwd.pairs.size() == rev.pairs.size());
    double d_fwd = 0, d_rev = 0;
    for (const auto& p : fwd.pairs) d_fwd += p.distance;
    for (const auto& p : rev.pairs) d_rev += p.distance;
    CHECK(d_fwd == doctest::Approx(d_rev).epsilon(1e-9));
  }
}

TEST_CASE("matching agrees with exhaustive enumeration") {
  RandomStream rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const int ne = static_cast<int>(rng.next_u64() % 7);
    const int ng = static_cast<int>(rng.next_u64() % 7);
    std::vector<Vec> est, gt;
    for (int i = 0; i < ne; ++i) est.push_back(point1d(rng.uniform(0, 1)));
    for (int i = 0; i < ng; ++i) gt.push_back(point1d(rng.uniform(0, 1)));
    const double r = rng.uniform(0.05, 0.4);
    auto fast = match_points(est, gt, r);
    auto brute = oracles::brute_force_match(est, gt, r);
    CHECK(static_cast<int>(fast.pairs.size()) == brute.pairs);
    double total = 0;
    for (const auto& p : fast.pairs) total += p.distance;
    CHECK(total == doctest::Approx(brute.total_distance).epsilon(1e-9));
  }
}

TEST_CASE("frame scores") {
  // TP=3, FP=1, FN=1
  std::vector<Vec> gt = {point1d(0.1), point1d(0.3), point1d(0.5), point1d(0.9)};
  std::vector<Vec> est = {point1d(0.1), point1d(0.3), point1d(0.5), point1d(0.7)};
  auto match = match_points(est, gt, 0.05);
  auto score = score_frame(match, est, gt);
  CHECK(score.tp == 3);
  CHECK(score.fp == 1);
  CHECK(score.fn == 1);
  CHECK(score.jaccard == doctest::Approx(0.6));
  CHECK(score.recall == doctest::Approx(0.75));
  CHECK(score.precision == doctest::Approx(0.75));

  // per-axis RMSE of errors {3 nm, 4 nm} is about 3.536 nm
  std::vector<Vec> gt2 = {point1d(0.1), point1d(0.2)};
  std::vector<Vec> est2 = {point1d(0.1 + 3e-3), point1d(0.2 - 4e-3)};
  auto s2 = score_frame(match_points(est2, gt2, 0.1), est2, gt2);
  CHECK(s2.rmse[0] == doctest::Approx(std::sqrt((9.0 + 16.0) / 2.0) * 1e-3).epsilon(1e-9));

  // perfect frame
  auto s3 = score_frame(match_points(gt2, gt2, 0.1), gt2, gt2);
  CHECK(s3.jaccard == 1.0);
  CHECK(s3.recall == 1.0);
  CHECK(s3.precision == 1.0);
  CHECK(s3.rmse.norm() == 0.0);

  // empty-vs-empty convention
  auto s4 = score_frame(match_points({}, {}, 0.1), {}, {});
  CHECK(s4.jaccard == 1.0);
  CHECK(s4.recall == 1.0);
  CHECK(s4.precision == 1.0);

  // empty estimate vs nonempty truth
  auto s5 = score_frame(match_points({}, gt2, 0.1), {}, gt2);
  CHECK(s5.jaccard == 0.0);
  CHECK(s5.precision == 0.0);
}

TEST_CASE("jaccard never exceeds recall or precision") {
  RandomStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec> est, gt;
    const int ne = 1 + static_cast<int>(rng.next_u64() % 6);
    const int ng = 1 + static_cast<int>(rng.next_u64() % 6);
    for (int i = 0; i < ne; ++i) est.push_back(point1d(rng.uniform(0, 1)));
    for (int i = 0; i < ng; ++i) gt.push_back(point1d(rng.uniform(0, 1)));
    auto s = score_frame(match_points(est, gt, 0.1), est, gt);
    CHECK(s.jaccard <= s.recall + 1e-15);
    CHECK(s.jaccard <= s.precision + 1e-15);
  }
}

TEST_CASE("aggregation pools counts and errors") {
  std::vector<Vec> gt = {point1d(0.2), point1d(0.6)};
  std::vector<Vec> hit = {point1d(0.2 + 1e-3), point1d(0.6 - 2e-3)};
  std::vector<Vec> miss = {point1d(0.9)};
  std::vector<FrameScore> scores = {
      score_frame(match_points(hit, gt, 0.05), hit, gt),
      score_frame(match_points(miss, gt, 0.05), miss, gt),
  };
  auto agg = aggregate_scores(scores);
  CHECK(agg.frames == 2);
  CHECK(agg.pooled.tp == 2);
  CHECK(agg.pooled.fp == 1);
  CHECK(agg.pooled.fn == 2);
  CHECK(agg.pooled.jaccard == doctest::Approx(2.0 / 5.0));
  CHECK(agg.per_frame_mean.jaccard == doctest::Approx(0.5));
  CHECK(agg.pooled.rmse[0] ==
        doctest::Approx(std::sqrt((1e-6 + 4e-6) / 2.0)).epsilon(1e-12));
}

TEST_CASE("lambda selection") {
  CHECK(select_lambda({0.5}, [](double) { return 0.3; }) == 0.5);

  // the exhaustive sweep is its own oracle: the winner beats every candidate
  std::vector<double> grid = {0.1, 0.2, 0.4, 0.8};
  auto score = [](double l) { return -(l - 0.4) * (l - 0.4); };
  const double best = select_lambda(grid, score);
  CHECK(best == 0.4);
  for (double l : grid) CHECK(score(best) >= score(l));

  // ties break to the smaller lambda
  CHECK(select_lambda({0.8, 0.2, 0.4}, [](double) { return 0.0; }) == 0.2);
  CHECK_THROWS_AS(select_lambda({}, [](double) { return 0.0; }), std::invalid_argument);

  auto grid_default = default_lambda_grid(0.1, 8, 3.0);
  REQUIRE(grid_default.size() == 8);
  CHECK(grid_default.front() == doctest::Approx(0.1 * std::pow(10.0, -1.5)));
  CHECK(grid_default.back() == doctest::Approx(0.1 * std::pow(10.0, 1.5)));
}

}  // TEST_SUITE
