#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drillforce/metrics.hpp"

using namespace drillforce;
using namespace drillforce::metrics;

namespace {

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> iota_times(std::size_t n, double dt = 0.01) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * dt;
  return t;
}

}  // namespace

TEST(Rmse, Examples) {
  const std::vector<double> a{1.0, 2.0, 3.0};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_NEAR(rmse(std::vector<double>{1.1, 2.1, 3.1}, a), 0.1, 1e-15);
  EXPECT_NEAR(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}), std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}), 3.5355339059327378, 1e-15);
}

TEST(Rmse, Errors) {
  EXPECT_THROW(rmse(std::vector<double>{1, 2}, std::vector<double>{1}), DataError);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST(Rmse, ZeroOnSelfSymmetricNonNegative) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_series(rng, 1 + i % 17), b = random_series(rng, 1 + i % 17);
    ASSERT_EQ(rmse(a, a), 0.0);
    ASSERT_EQ(rmse(a, b), rmse(b, a));
    ASSERT_GE(rmse(a, b), 0.0);
    ASSERT_LE(rmse(a, b), max_abs_error(a, b));
  }
}

TEST(MaxAbsError, Example) {
  EXPECT_EQ(max_abs_error(std::vector<double>{1, -2, 3}, std::vector<double>{1, 2, 2.5}), 4.0);
}

TEST(TopKMean, Examples) {
  const std::vector<double> v{1, 5, 3, 2};
  EXPECT_EQ(top_k_mean(v, 2), 4.0);
  EXPECT_EQ(top_k_mean(v, 1), 5.0);
  EXPECT_EQ(top_k_mean(v, 4), mean(v));
  EXPECT_EQ(mean(v), 2.75);
}

TEST(TopKMean, Errors) {
  const std::vector<double> v{1, 2};
  EXPECT_THROW(top_k_mean(v, 3), DataError);
  EXPECT_THROW(top_k_mean(v, 0), DataError);
}

TEST(TopKMean, MonotoneNonIncreasingInK) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_series(rng, 150);
    double prev = INFINITY;
    for (std::size_t k = 1; k <= v.size(); ++k) {
      const double m = top_k_mean(v, k);
      ASSERT_LE(m, prev + 1e-12) << "k=" << k;
      prev = m;
    }
    ASSERT_NEAR(prev, mean(v), 1e-12);
  }
}

TEST(TopKMean, MatchesFullSortOracle) {
  std::mt19937_64 rng(3);
  const auto v = random_series(rng, 500);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double sum = 0.0;
  for (int i = 0; i < 100; ++i) sum += sorted[static_cast<std::size_t>(i)];
  EXPECT_NEAR(top_k_mean(v, 100), sum / 100, 1e-12);
}

TEST(PercentImprovement, Examples) {
  EXPECT_EQ(percent_improvement(2.0, 2.0), 0.0);
  EXPECT_EQ(percent_improvement(2.0, 0.0), 100.0);
  EXPECT_NEAR(percent_improvement(1.0, 0.4620), 53.80, 1e-12);
  EXPECT_LT(percent_improvement(1.0, 1.5), 0.0);
}

TEST(PercentImprovement, UndefinedForZeroBaseline) {
  EXPECT_THROW(percent_improvement(0.0, 0.0), DataError);
  EXPECT_THROW(percent_improvement(-1.0, 0.0), DataError);
}

TEST(PercentImprovement, RoundTrip) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> p(0.0, 100.0), x(1e-3, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double before = x(rng), pct = p(rng);
    ASSERT_NEAR(percent_improvement(before, before * (1 - pct / 100)), pct, 1e-12);
  }
}

TEST(InterpolateSeries, LinearBetweenKnotsExactAtKnots) {
  const std::vector<double> t{0.0, 1.0, 2.0}, v{0.0, 10.0, 0.0};
  const auto out = interpolate_series(t, v, std::vector<double>{0.0, 0.25, 1.0, 1.5, 2.0});
  EXPECT_EQ(out, (std::vector<double>{0.0, 2.5, 10.0, 5.0, 0.0}));
  EXPECT_THROW(interpolate_series(t, v, std::vector<double>{2.5}), DataError);
  EXPECT_THROW(interpolate_series(t, std::vector<double>{1.0}, std::vector<double>{0.5}), DataError);
}

TEST(TrialSummary, PopulatesEveryField) {
  const std::vector<double> pred{1, 5, 3, 2}, truth{1, 4, 3, 4};
  const auto r = trial_summary("a", iota_times(4, 0.5), pred, truth, 2);
  EXPECT_EQ(r.id, "a");
  EXPECT_NEAR(r.rmse, std::sqrt(5.0 / 4), 1e-15);
  EXPECT_EQ(r.max_error, 2.0);
  EXPECT_EQ(r.mean_force, 2.75);
  EXPECT_EQ(r.k, 2u);
  EXPECT_EQ(r.top_k_mean, 4.0);
  EXPECT_EQ(r.samples, 4u);
  EXPECT_EQ(r.duration, 1.5);
}

TEST(TrialSummary, ShortTrialsClampK) {
  const std::vector<double> v{1, 2, 3};
  EXPECT_EQ(trial_summary("s", iota_times(3), v, v).k, 3u);
}

TEST(TrialSummary, OrderingInvariantsHoldForEveryReport) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 250);
    const auto pred = random_series(rng, n), truth = random_series(rng, n);
    const auto r = trial_summary("t", iota_times(n), pred, truth);
    ASSERT_LE(r.rmse, r.max_error);
    ASSERT_GE(r.top_k_mean, r.mean_force - 1e-12);
    ASSERT_LE(r.k, 100u);
  }
}

TEST(Aggregate, SampleStandardDeviation) {
  TrialReport a, b;
  a.rmse = 0.040;
  b.rmse = 0.044;
  const std::vector<TrialReport> two{a, b};
  const auto agg = aggregate(two);
  EXPECT_EQ(agg.trials, 2u);
  EXPECT_NEAR(agg.rmse.mean, 0.042, 1e-15);
  EXPECT_NEAR(agg.rmse.std, 0.002 * std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(1e3 * agg.rmse.std, 2.83, 5e-3);
}

TEST(Aggregate, SingleTrialHasZeroSpread) {
  TrialReport a;
  a.rmse = 0.05;
  const std::vector<TrialReport> one{a};
  const auto agg = aggregate(one);
  EXPECT_EQ(agg.rmse.mean, 0.05);
  EXPECT_EQ(agg.rmse.std, 0.0);
}

TEST(Aggregate, EmptyListIsAnError) {
  EXPECT_THROW(aggregate(std::vector<TrialReport>{}), DataError);
  EXPECT_THROW(mean_std(std::vector<double>{}), DataError);
}

TEST(Reports, CsvLayoutAndSummaryLine) {
  TrialReport a{"p1", 0.040, 0.1, 1.0, 100, 1.5, 1000, 9.99};
  TrialReport b{"p2", 0.044, 0.2, 1.1, 100, 1.6, 1000, 9.99};
  const std::vector<TrialReport> two{a, b};
  const auto csv = report_csv(two);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trial,rmse,max_error,mean_force,k,top_k_mean,samples,duration");
  EXPECT_NE(csv.find("\np1,0.04,0.1,1,100,1.5,1000,9.99\n"), std::string::npos) << csv;
  const auto at = csv.find("\nmean,");
  ASSERT_NE(at, std::string::npos) << csv;
  EXPECT_NEAR(std::stod(csv.substr(at + 6)), 0.042, 1e-15);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(summary_line(aggregate(two)), "rmse 42.0 (+- 2.8) mN, top-k mean 1.550 (+- 0.071) N over 2 trials");
}

TEST(Reports, JsonCarriesAllFields) {
  const TrialReport a{"x", 0.1, 0.2, 0.3, 100, 0.4, 500, 4.99};
  const auto j = to_json(a);
  EXPECT_EQ(j.at("id"), "x");
  EXPECT_EQ(j.at("samples"), 500);
  EXPECT_EQ(j.at("top_k_mean"), 0.4);
  const std::vector<TrialReport> one{a};
  const auto agg = to_json(aggregate(one));
  EXPECT_EQ(agg.at("trials"), 1);
  EXPECT_EQ(agg.at("rmse").at("mean"), 0.1);
  EXPECT_EQ(agg.at("rmse").at("std"), 0.0);
}
