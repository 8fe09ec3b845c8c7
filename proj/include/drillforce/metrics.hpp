#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drillforce/error.hpp"

namespace drillforce::metrics {

namespace detail {
inline void require_matched(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) {
    throw DataError(std::string(op) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DataError(std::string(op) + ": empty series");
}
}  // namespace detail

inline double rmse(std::span<const double> predicted, std::span<const double> truth) {
  detail::require_matched(predicted, truth, "rmse");
  double sq = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - truth[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(predicted.size()));
}

inline double max_abs_error(std::span<const double> predicted, std::span<const double> truth) {
  detail::require_matched(predicted, truth, "max_abs_error");
  double m = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) m = std::max(m, std::abs(predicted[i] - truth[i]));
  return m;
}

inline double mean(std::span<const double> series) {
  if (series.empty()) throw DataError("mean: empty series");
  return std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
}

/// Mean of the k largest values.
inline double top_k_mean(std::span<const double> series, std::size_t k) {
  if (k == 0) throw DataError("top_k_mean: k must be >= 1");
  if (k > series.size()) {
    throw DataError("top_k_mean: k=" + std::to_string(k) + " exceeds series length " +
                    std::to_string(series.size()));
  }
  std::vector<double> v(series.begin(), series.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(), std::greater<>());
  std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += v[i];
  return sum / static_cast<double>(k);
}

/// 100 * (before - after) / before.
inline double percent_improvement(double rmse_before, double rmse_after) {
  if (!(rmse_before > 0.0)) {
    throw DataError("percent_improvement: undefined for baseline RMSE <= 0");
  }
  return 100.0 * (rmse_before - rmse_after) / rmse_before;
}

/// Linearly interpolates (times, values) at `query`; every query must lie
/// inside [times.front(), times.back()].
inline std::vector<double> interpolate_series(std::span<const double> times,
                                              std::span<const double> values,
                                              std::span<const double> query) {
  if (times.size() != values.size() || times.empty()) {
    throw DataError("interpolate_series: times and values must be non-empty and equal length");
  }
  std::vector<double> out;
  out.reserve(query.size());
  for (double t : query) {
    if (!(t >= times.front() && t <= times.back())) {
      throw DataError("interpolate_series: time " + std::to_string(t) + " outside truth range [" +
                      std::to_string(times.front()) + ", " + std::to_string(times.back()) + "]");
    }
    auto it = std::lower_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    if (times[hi] == t || hi == 0) {
      out.push_back(values[hi]);
      continue;
    }
    const double w = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
    out.push_back(values[hi - 1] + w * (values[hi] - values[hi - 1]));
  }
  return out;
}

struct TrialReport {
  std::string id;
  double rmse = 0.0;        // N
  double max_error = 0.0;   // N
  double mean_force = 0.0;  // N, predicted magnitudes
  std::size_t k = 0;
  double top_k_mean = 0.0;  // N, predicted magnitudes
  std::size_t samples = 0;
  double duration = 0.0;    // s
};

/// Summarizes one trial from magnitude series already aligned in time.
/// k is reduced to the series length for short trials.
inline TrialReport trial_summary(std::string id, std::span<const double> times,
                                 std::span<const double> predicted, std::span<const double> truth,
                                 std::size_t k = 100) {
  detail::require_matched(predicted, truth, "trial_summary");
  if (times.size() != predicted.size()) throw DataError("trial_summary: times length mismatch");
  TrialReport r;
  r.id = std::move(id);
  r.rmse = rmse(predicted, truth);
  r.max_error = max_abs_error(predicted, truth);
  r.mean_force = mean(predicted);
  r.k = std::min(k, predicted.size());
  r.top_k_mean = top_k_mean(predicted, r.k);
  r.samples = predicted.size();
  r.duration = times.back() - times.front();
  return r;
}

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation; 0 for a single value
};

inline Stat mean_std(std::span<const double> v) {
  if (v.empty()) throw DataError("mean_std: empty input");
  Stat s;
  s.mean = mean(v);
  if (v.size() > 1) {
    double sq = 0.0;
    for (double x : v) sq += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct AggregateReport {
  std::size_t trials = 0;
  Stat rmse;
  Stat max_error;
  Stat mean_force;
  Stat top_k_mean;
};

inline AggregateReport aggregate(std::span<const TrialReport> reports) {
  if (reports.empty()) throw DataError("aggregate: no trial reports");
  auto collect = [&](double TrialReport::*field) {
    std::vector<double> v;
    v.reserve(reports.size());
    for (const auto& r : reports) v.push_back(r.*field);
    return mean_std(v);
  };
  AggregateReport a;
  a.trials = reports.size();
  a.rmse = collect(&TrialReport::rmse);
  a.max_error = collect(&TrialReport::max_error);
  a.mean_force = collect(&TrialReport::mean_force);
  a.top_k_mean = collect(&TrialReport::top_k_mean);
  return a;
}

// ---------------------------------------------------------------------------
// reports

namespace detail {
inline void put(std::string& out, double x) {
  char buf[32];
  out.append(buf, std::to_chars(buf, buf + sizeof buf, x).ptr);
}
}  // namespace detail

/// One row per trial, then `mean` and `std` rows over the trials.
inline std::string report_csv(std::span<const TrialReport> reports) {
  std::string out = "trial,rmse,max_error,mean_force,k,top_k_mean,samples,duration\n";
  for (const auto& r : reports) {
    out += r.id;
    for (double v : {r.rmse, r.max_error, r.mean_force}) {
      out += ',';
      detail::put(out, v);
    }
    out += ',' + std::to_string(r.k) + ',';
    detail::put(out, r.top_k_mean);
    out += ',' + std::to_string(r.samples) + ',';
    detail::put(out, r.duration);
    out += '\n';
  }
  if (!reports.empty()) {
    const auto a = aggregate(reports);
    for (int row = 0; row < 2; ++row) {
      out += row == 0 ? "mean" : "std";
      for (const Stat* s : {&a.rmse, &a.max_error, &a.mean_force}) {
        out += ',';
        detail::put(out, row == 0 ? s->mean : s->std);
      }
      out += ",,";
      detail::put(out, row == 0 ? a.top_k_mean.mean : a.top_k_mean.std);
      out += ",,\n";
    }
  }
  return out;
}

inline nlohmann::json to_json(const TrialReport& r) {
  return {{"id", r.id},         {"rmse", r.rmse}, {"max_error", r.max_error}, {"mean_force", r.mean_force},
          {"k", r.k},           {"top_k_mean", r.top_k_mean}, {"samples", r.samples}, {"duration", r.duration}};
}

inline nlohmann::json to_json(const AggregateReport& a) {
  auto stat = [](const Stat& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
  return {{"trials", a.trials},
          {"rmse", stat(a.rmse)},
          {"max_error", stat(a.max_error)},
          {"mean_force", stat(a.mean_force)},
          {"top_k_mean", stat(a.top_k_mean)}};
}

/// Human-readable summary, e.g. `rmse 41.7 (+- 12.2) mN over 16 trials`.
inline std::string summary_line(const AggregateReport& a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "rmse %.1f (+- %.1f) mN, top-k mean %.3f (+- %.3f) N over %zu trial%s",
                1e3 * a.rmse.mean, 1e3 * a.rmse.std, a.top_k_mean.mean, a.top_k_mean.std, a.trials,
                a.trials == 1 ? "" : "s");
  return buf;
}

}  // namespace drillforce::metrics
