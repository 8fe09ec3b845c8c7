#pragma once

#include <cstdio>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "drillforce/handforce/model.hpp"
#include "drillforce/metrics.hpp"

namespace drillforce::handforce {

/// Channels entering the tip-force computation: fz, tx, ty.
inline constexpr int kTipChannels[3] = {2, 3, 4};

struct GridRow {
  TrainConfig config;
  Wrench rmse = Wrench::Zero();         // validation, physical units
  Wrench improvement = Wrench::Zero();  // percent vs. uncompensated
  double score = std::numeric_limits<double>::infinity();  // lower is better
  std::size_t parameters = 0;
  std::string error;  // non-empty when training failed
};

struct GridSearchResult {
  std::size_t best_index = 0;
  TrainConfig best;
  HandModel best_model;
  Wrench baseline_rmse = Wrench::Zero();
  std::vector<GridRow> rows;
};

/// Default grid: the linear baseline, MLP hidden {8, 16, 32} x lr {1e-2, 1e-3}
/// at 2000 epochs, RF {25, 100} trees x depth {4, 8}.
inline std::vector<TrainConfig> default_grid(std::uint64_t seed) {
  std::vector<TrainConfig> grid;
  TrainConfig lin;
  lin.family = Family::linear;
  lin.seed = seed;
  grid.push_back(lin);
  for (int h : {8, 16, 32}) {
    for (double lr : {1e-2, 1e-3}) {
      TrainConfig c;
      c.family = Family::mlp;
      c.mlp.hidden = {h};
      c.mlp.learning_rate = lr;
      c.mlp.epochs = 2000;
      c.seed = seed;
      grid.push_back(c);
    }
  }
  for (int trees : {25, 100}) {
    for (int depth : {4, 8}) {
      TrainConfig c;
      c.family = Family::rf;
      c.rf.trees = trees;
      c.rf.max_depth = depth;
      c.seed = seed;
      grid.push_back(c);
    }
  }
  return grid;
}

/// Mean over fz, tx, ty of validation RMSE relative to the uncompensated RMSE.
inline double selection_score(const Wrench& rmse, const Wrench& baseline) {
  double s = 0.0;
  for (int c : kTipChannels) s += baseline(c) > 0.0 ? rmse(c) / baseline(c) : rmse(c);
  return s / 3.0;
}

/// Trains every configuration on `train`, scores it on `validation`, and
/// keeps the lowest score; ties go to fewer parameters, then grid order.
/// Configurations that fail numerically are reported and skipped.
inline GridSearchResult grid_search(std::span<const TrainConfig> grid, std::span<const HandPair> train,
                                    std::span<const HandPair> validation) {
  if (grid.empty()) throw ConfigError("grid_search: empty grid");
  if (train.empty() || validation.empty()) throw DataError("grid_search: train and validation sets must be non-empty");
  {
    auto key = [](const HandPair& p) {
      std::array<double, 12> k{};
      for (int i = 0; i < 6; ++i) {
        k[static_cast<std::size_t>(i)] = p.delta(i);
        k[static_cast<std::size_t>(6 + i)] = p.target(i);
      }
      return k;
    };
    std::set<std::array<double, 12>> seen;
    for (const auto& p : train) seen.insert(key(p));
    for (const auto& p : validation) {
      if (seen.count(key(p))) throw DataError("grid_search: train and validation sets overlap");
    }
  }

  GridSearchResult result;
  result.baseline_rmse = uncompensated_rmse(validation);
  std::optional<HandModel> best_model;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridRow row;
    row.config = grid[i];
    try {
      HandModel m = train_model(train, grid[i]);
      row.rmse = channel_rmse(m, validation);
      for (int c = 0; c < 6; ++c) {
        row.improvement(c) = result.baseline_rmse(c) > 0.0
                                 ? metrics::percent_improvement(result.baseline_rmse(c), row.rmse(c))
                                 : 0.0;
      }
      row.score = selection_score(row.rmse, result.baseline_rmse);
      row.parameters = parameter_count(m);
      const bool better =
          !best_model || row.score < result.rows[result.best_index].score ||
          (row.score == result.rows[result.best_index].score &&
           row.parameters < result.rows[result.best_index].parameters);
      if (better) {
        result.best_index = i;
        best_model = std::move(m);
      }
    } catch (const NumericalError& e) {
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  if (!best_model) throw NumericalError("grid_search: every configuration failed to train");
  result.best = grid[result.best_index];
  result.best_model = std::move(*best_model);
  return result;
}

/// Percent-improvement table: `model,fx,fy,fz,tx,ty,tz`.
inline std::string improvement_table_csv(const GridSearchResult& r) {
  std::string out = "model,fx,fy,fz,tx,ty,tz\n";
  char buf[64];
  for (const auto& row : r.rows) {
    out += row.config.label();
    for (int c = 0; c < 6; ++c) {
      if (row.error.empty()) {
        std::snprintf(buf, sizeof buf, ",%.2f", row.improvement(c));
      } else {
        std::snprintf(buf, sizeof buf, ",nan");
      }
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace drillforce::handforce
