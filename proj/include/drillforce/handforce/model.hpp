#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "drillforce/handforce/common.hpp"
#include "drillforce/handforce/forest.hpp"
#include "drillforce/handforce/linear.hpp"
#include "drillforce/handforce/mlp.hpp"

namespace drillforce::handforce {

using HandModel = std::variant<LinearHandModel, MLPHandModel, RFHandModel>;

inline Family family_of(const HandModel& m) {
  return static_cast<Family>(m.index());
}

/// Leaked drill-frame wrench (F_HF, tau_HF) predicted from a wrist delta.
inline Wrench predict_hand(const HandModel& model, const WristDelta& delta) {
  const Wrench w = delta.as_wrench();
  return std::visit([&](const auto& m) { return m.predict(w); }, model);
}

inline std::size_t parameter_count(const HandModel& model) {
  return std::visit([](const auto& m) { return m.parameter_count(); }, model);
}

struct SplitPairs {
  std::vector<HandPair> train;
  std::vector<HandPair> validation;
};

/// Seeded random split; `fraction` of the pairs go to training.
inline SplitPairs split_pairs(std::span<const HandPair> pairs, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  if (pairs.size() < 2) throw DataError("split_pairs: need at least 2 pairs");
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, pairs.size() - 1);
  SplitPairs s;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < n_train ? s.train : s.validation).push_back(pairs[idx[i]]);
  return s;
}

/// Mean squared error over all channels, each channel scaled by `scale`.
inline double standardized_mse(const HandModel& model, std::span<const HandPair> pairs, const Standardizer& scale) {
  if (pairs.empty()) return 0.0;
  double sq = 0.0;
  for (const auto& p : pairs) {
    const Wrench e = (predict_hand(model, WristDelta::from_wrench(p.delta)) - p.target).cwiseQuotient(scale.scale);
    sq += e.squaredNorm();
  }
  return sq / (6.0 * static_cast<double>(pairs.size()));
}

/// Per-channel RMSE of the model's leakage prediction in physical units.
inline Wrench channel_rmse(const HandModel& model, std::span<const HandPair> pairs) {
  if (pairs.empty()) throw DataError("channel_rmse: no pairs");
  Wrench sq = Wrench::Zero();
  for (const auto& p : pairs) {
    const Wrench e = predict_hand(model, WristDelta::from_wrench(p.delta)) - p.target;
    sq += e.cwiseProduct(e);
  }
  return (sq / static_cast<double>(pairs.size())).cwiseSqrt();
}

/// RMSE of the targets themselves, i.e. with no compensation applied.
inline Wrench uncompensated_rmse(std::span<const HandPair> pairs) {
  if (pairs.empty()) throw DataError("uncompensated_rmse: no pairs");
  Wrench sq = Wrench::Zero();
  for (const auto& p : pairs) sq += p.target.cwiseProduct(p.target);
  return (sq / static_cast<double>(pairs.size())).cwiseSqrt();
}

/// Trains the configured family on all given pairs.
inline HandModel train_model(std::span<const HandPair> pairs, const TrainConfig& config) {
  config.validate();
  switch (config.family) {
    case Family::linear: return fit_linear(pairs);
    case Family::mlp: return train_mlp(pairs, config).model;
    case Family::rf: return train_rf(pairs, config);
  }
  throw ConfigError("unknown family");
}

struct HandFitResult {
  HandModel model;
  double train_mse = 0.0;       // standardized by training target spread
  double validation_mse = 0.0;  // same scale
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

namespace detail {
inline HandFitResult fit_with_split(std::span<const HandPair> pairs, const TrainConfig& config,
                                    std::size_t min_pairs, const char* op) {
  config.validate();
  if (pairs.size() < min_pairs) {
    throw DataError(std::string(op) + ": need at least " + std::to_string(min_pairs) + " pairs, got " +
                    std::to_string(pairs.size()));
  }
  auto split = split_pairs(pairs, config.split_fraction, config.seed);
  HandFitResult r{train_model(split.train, config)};
  const Standardizer scale = fit_output_standardizer(split.train);
  r.train_mse = standardized_mse(r.model, split.train, scale);
  r.validation_mse = standardized_mse(r.model, split.validation, scale);
  r.train_size = split.train.size();
  r.validation_size = split.validation.size();
  return r;
}
}  // namespace detail

inline HandFitResult fit_mlp(std::span<const HandPair> pairs, TrainConfig config) {
  config.family = Family::mlp;
  return detail::fit_with_split(pairs, config, 20, "fit_mlp");
}

inline HandFitResult fit_rf(std::span<const HandPair> pairs, TrainConfig config) {
  config.family = Family::rf;
  return detail::fit_with_split(pairs, config, 20, "fit_rf");
}

inline HandFitResult fit_linear_split(std::span<const HandPair> pairs, TrainConfig config) {
  config.family = Family::linear;
  return detail::fit_with_split(pairs, config, 7, "fit_linear");
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const HandModel& model) {
  using nlohmann::json;
  using detail::matrix_json;
  using detail::standardizer_json;
  using detail::wrench_json;
  if (const auto* lin = std::get_if<LinearHandModel>(&model)) {
    return json{{"kind", "linear"}, {"M", matrix_json(lin->M)}, {"bias", wrench_json(lin->bias)}};
  }
  if (const auto* mlp = std::get_if<MLPHandModel>(&model)) {
    json layers = json::array();
    for (const auto& l : mlp->layers) {
      layers.push_back({{"weight", matrix_json(l.weight)},
                        {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    }
    return json{{"kind", "mlp"},
                {"activation", "tanh"},
                {"input", standardizer_json(mlp->input)},
                {"output", standardizer_json(mlp->output)},
                {"layers", std::move(layers)}};
  }
  const auto& rf = std::get<RFHandModel>(model);
  json forests = json::object();
  for (int c = 0; c < 6; ++c) {
    json trees = json::array();
    for (const auto& t : rf.forests[c]) {
      std::vector<int> feature, left, right;
      std::vector<double> threshold, value;
      for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
      }
      trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
    }
    forests[std::string(kChannelNames[c])] = std::move(trees);
  }
  return json{{"kind", "rf"},
              {"input", standardizer_json(rf.input)},
              {"output", standardizer_json(rf.output)},
              {"forests", std::move(forests)}};
}

inline HandModel hand_model_from_json(const nlohmann::json& j) {
  using detail::matrix_from_json;
  using detail::standardizer_from_json;
  using detail::wrench_from_json;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
      LinearHandModel m;
      const Eigen::MatrixXd mm = matrix_from_json(j.at("M"));
      if (mm.rows() != 6 || mm.cols() != 6) throw DataError("linear hand model: M must be 6x6");
      m.M = mm;
      m.bias = wrench_from_json(j.at("bias"));
      if (!m.M.allFinite() || !m.bias.allFinite()) throw DataError("linear hand model: non-finite entry");
      return m;
    }
    if (kind == "mlp") {
      if (j.value("activation", "tanh") != "tanh") throw DataError("mlp hand model: only tanh is supported");
      MLPHandModel m;
      m.input = standardizer_from_json(j.at("input"));
      m.output = standardizer_from_json(j.at("output"));
      for (const auto& l : j.at("layers")) {
        DenseLayer d;
        d.weight = matrix_from_json(l.at("weight"));
        const auto b = l.at("bias").get<std::vector<double>>();
        d.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        m.layers.push_back(std::move(d));
      }
      m.validate();
      return m;
    }
    if (kind == "rf") {
      RFHandModel m;
      m.input = standardizer_from_json(j.at("input"));
      m.output = standardizer_from_json(j.at("output"));
      for (int c = 0; c < 6; ++c) {
        for (const auto& t : j.at("forests").at(std::string(kChannelNames[c]))) {
          const auto feature = t.at("feature").get<std::vector<int>>();
          const auto threshold = t.at("threshold").get<std::vector<double>>();
          const auto left = t.at("left").get<std::vector<int>>();
          const auto right = t.at("right").get<std::vector<int>>();
          const auto value = t.at("value").get<std::vector<double>>();
          const std::size_t n = feature.size();
          if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
            throw DataError("rf hand model: tree arrays differ in length");
          }
          RegressionTree tree;
          for (std::size_t i = 0; i < n; ++i) tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i]});
          m.forests[c].push_back(std::move(tree));
        }
      }
      m.validate();
      return m;
    }
    throw DataError("hand model: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("hand model: malformed JSON: ") + e.what());
  }
}

}  // namespace drillforce::handforce
