#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "drillforce/core.hpp"
#include "drillforce/error.hpp"

namespace drillforce::handforce {

/// Change of the wrist reading relative to a rest baseline.
struct WristDelta {
  Vec3 dforce = Vec3::Zero();   // N
  Vec3 dtorque = Vec3::Zero();  // Nmm

  Wrench as_wrench() const { return make_wrench(dforce, dtorque); }
  static WristDelta from_wrench(const Wrench& w) { return {w.head<3>(), w.tail<3>()}; }
};

inline WristDelta compute_delta(const FTSample& wrist, const FTSample& baseline) {
  if (wrist.frame != Frame::wrist || baseline.frame != Frame::wrist) {
    throw DataError("compute_delta: both samples must be in the wrist frame (got " +
                    std::string(to_string(wrist.frame)) + " and " +
                    std::string(to_string(baseline.frame)) + ")");
  }
  return {wrist.force - baseline.force, wrist.torque - baseline.torque};
}

/// Training pair: wrist delta and the leaked wrench seen on the drill sensor.
struct HandPair {
  Wrench delta = Wrench::Zero();
  Wrench target = Wrench::Zero();
};

/// Per-channel z-score statistics. Channels with zero spread keep unit scale.
struct Standardizer {
  Wrench mean = Wrench::Zero();
  Wrench scale = Wrench::Ones();

  template <typename Get>
  static Standardizer fit(std::span<const HandPair> pairs, Get get) {
    Standardizer s;
    if (pairs.empty()) return s;
    Wrench sum = Wrench::Zero();
    for (const auto& p : pairs) sum += get(p);
    s.mean = sum / static_cast<double>(pairs.size());
    Wrench sq = Wrench::Zero();
    for (const auto& p : pairs) {
      const Wrench d = get(p) - s.mean;
      sq += d.cwiseProduct(d);
    }
    for (int c = 0; c < 6; ++c) {
      const double sd = std::sqrt(sq(c) / static_cast<double>(pairs.size()));
      s.scale(c) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  Wrench apply(const Wrench& w) const { return (w - mean).cwiseQuotient(scale); }
  Wrench invert(const Wrench& z) const { return z.cwiseProduct(scale) + mean; }
};

inline Standardizer fit_input_standardizer(std::span<const HandPair> pairs) {
  return Standardizer::fit(pairs, [](const HandPair& p) -> const Wrench& { return p.delta; });
}
inline Standardizer fit_output_standardizer(std::span<const HandPair> pairs) {
  return Standardizer::fit(pairs, [](const HandPair& p) -> const Wrench& { return p.target; });
}

enum class Family { linear, mlp, rf };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::mlp: return "mlp";
    case Family::rf: return "rf";
  }
  return "unknown";
}

inline Family family_from_string(std::string_view s) {
  if (s == "linear") return Family::linear;
  if (s == "mlp") return Family::mlp;
  if (s == "rf") return Family::rf;
  throw ConfigError("unknown hand-force model family '" + std::string(s) + "'");
}

struct MLPParams {
  std::vector<int> hidden{16};
  double learning_rate = 1e-2;
  int epochs = 2000;
  double momentum = 0.9;  // Adam first-moment decay
};

struct RFParams {
  int trees = 100;
  int max_depth = 8;
  int min_leaf = 1;
};

struct TrainConfig {
  Family family = Family::linear;
  MLPParams mlp;
  RFParams rf;
  std::uint64_t seed = 0;
  double split_fraction = 0.8;  // share of pairs used for training in fit_*

  void validate() const {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
      throw ConfigError("train config: split fraction must lie in (0, 1)");
    }
    if (family == Family::mlp) {
      if (mlp.hidden.empty()) throw ConfigError("train config: MLP needs at least one hidden layer");
      for (int h : mlp.hidden)
        if (h < 1) throw ConfigError("train config: hidden layer sizes must be >= 1");
      if (!(mlp.learning_rate > 0.0)) throw ConfigError("train config: learning rate must be > 0");
      if (mlp.epochs < 1) throw ConfigError("train config: epochs must be >= 1");
      if (!(mlp.momentum >= 0.0 && mlp.momentum < 1.0)) {
        throw ConfigError("train config: momentum must lie in [0, 1)");
      }
    }
    if (family == Family::rf) {
      if (rf.trees < 1) throw ConfigError("train config: tree count must be >= 1");
      if (rf.max_depth < 1) throw ConfigError("train config: max depth must be >= 1");
      if (rf.min_leaf < 1) throw ConfigError("train config: min leaf size must be >= 1");
    }
  }

  std::string label() const {
    std::ostringstream os;
    os << to_string(family);
    if (family == Family::mlp) {
      os << "[h=";
      for (std::size_t i = 0; i < mlp.hidden.size(); ++i) os << (i ? "x" : "") << mlp.hidden[i];
      os << ";lr=" << mlp.learning_rate << ";ep=" << mlp.epochs << "]";
    } else if (family == Family::rf) {
      os << "[trees=" << rf.trees << ";depth=" << rf.max_depth << ";leaf=" << rf.min_leaf << "]";
    }
    return os.str();
  }
};

namespace detail {

inline nlohmann::json wrench_json(const Wrench& w) {
  return nlohmann::json(std::vector<double>(w.data(), w.data() + 6));
}

inline Wrench wrench_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 6) throw DataError("expected a 6-vector in hand model JSON");
  Wrench w;
  for (int i = 0; i < 6; ++i) w(i) = v[static_cast<std::size_t>(i)];
  return w;
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != nc) {
      throw DataError("ragged matrix in hand model JSON");
    }
    for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

inline nlohmann::json standardizer_json(const Standardizer& s) {
  return {{"mean", wrench_json(s.mean)}, {"scale", wrench_json(s.scale)}};
}

inline Standardizer standardizer_from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = wrench_from_json(j.at("mean"));
  s.scale = wrench_from_json(j.at("scale"));
  for (int c = 0; c < 6; ++c)
    if (!(s.scale(c) > 0.0)) throw DataError("standardizer scale must be positive");
  return s;
}

}  // namespace detail

}  // namespace drillforce::handforce
