#pragma once

// Tool-weight (gravity) compensation. Two interchangeable models predict the
// wrench the instrument's own weight induces on a sensor at a given
// orientation:
//   - a rigid-body model with mass m and centroid C:
//       F = R^T (0, 0, -m g),  tau = C x F
//   - a model-free tensor-product Bernstein surface fitted per channel by
//     least squares over (roll, tilt), each axis mapped affinely to [0, 1].

#include <array>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "drillforce/core.hpp"
#include "drillforce/error.hpp"
#include "drillforce/linalg.hpp"

namespace drillforce {

/// One calibration observation: a sensor reading taken at a known orientation.
struct CalibrationPoint {
  Orientation orientation;
  FTSample reading;
};

// ---------------------------------------------------------------------------
// Rigid-body model

struct PhysicsModelParams {
  double mass = 0.0;               // kg
  double g = kStandardGravity;     // m/s^2
  Vec3 centroid = Vec3::Zero();    // mm, from the sensor origin

  void validate() const {
    if (!(mass >= 0.0) || !std::isfinite(mass)) throw ConfigError("physics model: mass must be >= 0");
    if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("physics model: g must be > 0");
    if (!centroid.allFinite()) throw ConfigError("physics model: centroid must be finite");
  }
};

inline Wrench physics_wrench(const PhysicsModelParams& p, const Orientation& o) {
  const Vec3 force = rotation_from_roll_tilt(o).transpose() * (world_down() * (p.mass * p.g));
  return make_wrench(force, skew(p.centroid) * force);
}

inline FTSample physics_predict(const PhysicsModelParams& p, const Orientation& o,
                                Frame frame = Frame::drill) {
  return make_sample(0.0, physics_wrench(p, o), frame);
}

/// Minimum singular-value ratio of the stacked skew(F) blocks.
inline constexpr double kMinDirectionSpread = 1e-2;

/// Estimates mass from the mean force magnitude and the centroid from the
/// stacked linear system tau_i = -skew(F_i) C.
inline PhysicsModelParams fit_physics(std::span<const CalibrationPoint> data,
                                      double g = kStandardGravity) {
  if (data.size() < 3) {
    throw DataError("fit_physics: need at least 3 samples, got " + std::to_string(data.size()));
  }
  double sum_norm = 0.0;
  Eigen::MatrixXd a(3 * data.size(), 3);
  Eigen::VectorXd b(3 * data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i].reading;
    sum_norm += s.force.norm();
    a.block<3, 3>(3 * i, 0) = -skew(s.force);
    b.segment<3>(3 * i) = s.torque;
  }
  PhysicsModelParams p;
  p.g = g;
  p.mass = sum_norm / (static_cast<double>(data.size()) * g);

  // skew(F) has rank 2 for every F, so C is observable only when the force
  // directions differ. sv(2)/sv(0) is roughly their rms angular spread; sensor
  // noise alone scatters a single orientation by ~1e-3 rad, so require ten
  // times that before trusting the along-gravity component of C.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(2) < kMinDirectionSpread * sv(0)) {
    std::ostringstream os;
    os << "fit_physics: centroid unobservable; force directions span only "
       << (sv(0) > 0.0 ? sv(2) / sv(0) : 0.0) << " rad (need " << kMinDirectionSpread
       << "; collect readings at more than one orientation)";
    throw DataError(os.str());
  }
  p.centroid = svd.solve(b);
  return p;
}

// ---------------------------------------------------------------------------
// Bernstein surface model

/// B_{j,n}(u) = C(n, j) u^j (1 - u)^(n - j), j = 0..n.
inline Eigen::VectorXd bernstein_basis(int n, double u) {
  if (n < 0) throw ConfigError("bernstein_basis: degree must be >= 0");
  if (!(u >= 0.0 && u <= 1.0)) {
    std::ostringstream os;
    os << "bernstein_basis: argument " << u << " outside [0, 1]";
    throw DataError(os.str());
  }
  Eigen::VectorXd up(n + 1), vp(n + 1), out(n + 1);
  up(0) = 1.0;
  vp(0) = 1.0;
  for (int i = 1; i <= n; ++i) {
    up(i) = up(i - 1) * u;
    vp(i) = vp(i - 1) * (1.0 - u);
  }
  double binom = 1.0;
  for (int j = 0; j <= n; ++j) {
    out(j) = binom * up(j) * vp(n - j);
    binom = binom * (n - j) / (j + 1);
  }
  return out;
}

struct BPSurfaceModel {
  int degree = 0;
  Workspace domain;
  // coeffs[channel](j, k): j indexes the roll basis, k the tilt basis.
  std::array<Eigen::MatrixXd, 6> coeffs;

  void validate() const {
    if (degree < 0) throw ConfigError("bp model: degree must be >= 0");
    if (!(domain.roll_max > domain.roll_min) || !(domain.tilt_max > domain.tilt_min)) {
      throw ConfigError("bp model: domain must have positive extent on both axes");
    }
    for (const auto& c : coeffs) {
      if (c.rows() != degree + 1 || c.cols() != degree + 1) {
        throw ConfigError("bp model: coefficient matrix must be (degree+1)x(degree+1)");
      }
      if (!c.allFinite()) throw ConfigError("bp model: non-finite coefficient");
    }
  }
};

struct BPFitResult {
  BPSurfaceModel model;
  Wrench train_rmse = Wrench::Zero();
  Wrench train_max_abs = Wrench::Zero();
};

/// Result of evaluating a tool-weight model; `clamped` is set when the query
/// sat marginally outside the fitted domain and was pulled back onto it.
struct ToolWeightEvaluation {
  Wrench wrench = Wrench::Zero();
  bool clamped = false;
};

namespace detail {

inline constexpr double kMaxOvershoot = 0.05;

// Maps x from [lo, hi] to [0, 1]; clamps up to 5% of the extent beyond either
// end, throws beyond that.
inline double normalize_axis(double x, double lo, double hi, const char* axis, bool& clamped) {
  const double extent = hi - lo;
  double u = (x - lo) / extent;
  if (u < 0.0 || u > 1.0) {
    const double over = u < 0.0 ? -u : u - 1.0;
    if (over > kMaxOvershoot) {
      std::ostringstream os;
      os << "tool-weight model: " << axis << "=" << x << " outside fitted domain [" << lo << ", "
         << hi << "] by more than 5% (extrapolation refused)";
      throw DataError(os.str());
    }
    clamped = true;
    u = u < 0.0 ? 0.0 : 1.0;
  }
  return u;
}

inline Eigen::RowVectorXd tensor_row(int n, double u, double v) {
  const Eigen::VectorXd a = bernstein_basis(n, u);
  const Eigen::VectorXd b = bernstein_basis(n, v);
  Eigen::RowVectorXd row((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int k = 0; k <= n; ++k) row(j * (n + 1) + k) = a(j) * b(k);
  return row;
}

inline std::size_t count_distinct(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

inline ToolWeightEvaluation bp_evaluate(const BPSurfaceModel& model, const Orientation& o) {
  ToolWeightEvaluation ev;
  const auto& d = model.domain;
  const double u = detail::normalize_axis(o.roll, d.roll_min, d.roll_max, "roll", ev.clamped);
  const double v = detail::normalize_axis(o.tilt, d.tilt_min, d.tilt_max, "tilt", ev.clamped);
  const Eigen::VectorXd a = bernstein_basis(model.degree, u);
  const Eigen::VectorXd b = bernstein_basis(model.degree, v);
  for (int c = 0; c < 6; ++c) ev.wrench(c) = a.dot(model.coeffs[c] * b);
  return ev;
}

inline FTSample bp_predict(const BPSurfaceModel& model, const Orientation& o,
                           Frame frame = Frame::drill) {
  return make_sample(0.0, bp_evaluate(model, o).wrench, frame);
}

/// Least-squares fit of a degree-n tensor Bernstein surface to each of the six
/// channels. When `domain` is omitted it is taken from the data's range.
inline BPFitResult bp_fit(std::span<const CalibrationPoint> data, int degree,
                          std::optional<Workspace> domain = std::nullopt) {
  if (degree < 0) throw ConfigError("bp_fit: degree must be >= 0");
  const std::size_t ncols = static_cast<std::size_t>((degree + 1) * (degree + 1));
  if (data.size() < ncols) {
    throw DataError("bp_fit: degree " + std::to_string(degree) + " needs at least " +
                    std::to_string(ncols) + " samples, got " + std::to_string(data.size()));
  }
  std::vector<double> rolls, tilts;
  rolls.reserve(data.size());
  tilts.reserve(data.size());
  for (const auto& p : data) {
    rolls.push_back(p.orientation.roll);
    tilts.push_back(p.orientation.tilt);
  }
  const std::size_t need = static_cast<std::size_t>(degree + 1);
  const std::size_t distinct_roll = detail::count_distinct(rolls);
  const std::size_t distinct_tilt = detail::count_distinct(tilts);
  auto axis_error = [&](const char* axis, std::size_t have) {
    return DataError(std::string("bp_fit: rank-deficient design matrix; ") + axis + " axis has " +
                     std::to_string(have) + " distinct value(s), degree " + std::to_string(degree) +
                     " needs at least " + std::to_string(need));
  };
  // An inferred domain also needs two distinct values per axis to have extent.
  const std::size_t need_axis = domain ? need : std::max<std::size_t>(need, 2);
  if (distinct_roll < need_axis) throw axis_error("roll", distinct_roll);
  if (distinct_tilt < need_axis) throw axis_error("tilt", distinct_tilt);

  BPSurfaceModel model;
  model.degree = degree;
  if (domain) {
    model.domain = *domain;
  } else {
    const auto [rmin, rmax] = std::minmax_element(rolls.begin(), rolls.end());
    const auto [tmin, tmax] = std::minmax_element(tilts.begin(), tilts.end());
    model.domain = {*rmin, *rmax, *tmin, *tmax};
  }
  if (!(model.domain.roll_max > model.domain.roll_min) ||
      !(model.domain.tilt_max > model.domain.tilt_min)) {
    throw ConfigError("bp_fit: domain must have positive extent on both axes");
  }

  Eigen::MatrixXd design(data.size(), ncols);
  Eigen::MatrixXd rhs(data.size(), 6);
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool clamped = false;
    const auto& d = model.domain;
    const double u = detail::normalize_axis(data[i].orientation.roll, d.roll_min, d.roll_max, "roll", clamped);
    const double v = detail::normalize_axis(data[i].orientation.tilt, d.tilt_min, d.tilt_max, "tilt", clamped);
    design.row(i) = detail::tensor_row(degree, u, v);
    rhs.row(i) = data[i].reading.wrench().transpose();
  }
  const auto ls = linalg::solve_least_squares(design, rhs);
  if (!ls.full_rank) {
    throw DataError("bp_fit: rank-deficient design matrix (rank " + std::to_string(ls.rank) +
                    " of " + std::to_string(ncols) +
                    "); orientations do not span a tensor grid in roll x tilt");
  }
  for (int c = 0; c < 6; ++c) {
    model.coeffs[c].resize(degree + 1, degree + 1);
    for (int j = 0; j <= degree; ++j)
      for (int k = 0; k <= degree; ++k) model.coeffs[c](j, k) = ls.solution(j * (degree + 1) + k, c);
  }
  model.validate();

  BPFitResult out;
  out.model = std::move(model);
  const Eigen::MatrixXd resid = design * ls.solution - rhs;
  for (int c = 0; c < 6; ++c) {
    out.train_rmse(c) = std::sqrt(resid.col(c).squaredNorm() / static_cast<double>(data.size()));
    out.train_max_abs(c) = resid.col(c).cwiseAbs().maxCoeff();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Either model behind one interface

using ToolWeightModel = std::variant<PhysicsModelParams, BPSurfaceModel>;

inline ToolWeightEvaluation evaluate_tool_weight(const ToolWeightModel& model, const Orientation& o) {
  return std::visit(
      [&](const auto& m) -> ToolWeightEvaluation {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PhysicsModelParams>) {
          return {physics_wrench(m, o), false};
        } else {
          return bp_evaluate(m, o);
        }
      },
      model);
}

inline std::string_view kind_of(const ToolWeightModel& model) {
  return std::holds_alternative<PhysicsModelParams>(model) ? "physics" : "bp";
}

/// Per-channel RMSE and max-abs residual of a model against observations.
struct ResidualReport {
  Wrench rmse = Wrench::Zero();
  Wrench max_abs = Wrench::Zero();
  std::size_t clamped = 0;
};

inline ResidualReport tool_weight_residuals(const ToolWeightModel& model,
                                            std::span<const CalibrationPoint> data) {
  ResidualReport r;
  if (data.empty()) return r;
  Wrench sq = Wrench::Zero();
  for (const auto& p : data) {
    const auto ev = evaluate_tool_weight(model, p.orientation);
    if (ev.clamped) ++r.clamped;
    const Wrench e = ev.wrench - p.reading.wrench();
    sq += e.cwiseProduct(e);
    r.max_abs = r.max_abs.cwiseMax(e.cwiseAbs());
  }
  r.rmse = (sq / static_cast<double>(data.size())).cwiseSqrt();
  return r;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ToolWeightModel& model) {
  using nlohmann::json;
  if (const auto* p = std::get_if<PhysicsModelParams>(&model)) {
    return json{{"kind", "physics"},
                {"m", p->mass},
                {"g", p->g},
                {"C", {p->centroid.x(), p->centroid.y(), p->centroid.z()}}};
  }
  const auto& bp = std::get<BPSurfaceModel>(model);
  json coeffs = json::object();
  for (int c = 0; c < 6; ++c) {
    json rows = json::array();
    for (int j = 0; j <= bp.degree; ++j) {
      json row = json::array();
      for (int k = 0; k <= bp.degree; ++k) row.push_back(bp.coeffs[c](j, k));
      rows.push_back(std::move(row));
    }
    coeffs[std::string(kChannelNames[c])] = std::move(rows);
  }
  return json{{"kind", "bp"},
              {"degree", bp.degree},
              {"domain", {bp.domain.roll_min, bp.domain.roll_max, bp.domain.tilt_min, bp.domain.tilt_max}},
              {"coeffs", std::move(coeffs)}};
}

inline ToolWeightModel tool_weight_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "physics") {
      PhysicsModelParams p;
      p.mass = j.at("m").get<double>();
      p.g = j.value("g", kStandardGravity);
      const auto c = j.at("C").get<std::vector<double>>();
      if (c.size() != 3) throw DataError("physics model: C must have 3 components");
      p.centroid = {c[0], c[1], c[2]};
      p.validate();
      return p;
    }
    if (kind == "bp") {
      BPSurfaceModel m;
      m.degree = j.at("degree").get<int>();
      const auto d = j.at("domain").get<std::vector<double>>();
      if (d.size() != 4) throw DataError("bp model: domain must have 4 entries");
      m.domain = {d[0], d[1], d[2], d[3]};
      for (int c = 0; c < 6; ++c) {
        const auto rows = j.at("coeffs").at(std::string(kChannelNames[c])).get<std::vector<std::vector<double>>>();
        m.coeffs[c].resize(static_cast<Eigen::Index>(rows.size()),
                           rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].size() != rows[0].size()) throw DataError("bp model: ragged coefficient matrix");
          for (std::size_t k = 0; k < rows[r].size(); ++k) m.coeffs[c](r, k) = rows[r][k];
        }
      }
      m.validate();
      return m;
    }
    throw DataError("tool-weight model: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("tool-weight model: malformed JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
}

}  // namespace drillforce
