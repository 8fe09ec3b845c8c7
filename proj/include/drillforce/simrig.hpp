#pragma once

// Deterministic stand-in for the physical rig. Every drill-sensor reading is
// the superposition
//
//   drill = gravity(o) + sag(o) + leak(hand) + tip_wrench(f_tip) + noise
//   wrist = wrist_gravity(o) + hand + noise
//   phantom = -f_tip + noise
//
// where o is the scripted orientation, hand the surgeon's guiding wrench at
// the wrist and f_tip the contact force at the burr. The tip load enters the
// drill sensor as (f, d*f_x, d*f_y, 0), the moment-arm convention the
// estimator inverts.
//
// Hidden rig parameters (leakage matrices, sag surface) come from a rig seed;
// the realization seed drives excitation and noise, so many trials can share
// one rig.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "drillforce/core.hpp"
#include "drillforce/error.hpp"
#include "drillforce/toolweight.hpp"

namespace drillforce::sim {

namespace detail {
/// Engine for one independent random stream of a seed.
inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}
}  // namespace detail

struct NoiseConfig {
  double drill_force = 0.004;     // N, drill-sensor resolution
  double drill_torque = 0.05;     // Nmm
  double wrist_force = 0.02;      // N
  double wrist_torque = 1.0;      // Nmm
  double phantom_force = 0.004;   // N
  double phantom_torque = 0.05;   // Nmm

  NoiseConfig scaled(double k) const {
    return {drill_force * k, drill_torque * k, wrist_force * k, wrist_torque * k, phantom_force * k, phantom_torque * k};
  }
};

struct RateConfig {
  double drill = 100.0;
  double wrist = 200.0;
  double phantom = 100.0;
};

/// Leaked drill wrench as a function of the hand wrench at the wrist:
///   leak = scale * D (L w + kappa * N tanh(gamma w)),  w = D^-1 hand
/// with D = diag(force_ref x3, torque_ref x3).
struct LeakageModel {
  Mat6 linear = Mat6::Zero();
  Mat6 nonlinear = Mat6::Zero();
  double scale = 0.05;
  double nonlinearity = 1.0;  // kappa
  double gain = 3.0;          // gamma
  double force_ref = 5.0;     // N
  double torque_ref = 250.0;  // Nmm

  Wrench reference() const {
    Wrench d;
    d << force_ref, force_ref, force_ref, torque_ref, torque_ref, torque_ref;
    return d;
  }

  Wrench apply(const Wrench& hand) const {
    const Wrench d = reference();
    const Wrench w = hand.cwiseQuotient(d);
    Wrench l = linear * w;
    if (nonlinearity != 0.0) l += nonlinearity * (nonlinear * (gain * w).array().tanh().matrix());
    return scale * l.cwiseProduct(d);
  }

  /// Matrix of the linear part in physical units: scale * D L D^-1.
  Mat6 linear_part() const {
    const Wrench d = reference();
    return scale * d.asDiagonal() * linear * d.cwiseInverse().asDiagonal();
  }
};

/// Orientation-dependent disturbance from cable slack: a degree-3 tensor
/// Bernstein surface per channel over `domain`, coefficients in [-1, 1]
/// scaled by the force/torque amplitudes.
struct SagModel {
  double force_amplitude = 0.03;   // N
  double torque_amplitude = 0.5;   // Nmm
  Workspace domain;
  std::array<Eigen::Matrix4d, 6> coeffs{};

  Wrench evaluate(const Orientation& o) const {
    const double u = (o.roll - domain.roll_min) / (domain.roll_max - domain.roll_min);
    const double v = (o.tilt - domain.tilt_min) / (domain.tilt_max - domain.tilt_min);
    const Eigen::Vector4d a = cubic_basis(u);
    const Eigen::Vector4d b = cubic_basis(v);
    Wrench w;
    for (int c = 0; c < 6; ++c) w(c) = (c < 3 ? force_amplitude : torque_amplitude) * a.dot(coeffs[c] * b);
    return w;
  }

 private:
  // Defined on all of R so mild excursions outside the domain stay smooth.
  static Eigen::Vector4d cubic_basis(double u) {
    const double v = 1.0 - u;
    return {v * v * v, 3.0 * u * v * v, 3.0 * u * u * v, u * u * u};
  }
};

struct RigConfig {
  double mass = 0.5;                      // kg, drill + clamp below the drill sensor
  double g = kStandardGravity;
  Vec3 centroid{10.0, 5.0, -3.0};         // mm
  double d_offset = 120.0;                // mm, drill-sensor origin to burr
  double wrist_mass = 1.2;                // kg, everything below the wrist sensor
  Vec3 wrist_centroid{0.0, 20.0, 60.0};   // mm
  Vec3 hand_lever{0.0, 30.0, 40.0};       // mm, grip point seen from the wrist sensor
  NoiseConfig noise;
  RateConfig rates;
  LeakageModel leakage;
  SagModel sag;
  SensorRange drill_range;
  std::uint64_t rig_seed = 0;  // generated the hidden parameters above
  std::uint64_t seed = 0;      // realization: excitation and noise

  PhysicsModelParams drill_physics() const { return {mass, g, centroid}; }
  PhysicsModelParams wrist_physics() const { return {wrist_mass, g, wrist_centroid}; }

  void validate() const {
    if (!(mass >= 0.0) || !(wrist_mass >= 0.0)) throw ConfigError("rig: masses must be >= 0");
    if (!(g > 0.0)) throw ConfigError("rig: g must be > 0");
    if (!(d_offset > 0.0)) throw ConfigError("rig: d_offset must be > 0");
    const auto& n = noise;
    for (double s : {n.drill_force, n.drill_torque, n.wrist_force, n.wrist_torque, n.phantom_force, n.phantom_torque}) {
      if (!(s >= 0.0)) throw ConfigError("rig: noise standard deviations must be >= 0");
    }
    if (!(rates.drill > 0.0 && rates.wrist > 0.0 && rates.phantom > 0.0)) {
      throw ConfigError("rig: sensor rates must be > 0");
    }
    if (!(sag.domain.roll_max > sag.domain.roll_min && sag.domain.tilt_max > sag.domain.tilt_min)) {
      throw ConfigError("rig: sag domain must have positive extent");
    }
  }
};

/// Default rig with hidden parameters drawn from `rig_seed`.
inline RigConfig default_rig(std::uint64_t rig_seed, std::uint64_t seed = 0) {
  RigConfig rig;
  rig.rig_seed = rig_seed;
  rig.seed = seed;
  auto rng = detail::seeded_engine(rig_seed, 0xA11CEu);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(6.0));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) rig.leakage.linear(r, c) = normal(rng);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) rig.leakage.nonlinear(r, c) = normal(rng);
  for (auto& m : rig.sag.coeffs)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) m(j, k) = unit(rng);
  return rig;
}

enum class ScenarioKind { orientation_sweep, handforce_collection, point_drilling, path_drilling, coarse_drilling };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::orientation_sweep: return "orientation_sweep";
    case ScenarioKind::handforce_collection: return "handforce_collection";
    case ScenarioKind::point_drilling: return "point_drilling";
    case ScenarioKind::path_drilling: return "path_drilling";
    case ScenarioKind::coarse_drilling: return "coarse_drilling";
  }
  return "unknown";
}

inline Workspace default_sweep_range() {
  constexpr double a = std::numbers::pi / 3;
  return {-a, a, -a, a};
}

inline Workspace default_drilling_range() {
  constexpr double a = std::numbers::pi / 4;
  return {-a, a, -a, a};
}

struct Scenario {
  ScenarioKind kind = ScenarioKind::orientation_sweep;
  double duration = 0.0;  // s
  double rest_s = 1.0;    // leading interval with no hand force and no contact

  // orientation_sweep
  int grid = 9;
  int stations = 0;  // > 0: random stations instead of the raster grid
  double dwell_s = 0.5;
  Workspace sweep_range = default_sweep_range();

  // handforce_collection
  double station_s = 10.0;
  double hand_amplitude = 5.0;  // N, peak hand force

  // drilling
  int points = 9;
  double peak_force = 1.5;  // N
  double ramp_s = 0.3;
  double gap_s = 1.0;
  double mean_force = 1.0;     // N, coarse drilling
  double spread = 0.40;        // log-scale spread of the coarse profile
  double lap_s = 4.0;          // s per circle, path drilling
  double lateral_ratio = 0.25;
  double guidance_amplitude = 2.0;  // N, hand force while drilling
  std::optional<Orientation> orientation;  // fixed drilling orientation
  Workspace drilling_range = default_drilling_range();

  void validate() const {
    if (!(duration > 0.0)) throw ConfigError("scenario: duration must be > 0");
    if (!(rest_s >= 0.0)) throw ConfigError("scenario: rest must be >= 0");
  }
};

inline Scenario scenario_orientation_sweep(int grid = 9, double dwell_s = 0.5, Workspace range = default_sweep_range()) {
  if (grid < 1) throw ConfigError("orientation sweep: grid must be >= 1");
  if (!(dwell_s > 0.0)) throw ConfigError("orientation sweep: dwell must be > 0");
  Scenario s;
  s.kind = ScenarioKind::orientation_sweep;
  s.grid = grid;
  s.dwell_s = dwell_s;
  s.sweep_range = range;
  s.rest_s = 0.0;
  s.duration = grid * grid * dwell_s;
  return s;
}

/// Sweep over `stations` uniformly random orientations (held-out validation).
inline Scenario scenario_random_sweep(int stations = 40, double dwell_s = 0.5, Workspace range = default_sweep_range()) {
  if (stations < 1) throw ConfigError("random sweep: stations must be >= 1");
  Scenario s = scenario_orientation_sweep(1, dwell_s, range);
  s.stations = stations;
  s.duration = stations * dwell_s;
  return s;
}

inline Scenario scenario_handforce_collection(int stations = 8, double station_s = 10.0, double amplitude = 5.0) {
  if (stations < 1) throw ConfigError("hand-force collection: stations must be >= 1");
  if (!(station_s > 1.0)) throw ConfigError("hand-force collection: station time must exceed the 1 s rest");
  if (!(amplitude >= 0.0)) throw ConfigError("hand-force collection: amplitude must be >= 0");
  Scenario s;
  s.kind = ScenarioKind::handforce_collection;
  s.stations = stations;
  s.station_s = station_s;
  s.hand_amplitude = amplitude;
  s.duration = stations * station_s;
  return s;
}

/// Ramp-hold-release contact at `n_points` sites separated by zero-force gaps.
inline Scenario scenario_point_drilling(int n_points = 9, double peak_force = 1.5, double dwell_s = 1.0) {
  if (n_points < 1) throw ConfigError("point drilling: n_points must be >= 1");
  if (!(peak_force > 0.0)) throw ConfigError("point drilling: peak force must be > 0");
  if (!(dwell_s > 0.0)) throw ConfigError("point drilling: dwell must be > 0");
  Scenario s;
  s.kind = ScenarioKind::point_drilling;
  s.points = n_points;
  s.peak_force = peak_force;
  s.dwell_s = dwell_s;
  s.duration = s.rest_s + n_points * (2 * s.ramp_s + dwell_s + s.gap_s);
  return s;
}

/// Continuous contact tracing a circle.
inline Scenario scenario_path_drilling(double duration_s = 20.0, double peak_force = 1.5) {
  if (!(duration_s > 2.0)) throw ConfigError("path drilling: duration must exceed 2 s");
  if (!(peak_force > 0.0)) throw ConfigError("path drilling: peak force must be > 0");
  Scenario s;
  s.kind = ScenarioKind::path_drilling;
  s.duration = duration_s;
  s.peak_force = peak_force;
  return s;
}

/// Band-limited stochastic contact (log-normal around `mean_force`).
inline Scenario scenario_coarse_drilling(double duration_s = 30.0, double mean_force = 1.0) {
  if (!(duration_s > 2.0)) throw ConfigError("coarse drilling: duration must exceed 2 s");
  if (!(mean_force >= 0.0)) throw ConfigError("coarse drilling: mean force must be >= 0");
  Scenario s;
  s.kind = ScenarioKind::coarse_drilling;
  s.duration = duration_s;
  s.mean_force = mean_force;
  s.lateral_ratio = 0.3;
  return s;
}

struct TruthSample {
  double t = 0.0;
  Vec3 force = Vec3::Zero();  // tip force acting on the drill, N
};

struct SimOutput {
  SensorStream drill;
  SensorStream wrist;
  SensorStream phantom;
  PoseStream pose;
  std::vector<TruthSample> truth;  // at drill timestamps
  RigConfig rig;
  Scenario scenario;
};

namespace detail {

/// Sum of sinusoids normalized so |s(t)| <= 1 everywhere.
struct BandLimited {
  std::vector<double> freq, phase, amp;
  double norm = 1.0;

  static BandLimited make(std::mt19937_64& rng, double fmin, double fmax, int k = 6) {
    BandLimited b;
    std::uniform_real_distribution<double> f(fmin, fmax), ph(0.0, 2.0 * std::numbers::pi), a(0.5, 1.0);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      b.freq.push_back(f(rng));
      b.phase.push_back(ph(rng));
      b.amp.push_back(a(rng));
      sum += b.amp.back();
    }
    b.norm = sum;
    return b;
  }

  double operator()(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < freq.size(); ++i) s += amp[i] * std::sin(2.0 * std::numbers::pi * freq[i] * t + phase[i]);
    return s / norm;
  }

  /// Same signal rescaled to unit variance (random-phase sum of sines).
  double unit_variance(double t) const {
    double var = 0.0;
    for (double a : amp) var += 0.5 * a * a;
    return (*this)(t) * norm / std::sqrt(var);
  }
};

inline double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

/// Envelope rising over `ramp` after `start` and falling before `end`.
inline double window(double t, double start, double end, double ramp) {
  if (t < start || t > end) return 0.0;
  if (ramp <= 0.0) return 1.0;
  return smoothstep((t - start) / ramp) * smoothstep((end - t) / ramp);
}

struct Station {
  double start = 0.0;
  double end = 0.0;
  Orientation orientation;
};

struct HandSegment {
  double start = 0.0;
  double end = 0.0;
  double amplitude = 0.0;  // N
  std::array<BandLimited, 6> signals;
};

struct ContactEpisode {
  double start = 0.0;
  double hold_start = 0.0;
  double hold_end = 0.0;
  double end = 0.0;
  Vec3 direction = Vec3::UnitZ();
};

/// Time-continuous script of orientation, hand wrench and tip force.
class Script {
 public:
  Script(const RigConfig& rig, const Scenario& sc) : rig_(rig), sc_(sc) {
    auto rng = seeded_engine(rig.seed, 0x5C1Au);
    build(rng);
  }

  Orientation orientation(double t) const {
    for (const auto& s : stations_)
      if (t >= s.start && t < s.end) return s.orientation;
    return stations_.back().orientation;
  }

  Wrench hand(double t) const {
    Wrench w = Wrench::Zero();
    for (const auto& seg : hand_) {
      const double env = window(t, seg.start, seg.end, 0.5);
      if (env == 0.0) continue;
      const double per_axis = seg.amplitude / std::sqrt(3.0);
      Vec3 f;
      for (int i = 0; i < 3; ++i) f(i) = per_axis * seg.signals[static_cast<std::size_t>(i)](t);
      const double twist = 0.25 * seg.amplitude * rig_.hand_lever.norm();
      Vec3 tau = rig_.hand_lever.cross(f);
      for (int i = 0; i < 3; ++i) tau(i) += twist / std::sqrt(3.0) * seg.signals[static_cast<std::size_t>(3 + i)](t);
      w += env * make_wrench(f, tau);
    }
    return w;
  }

  Vec3 tip(double t) const {
    switch (sc_.kind) {
      case ScenarioKind::point_drilling: {
        for (const auto& e : episodes_) {
          if (t <= e.start || t >= e.end) continue;
          double env = 1.0;
          if (t < e.hold_start) env = smoothstep((t - e.start) / (e.hold_start - e.start));
          if (t > e.hold_end) env = smoothstep((e.end - t) / (e.end - e.hold_end));
          const double ripple = 0.9 + 0.1 * std::sin(2.0 * std::numbers::pi * 7.0 * t);
          return sc_.peak_force * env * ripple * e.direction;
        }
        return Vec3::Zero();
      }
      case ScenarioKind::path_drilling: {
        const double env = window(t, sc_.rest_s, sc_.duration - 0.5, 0.5);
        if (env == 0.0) return Vec3::Zero();
        const double theta = 2.0 * std::numbers::pi * (t - sc_.rest_s) / sc_.lap_s + phase_;
        const double mag = sc_.peak_force * (0.75 + 0.25 * std::sin(theta + 0.7));
        const Vec3 dir = Vec3(sc_.lateral_ratio * std::cos(theta), sc_.lateral_ratio * std::sin(theta), 1.0).normalized();
        return env * mag * dir;
      }
      case ScenarioKind::coarse_drilling: {
        const double env = window(t, sc_.rest_s, sc_.duration - 0.5, 0.5);
        if (env == 0.0 || sc_.mean_force == 0.0) return Vec3::Zero();
        const double x = profile_.unit_variance(t);
        const double mag = sc_.mean_force * std::exp(sc_.spread * x - 0.5 * sc_.spread * sc_.spread);
        const Vec3 dir = Vec3(sc_.lateral_ratio * lateral_[0](t), sc_.lateral_ratio * lateral_[1](t), 1.0).normalized();
        return env * mag * dir;
      }
      default:
        return Vec3::Zero();
    }
  }

 private:
  Orientation random_orientation(std::mt19937_64& rng, const Workspace& w) {
    std::uniform_real_distribution<double> r(w.roll_min, w.roll_max), tl(w.tilt_min, w.tilt_max);
    const double roll = r(rng);
    return {roll, tl(rng)};
  }

  HandSegment make_segment(std::mt19937_64& rng, double start, double end, double amplitude) {
    HandSegment seg{start, end, amplitude, {}};
    for (auto& s : seg.signals) s = BandLimited::make(rng, 0.1, 1.5);
    return seg;
  }

  void build(std::mt19937_64& rng) {
    const double T = sc_.duration;
    switch (sc_.kind) {
      case ScenarioKind::orientation_sweep: {
        const auto& w = sc_.sweep_range;
        if (sc_.stations > 0) {
          for (int i = 0; i < sc_.stations; ++i) {
            stations_.push_back({i * sc_.dwell_s, (i + 1) * sc_.dwell_s, random_orientation(rng, w)});
          }
        } else {
          const int n = sc_.grid;
          auto at = [n](double lo, double hi, int i) { return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1); };
          int k = 0;
          for (int i = 0; i < n; ++i) {
            for (int jj = 0; jj < n; ++jj) {
              const int j = (i % 2 == 0) ? jj : n - 1 - jj;  // serpentine raster
              stations_.push_back({k * sc_.dwell_s, (k + 1) * sc_.dwell_s,
                                   {at(w.roll_min, w.roll_max, i), at(w.tilt_min, w.tilt_max, j)}});
              ++k;
            }
          }
        }
        break;
      }
      case ScenarioKind::handforce_collection: {
        for (int i = 0; i < sc_.stations; ++i) {
          const double s0 = i * sc_.station_s;
          const double s1 = s0 + sc_.station_s;
          stations_.push_back({s0, s1, random_orientation(rng, sc_.sweep_range)});
          hand_.push_back(make_segment(rng, s0 + sc_.rest_s, s1 - 0.2, sc_.hand_amplitude));
        }
        break;
      }
      case ScenarioKind::point_drilling:
      case ScenarioKind::path_drilling:
      case ScenarioKind::coarse_drilling: {
        const Orientation o = sc_.orientation ? *sc_.orientation : random_orientation(rng, sc_.drilling_range);
        stations_.push_back({0.0, T + 1.0, o});
        if (sc_.guidance_amplitude > 0.0) hand_.push_back(make_segment(rng, sc_.rest_s, T, sc_.guidance_amplitude));
        std::uniform_real_distribution<double> lat(-sc_.lateral_ratio, sc_.lateral_ratio);
        if (sc_.kind == ScenarioKind::point_drilling) {
          double t = sc_.rest_s;
          for (int p = 0; p < sc_.points; ++p) {
            ContactEpisode e;
            e.start = t;
            e.hold_start = t + sc_.ramp_s;
            e.hold_end = e.hold_start + sc_.dwell_s;
            e.end = e.hold_end + sc_.ramp_s;
            const double lx = lat(rng);
            e.direction = Vec3(lx, lat(rng), 1.0).normalized();
            episodes_.push_back(e);
            t = e.end + sc_.gap_s;
          }
        } else if (sc_.kind == ScenarioKind::path_drilling) {
          phase_ = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
        } else {
          profile_ = BandLimited::make(rng, 0.2, 3.0, 8);
          lateral_[0] = BandLimited::make(rng, 0.1, 1.0);
          lateral_[1] = BandLimited::make(rng, 0.1, 1.0);
        }
        break;
      }
    }
  }

  const RigConfig& rig_;
  const Scenario& sc_;
  std::vector<Station> stations_;
  std::vector<HandSegment> hand_;
  std::vector<ContactEpisode> episodes_;
  double phase_ = 0.0;
  BandLimited profile_;
  std::array<BandLimited, 2> lateral_;
};

inline std::vector<double> sample_times(double duration, double rate) {
  // half-open [0, duration): a 10 s record at 100 Hz has 1000 samples
  const auto n = static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / rate;
  return t;
}

class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, std::uint32_t stream) : rng_(seeded_engine(seed, stream)) {}

  Wrench draw(double force_std, double torque_std) {
    Wrench w;
    for (int i = 0; i < 6; ++i) {
      const double z = normal_(rng_);
      w(i) = z * (i < 3 ? force_std : torque_std);
    }
    return w;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace detail

/// Drill-sensor wrench of a tip load under the moment-arm convention.
inline Wrench tip_wrench(const Vec3& f_tip, double d_offset) {
  Wrench w;
  w << f_tip, d_offset * f_tip.x(), d_offset * f_tip.y(), 0.0;
  return w;
}

/// Noise-free drill reading at one instant (superposition of all sources).
inline Wrench drill_wrench(const RigConfig& rig, const Orientation& o, const Wrench& hand, const Vec3& f_tip) {
  return physics_wrench(rig.drill_physics(), o) + rig.sag.evaluate(o) + rig.leakage.apply(hand) +
         tip_wrench(f_tip, rig.d_offset);
}

inline SimOutput simulate(const RigConfig& rig, const Scenario& scenario) {
  rig.validate();
  scenario.validate();
  SimOutput out;
  out.rig = rig;
  out.scenario = scenario;
  const detail::Script script(out.rig, out.scenario);

  const auto drill_t = detail::sample_times(scenario.duration, rig.rates.drill);
  const auto wrist_t = detail::sample_times(scenario.duration, rig.rates.wrist);
  const auto phantom_t = detail::sample_times(scenario.duration, rig.rates.phantom);

  detail::NoiseSource drill_noise(rig.seed, 1), wrist_noise(rig.seed, 2), phantom_noise(rig.seed, 3);
  const auto wrist_gravity = rig.wrist_physics();

  std::vector<FTSample> drill;
  std::vector<PoseSample> pose;
  drill.reserve(drill_t.size());
  pose.reserve(drill_t.size());
  out.truth.reserve(drill_t.size());
  for (double t : drill_t) {
    const Orientation o = script.orientation(t);
    const Vec3 f = script.tip(t);
    Wrench w = drill_wrench(rig, o, script.hand(t), f);
    w += drill_noise.draw(rig.noise.drill_force, rig.noise.drill_torque);
    drill.push_back(make_sample(t, w, Frame::drill, rig.drill_range));
    pose.push_back({t, o});
    out.truth.push_back({t, f});
  }

  std::vector<FTSample> wrist;
  wrist.reserve(wrist_t.size());
  for (double t : wrist_t) {
    const Orientation o = script.orientation(t);
    Wrench w = physics_wrench(wrist_gravity, o) + script.hand(t);
    w += wrist_noise.draw(rig.noise.wrist_force, rig.noise.wrist_torque);
    wrist.push_back(make_sample(t, w, Frame::wrist));
  }

  std::vector<FTSample> phantom;
  phantom.reserve(phantom_t.size());
  for (double t : phantom_t) {
    Wrench w = make_wrench(-script.tip(t), Vec3::Zero());
    w += phantom_noise.draw(rig.noise.phantom_force, rig.noise.phantom_torque);
    phantom.push_back(make_sample(t, w, Frame::phantom));
  }

  out.drill = SensorStream(Frame::drill, rig.rates.drill, std::move(drill));
  out.wrist = SensorStream(Frame::wrist, rig.rates.wrist, std::move(wrist));
  out.phantom = SensorStream(Frame::phantom, rig.rates.phantom, std::move(phantom));
  out.pose = PoseStream(std::move(pose));
  return out;
}

// ---------------------------------------------------------------------------
// JSON (rig manifest)

namespace detail {

inline nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline Vec3 vec_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw DataError("rig manifest: expected a 3-vector");
  return {v[0], v[1], v[2]};
}

inline nlohmann::json mat_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename M>
void mat_from_json(const nlohmann::json& j, M& m) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (static_cast<Eigen::Index>(rows.size()) != m.rows()) throw DataError("rig manifest: matrix row count");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != m.cols()) {
      throw DataError("rig manifest: matrix column count");
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
}

inline nlohmann::json workspace_json(const Workspace& w) { return {w.roll_min, w.roll_max, w.tilt_min, w.tilt_max}; }

inline Workspace workspace_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw DataError("rig manifest: workspace needs 4 entries");
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace detail

inline nlohmann::json to_json(const RigConfig& r) {
  using nlohmann::json;
  using namespace detail;
  json sag_coeffs = json::object();
  for (int c = 0; c < 6; ++c) sag_coeffs[std::string(kChannelNames[c])] = mat_json(r.sag.coeffs[c]);
  return json{
      {"rig_seed", r.rig_seed},
      {"seed", r.seed},
      {"mass", r.mass},
      {"g", r.g},
      {"centroid", vec_json(r.centroid)},
      {"d_offset", r.d_offset},
      {"wrist_mass", r.wrist_mass},
      {"wrist_centroid", vec_json(r.wrist_centroid)},
      {"hand_lever", vec_json(r.hand_lever)},
      {"noise",
       {{"drill_force", r.noise.drill_force},
        {"drill_torque", r.noise.drill_torque},
        {"wrist_force", r.noise.wrist_force},
        {"wrist_torque", r.noise.wrist_torque},
        {"phantom_force", r.noise.phantom_force},
        {"phantom_torque", r.noise.phantom_torque}}},
      {"rates", {{"drill", r.rates.drill}, {"wrist", r.rates.wrist}, {"phantom", r.rates.phantom}}},
      {"leakage",
       {{"linear", mat_json(r.leakage.linear)},
        {"nonlinear", mat_json(r.leakage.nonlinear)},
        {"scale", r.leakage.scale},
        {"nonlinearity", r.leakage.nonlinearity},
        {"gain", r.leakage.gain},
        {"force_ref", r.leakage.force_ref},
        {"torque_ref", r.leakage.torque_ref}}},
      {"sag",
       {{"force_amplitude", r.sag.force_amplitude},
        {"torque_amplitude", r.sag.torque_amplitude},
        {"domain", workspace_json(r.sag.domain)},
        {"coeffs", std::move(sag_coeffs)}}},
      {"drill_range", {{"max_force", r.drill_range.max_force}, {"max_torque", r.drill_range.max_torque}}},
  };
}

inline RigConfig rig_from_json(const nlohmann::json& j) {
  using namespace detail;
  try {
    RigConfig r;
    r.rig_seed = j.at("rig_seed").get<std::uint64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mass = j.at("mass").get<double>();
    r.g = j.at("g").get<double>();
    r.centroid = vec_from_json(j.at("centroid"));
    r.d_offset = j.at("d_offset").get<double>();
    r.wrist_mass = j.at("wrist_mass").get<double>();
    r.wrist_centroid = vec_from_json(j.at("wrist_centroid"));
    r.hand_lever = vec_from_json(j.at("hand_lever"));
    const auto& n = j.at("noise");
    r.noise = {n.at("drill_force").get<double>(),  n.at("drill_torque").get<double>(),
               n.at("wrist_force").get<double>(),  n.at("wrist_torque").get<double>(),
               n.at("phantom_force").get<double>(), n.at("phantom_torque").get<double>()};
    const auto& rt = j.at("rates");
    r.rates = {rt.at("drill").get<double>(), rt.at("wrist").get<double>(), rt.at("phantom").get<double>()};
    const auto& l = j.at("leakage");
    mat_from_json(l.at("linear"), r.leakage.linear);
    mat_from_json(l.at("nonlinear"), r.leakage.nonlinear);
    r.leakage.scale = l.at("scale").get<double>();
    r.leakage.nonlinearity = l.at("nonlinearity").get<double>();
    r.leakage.gain = l.at("gain").get<double>();
    r.leakage.force_ref = l.at("force_ref").get<double>();
    r.leakage.torque_ref = l.at("torque_ref").get<double>();
    const auto& s = j.at("sag");
    r.sag.force_amplitude = s.at("force_amplitude").get<double>();
    r.sag.torque_amplitude = s.at("torque_amplitude").get<double>();
    r.sag.domain = workspace_from_json(s.at("domain"));
    for (int c = 0; c < 6; ++c) mat_from_json(s.at("coeffs").at(std::string(kChannelNames[c])), r.sag.coeffs[c]);
    const auto& dr = j.at("drill_range");
    r.drill_range = {dr.at("max_force").get<double>(), dr.at("max_torque").get<double>()};
    r.validate();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("rig manifest: malformed JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("rig manifest: ") + e.what());
  }
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}, {"duration", s.duration}, {"rest_s", s.rest_s}};
  switch (s.kind) {
    case ScenarioKind::orientation_sweep:
      j["grid"] = s.grid;
      j["stations"] = s.stations;
      j["dwell_s"] = s.dwell_s;
      j["range"] = detail::workspace_json(s.sweep_range);
      break;
    case ScenarioKind::handforce_collection:
      j["stations"] = s.stations;
      j["station_s"] = s.station_s;
      j["hand_amplitude_N"] = s.hand_amplitude;
      j["range"] = detail::workspace_json(s.sweep_range);
      break;
    default:
      j["points"] = s.points;
      j["peak_force_N"] = s.peak_force;
      j["dwell_s"] = s.dwell_s;
      j["mean_force_N"] = s.mean_force;
      j["spread"] = s.spread;
      j["lap_s"] = s.lap_s;
      j["lateral_ratio"] = s.lateral_ratio;
      j["guidance_amplitude_N"] = s.guidance_amplitude;
      if (s.orientation) j["orientation"] = {s.orientation->roll, s.orientation->tilt};
      j["drilling_range"] = detail::workspace_json(s.drilling_range);
      break;
  }
  return j;
}

}  // namespace drillforce::sim
