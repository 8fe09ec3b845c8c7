#pragma once

// Geometric primitives and timestamped sensor streams shared by every stage
// of the calibration pipeline.
//
// Frame convention: the drill-sensor attitude in the world is
//   R(roll, tilt) = R_y(tilt) * R_x(roll)
// and world gravity points along -z. A vector expressed in world
// coordinates maps into the sensor frame with R^T.
//
// Units: N for force, Nmm for torque, mm for lengths, s for time,
// rad for angles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "drillforce/error.hpp"

namespace drillforce {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using RotationMatrix = Eigen::Matrix3d;
using Wrench = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kStandardGravity = 9.80665;

/// Channel names in wrench order.
inline constexpr std::string_view kChannelNames[6] = {"fx", "fy", "fz", "tx", "ty", "tz"};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

inline Wrench make_wrench(const Vec3& force, const Vec3& torque) {
  Wrench w;
  w << force, torque;
  return w;
}

struct Orientation {
  double roll = 0.0;
  double tilt = 0.0;

  friend bool operator==(const Orientation&, const Orientation&) = default;
};

/// Angular limits of the robot workspace.
struct Workspace {
  double roll_min = -std::numbers::pi / 2;
  double roll_max = std::numbers::pi / 2;
  double tilt_min = -std::numbers::pi / 2;
  double tilt_max = std::numbers::pi / 2;

  bool contains(const Orientation& o) const {
    return o.roll >= roll_min && o.roll <= roll_max && o.tilt >= tilt_min && o.tilt <= tilt_max;
  }
};

enum class Frame { drill, wrist, phantom };

inline std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::drill: return "drill";
    case Frame::wrist: return "wrist";
    case Frame::phantom: return "phantom";
  }
  return "unknown";
}

inline Frame frame_from_string(std::string_view s) {
  if (s == "drill") return Frame::drill;
  if (s == "wrist") return Frame::wrist;
  if (s == "phantom") return Frame::phantom;
  throw ConfigError("unknown sensor frame '" + std::string(s) + "'");
}

/// Measurement range of a sensor. Readings beyond it are flagged, not clipped.
struct SensorRange {
  double max_force = 18.0;    // N
  double max_torque = 250.0;  // Nmm

  static SensorRange unlimited() {
    return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  static SensorRange for_frame(Frame f) {
    return f == Frame::drill ? SensorRange{} : unlimited();
  }
};

struct FTSample {
  double t = 0.0;
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  Frame frame = Frame::drill;
  bool saturated = false;

  Wrench wrench() const { return make_wrench(force, torque); }
};

inline bool exceeds(const FTSample& s, const SensorRange& range) {
  return s.force.norm() > range.max_force || s.torque.norm() > range.max_torque;
}

/// Builds a sample from a 6-vector and flags saturation against `range`.
inline FTSample make_sample(double t, const Wrench& w, Frame frame,
                            const SensorRange& range = SensorRange::unlimited()) {
  FTSample s{t, w.head<3>(), w.tail<3>(), frame, false};
  s.saturated = exceeds(s, range);
  return s;
}

namespace detail {

inline std::string time_str(double t) {
  std::ostringstream os;
  os.precision(12);
  os << t;
  return os.str();
}

template <typename Times>
void require_strictly_increasing(const Times& times, std::string_view what) {
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw DataError(std::string(what) + ": timestamps not strictly increasing at index " +
                      std::to_string(i) + " (t=" + time_str(times[i]) + " after t=" +
                      time_str(times[i - 1]) + ")");
    }
  }
}

// Index of the left knot of the interval containing t, for t in [times.front(), times.back()].
inline std::size_t bracket(const std::vector<double>& times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times.begin());
  if (hi >= times.size()) return times.size() >= 2 ? times.size() - 2 : 0;
  return hi == 0 ? 0 : hi - 1;
}

}  // namespace detail

/// Ordered samples from one sensor at a nominal rate.
class SensorStream {
 public:
  SensorStream() = default;

  SensorStream(Frame frame, double nominal_rate, std::vector<FTSample> samples)
      : frame_(frame), nominal_rate_(nominal_rate), samples_(std::move(samples)) {
    if (!(nominal_rate_ > 0.0)) throw ConfigError("sensor stream: nominal rate must be positive");
    times_.reserve(samples_.size());
    for (const auto& s : samples_) {
      if (s.frame != frame_) {
        throw DataError("sensor stream: sample frame '" + std::string(to_string(s.frame)) +
                        "' does not match stream frame '" + std::string(to_string(frame_)) + "'");
      }
      if (!std::isfinite(s.t) || !s.force.allFinite() || !s.torque.allFinite()) {
        throw DataError("sensor stream: non-finite value at t=" + detail::time_str(s.t));
      }
      times_.push_back(s.t);
    }
    detail::require_strictly_increasing(times_, "sensor stream");
    if (samples_.size() >= 2) {
      double rate = static_cast<double>(samples_.size() - 1) / (times_.back() - times_.front());
      if (std::abs(rate - nominal_rate_) > 0.1 * nominal_rate_) {
        std::ostringstream os;
        os << "sensor stream (" << to_string(frame_) << "): observed rate " << rate
           << " Hz deviates more than 10% from nominal " << nominal_rate_ << " Hz";
        throw DataError(os.str());
      }
    }
  }

  Frame frame() const { return frame_; }
  double nominal_rate() const { return nominal_rate_; }
  const std::vector<FTSample>& samples() const { return samples_; }
  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double first_time() const { return times_.front(); }
  double last_time() const { return times_.back(); }
  std::size_t saturation_count() const {
    return static_cast<std::size_t>(
        std::count_if(samples_.begin(), samples_.end(), [](const auto& s) { return s.saturated; }));
  }

 private:
  Frame frame_ = Frame::drill;
  double nominal_rate_ = 100.0;
  std::vector<FTSample> samples_;
  std::vector<double> times_;
};

struct PoseSample {
  double t = 0.0;
  Orientation orientation;
};

class PoseStream {
 public:
  PoseStream() = default;

  explicit PoseStream(std::vector<PoseSample> samples) : samples_(std::move(samples)) {
    times_.reserve(samples_.size());
    for (const auto& s : samples_) {
      if (!std::isfinite(s.t) || !std::isfinite(s.orientation.roll) ||
          !std::isfinite(s.orientation.tilt)) {
        throw DataError("pose stream: non-finite value at t=" + detail::time_str(s.t));
      }
      times_.push_back(s.t);
    }
    detail::require_strictly_increasing(times_, "pose stream");
  }

  const std::vector<PoseSample>& samples() const { return samples_; }
  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double first_time() const { return times_.front(); }
  double last_time() const { return times_.back(); }

 private:
  std::vector<PoseSample> samples_;
  std::vector<double> times_;
};

inline RotationMatrix rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  RotationMatrix r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline RotationMatrix rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  RotationMatrix r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

/// Attitude of the drill-sensor frame in the world: R_y(tilt) * R_x(roll).
inline RotationMatrix rotation_from_roll_tilt(const Orientation& o) {
  return rotation_y(o.tilt) * rotation_x(o.roll);
}

/// Cross-product matrix: skew(v) * w == v.cross(w).
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

/// Gravity direction in world coordinates (unit vector, pointing down).
inline Vec3 world_down() { return {0.0, 0.0, -1.0}; }

/// Linear interpolation of every channel at the requested times.
/// Requests outside [first, last] are rejected; nothing is extrapolated.
inline std::vector<FTSample> resample_linear(const SensorStream& stream,
                                             const std::vector<double>& target_times) {
  std::vector<FTSample> out;
  out.reserve(target_times.size());
  if (stream.empty()) {
    if (!target_times.empty()) throw DataError("resample_linear: stream is empty");
    return out;
  }
  const auto& times = stream.times();
  const auto& samples = stream.samples();
  for (double t : target_times) {
    if (!(t >= times.front() && t <= times.back())) {
      throw DataError("resample_linear: time " + detail::time_str(t) + " outside stream range [" +
                      detail::time_str(times.front()) + ", " + detail::time_str(times.back()) + "]");
    }
    if (samples.size() == 1) {
      out.push_back(samples.front());
      continue;
    }
    const std::size_t i = detail::bracket(times, t);
    const FTSample& a = samples[i];
    const FTSample& b = samples[i + 1];
    const double w = (t - a.t) / (b.t - a.t);
    FTSample s;
    s.t = t;
    s.frame = stream.frame();
    if (w == 0.0) {
      s.force = a.force;
      s.torque = a.torque;
      s.saturated = a.saturated;
    } else if (w == 1.0) {
      s.force = b.force;
      s.torque = b.torque;
      s.saturated = b.saturated;
    } else {
      s.force = a.force + w * (b.force - a.force);
      s.torque = a.torque + w * (b.torque - a.torque);
      s.saturated = a.saturated || b.saturated;
    }
    out.push_back(s);
  }
  return out;
}

/// Linear interpolation of roll and tilt at the requested times.
inline std::vector<Orientation> resample_pose(const PoseStream& pose,
                                              const std::vector<double>& target_times) {
  std::vector<Orientation> out;
  out.reserve(target_times.size());
  const auto& times = pose.times();
  const auto& samples = pose.samples();
  for (double t : target_times) {
    if (pose.empty() || !(t >= times.front() && t <= times.back())) {
      throw DataError("resample_pose: time " + detail::time_str(t) + " outside pose range");
    }
    if (samples.size() == 1) {
      out.push_back(samples.front().orientation);
      continue;
    }
    const std::size_t i = detail::bracket(times, t);
    const auto& a = samples[i];
    const auto& b = samples[i + 1];
    const double w = (t - a.t) / (b.t - a.t);
    if (w == 0.0) {
      out.push_back(a.orientation);
    } else if (w == 1.0) {
      out.push_back(b.orientation);
    } else {
      out.push_back({a.orientation.roll + w * (b.orientation.roll - a.orientation.roll),
                     a.orientation.tilt + w * (b.orientation.tilt - a.orientation.tilt)});
    }
  }
  return out;
}

}  // namespace drillforce
