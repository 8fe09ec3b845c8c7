#pragma once

// Runtime tip-force estimation. Per drill-sensor sample:
//   1. align wrist and pose to the drill timestamp (linear interpolation),
//   2. net = raw drill - tool weight(orientation) - hand leakage(wrist delta),
//   3. f_tip = (tau_x / d_offset, tau_y / d_offset, f_z).
//
// Step 3 treats the contact as a point load at the burr: the lateral tip
// component along x is the one producing sensor torque about x (and likewise
// for y), so tau_{x,y} = d_offset * f_tip_{x,y}. The simulator uses the same
// convention, which keeps estimation and ground truth in one frame.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drillforce/core.hpp"
#include "drillforce/handforce.hpp"
#include "drillforce/toolweight.hpp"

namespace drillforce {

struct BaselinePolicy {
  double rest_window_s = 0.5;
  double rezero_deg = 2.0;
};

enum class ErrorMode { lenient, strict };

struct CalibratedEstimator {
  ToolWeightModel toolweight = PhysicsModelParams{};       // drill sensor
  std::optional<ToolWeightModel> wrist_toolweight;         // applied before the baseline
  std::optional<handforce::HandModel> hand;                // none: no leakage compensation
  double d_offset = 0.0;                                   // mm, sensor origin to burr tip
  BaselinePolicy baseline;
  ErrorMode mode = ErrorMode::lenient;

  void validate() const {
    if (!(d_offset > 0.0) || !std::isfinite(d_offset)) {
      throw ConfigError("estimator: d_offset must be > 0 mm");
    }
    if (!(baseline.rest_window_s >= 0.0)) throw ConfigError("estimator: rest window must be >= 0 s");
    if (!(baseline.rezero_deg > 0.0)) throw ConfigError("estimator: re-zero threshold must be > 0 deg");
  }
};

struct AlignedRecord {
  double t = 0.0;
  FTSample drill;
  FTSample wrist;
  Orientation orientation;
};

struct TipForceSample {
  double t = 0.0;
  Vec3 f_tip = Vec3::Zero();  // N
  double magnitude = 0.0;     // N
  bool saturated = false;
};

namespace detail {

inline std::string range_str(double a, double b) {
  return "[" + time_str(a) + ", " + time_str(b) + "]";
}

// Walks drill timestamps inside the common time range of all three streams,
// interpolating wrist and pose with forward-only cursors.
class StreamAligner {
 public:
  StreamAligner(const SensorStream& drill, const SensorStream& wrist, const PoseStream& pose)
      : drill_(drill), wrist_(wrist), pose_(pose) {
    if (drill.empty() || wrist.empty() || pose.empty()) {
      throw DataError("synchronize: drill, wrist and pose streams must all be non-empty");
    }
    lo_ = std::max({drill.first_time(), wrist.first_time(), pose.first_time()});
    hi_ = std::min({drill.last_time(), wrist.last_time(), pose.last_time()});
    if (lo_ > hi_) {
      throw DataError("synchronize: streams do not overlap (drill " +
                      range_str(drill.first_time(), drill.last_time()) + ", wrist " +
                      range_str(wrist.first_time(), wrist.last_time()) + ", pose " +
                      range_str(pose.first_time(), pose.last_time()) + ")");
    }
    const auto& dt = drill.times();
    next_ = static_cast<std::size_t>(std::lower_bound(dt.begin(), dt.end(), lo_) - dt.begin());
    if (next_ >= dt.size() || dt[next_] > hi_) {
      throw DataError("synchronize: no drill sample inside the common range " + range_str(lo_, hi_));
    }
  }

  bool next(AlignedRecord& rec) {
    const auto& dt = drill_.times();
    if (next_ >= dt.size() || dt[next_] > hi_) return false;
    const FTSample& d = drill_.samples()[next_++];
    rec.t = d.t;
    rec.drill = d;
    rec.wrist = interp_ft(wrist_, wcur_, d.t);
    rec.orientation = interp_pose(d.t);
    return true;
  }

  std::size_t remaining_hint() const { return drill_.size() - std::min(next_, drill_.size()); }

 private:
  static std::size_t advance(const std::vector<double>& times, std::size_t cur, double t) {
    while (cur + 1 < times.size() && times[cur + 1] <= t) ++cur;
    return cur;
  }

  static FTSample interp_ft(const SensorStream& s, std::size_t& cur, double t) {
    const auto& times = s.times();
    cur = advance(times, cur, t);
    const FTSample& a = s.samples()[cur];
    if (a.t == t || cur + 1 >= times.size()) {
      FTSample out = a;
      out.t = t;
      return out;
    }
    const FTSample& b = s.samples()[cur + 1];
    const double w = (t - a.t) / (b.t - a.t);
    FTSample out;
    out.t = t;
    out.frame = s.frame();
    out.force = a.force + w * (b.force - a.force);
    out.torque = a.torque + w * (b.torque - a.torque);
    out.saturated = a.saturated || b.saturated;
    return out;
  }

  Orientation interp_pose(double t) {
    const auto& times = pose_.times();
    pcur_ = advance(times, pcur_, t);
    const auto& a = pose_.samples()[pcur_];
    if (a.t == t || pcur_ + 1 >= times.size()) return a.orientation;
    const auto& b = pose_.samples()[pcur_ + 1];
    const double w = (t - a.t) / (b.t - a.t);
    return {a.orientation.roll + w * (b.orientation.roll - a.orientation.roll),
            a.orientation.tilt + w * (b.orientation.tilt - a.orientation.tilt)};
  }

  const SensorStream& drill_;
  const SensorStream& wrist_;
  const PoseStream& pose_;
  double lo_ = 0.0, hi_ = 0.0;
  std::size_t next_ = 0;
  std::size_t wcur_ = 0;
  std::size_t pcur_ = 0;
};

}  // namespace detail

/// Aligns wrist and pose onto the drill timestamps inside the common range.
inline std::vector<AlignedRecord> synchronize(const SensorStream& drill, const SensorStream& wrist,
                                              const PoseStream& pose) {
  detail::StreamAligner aligner(drill, wrist, pose);
  std::vector<AlignedRecord> out;
  out.reserve(aligner.remaining_hint());
  AlignedRecord rec;
  while (aligner.next(rec)) out.push_back(rec);
  return out;
}

/// Pairs every sample of `stream` inside the pose range with its orientation.
inline std::vector<CalibrationPoint> join_with_pose(const SensorStream& stream, const PoseStream& pose) {
  if (stream.empty() || pose.empty()) throw DataError("join_with_pose: empty stream");
  std::vector<double> times;
  for (double t : stream.times())
    if (t >= pose.first_time() && t <= pose.last_time()) times.push_back(t);
  if (times.empty()) {
    throw DataError("join_with_pose: sensor " + detail::range_str(stream.first_time(), stream.last_time()) +
                    " and pose " + detail::range_str(pose.first_time(), pose.last_time()) + " do not overlap");
  }
  const auto orientations = resample_pose(pose, times);
  std::vector<CalibrationPoint> out;
  out.reserve(times.size());
  std::size_t j = 0;
  for (const auto& s : stream.samples()) {
    if (s.t < pose.first_time() || s.t > pose.last_time()) continue;
    out.push_back({orientations[j++], s});
  }
  return out;
}

/// Tracks the wrist rest reading. The first `rest_window_s` of a run (and of
/// each new orientation more than `rezero_deg` away from the current anchor)
/// is averaged into the baseline; until a window closes, its running mean
/// serves as the reference.
class BaselineTracker {
 public:
  explicit BaselineTracker(BaselinePolicy policy = {}) : policy_(policy) {}

  handforce::WristDelta update(double t, const Wrench& wrist, const Orientation& o) {
    const double threshold = policy_.rezero_deg * std::numbers::pi / 180.0;
    if (!started_) {
      started_ = true;
      start_window(t, o);
    } else if (std::max(std::abs(o.roll - anchor_.roll), std::abs(o.tilt - anchor_.tilt)) > threshold) {
      start_window(t, o);
    }
    if (collecting_) {
      sum_ += wrist;
      ++count_;
      if (t - window_start_ >= policy_.rest_window_s - 1e-9) {
        baseline_ = sum_ / static_cast<double>(count_);
        collecting_ = false;
      }
    }
    const Wrench ref = baseline_ ? *baseline_ : Wrench(sum_ / static_cast<double>(count_));
    return handforce::WristDelta::from_wrench(wrist - ref);
  }

  const std::optional<Wrench>& baseline() const { return baseline_; }

 private:
  void start_window(double t, const Orientation& o) {
    // the previous baseline belongs to another orientation; never reuse it
    baseline_.reset();
    anchor_ = o;
    collecting_ = true;
    window_start_ = t;
    sum_.setZero();
    count_ = 0;
  }

  BaselinePolicy policy_;
  bool started_ = false;
  bool collecting_ = false;
  Orientation anchor_;
  double window_start_ = 0.0;
  Wrench sum_ = Wrench::Zero();
  std::size_t count_ = 0;
  std::optional<Wrench> baseline_;
};

/// Wrist reading with the wrist tool weight removed when a model is configured.
inline Wrench compensated_wrist(const AlignedRecord& rec, const std::optional<ToolWeightModel>& wrist_tw) {
  Wrench w = rec.wrist.wrench();
  if (wrist_tw) w -= evaluate_tool_weight(*wrist_tw, rec.orientation).wrench;
  return w;
}

struct NetWrench {
  Wrench wrench = Wrench::Zero();
  bool clamped = false;
};

/// net = raw drill - tool weight - predicted hand leakage.
inline NetWrench compensate(const AlignedRecord& rec, const CalibratedEstimator& est,
                            const handforce::WristDelta& delta) {
  const auto tw = evaluate_tool_weight(est.toolweight, rec.orientation);
  NetWrench out{rec.drill.wrench() - tw.wrench, tw.clamped};
  if (est.hand) out.wrench -= handforce::predict_hand(*est.hand, delta);
  return out;
}

inline TipForceSample tip_force(const Wrench& net, double d_offset, double t = 0.0, bool saturated = false) {
  if (!(d_offset > 0.0)) throw ConfigError("tip_force: d_offset must be > 0 mm");
  TipForceSample s;
  s.t = t;
  s.f_tip = {net(3) / d_offset, net(4) / d_offset, net(2)};
  s.magnitude = s.f_tip.norm();
  s.saturated = saturated;
  return s;
}

struct ProcessSummary {
  std::size_t samples = 0;
  std::size_t saturated = 0;
  std::size_t clamped = 0;
  std::size_t skipped = 0;
  double duration = 0.0;
  std::vector<std::string> errors;  // first few per-sample errors
};

struct ProcessResult {
  std::vector<TipForceSample> samples;
  ProcessSummary summary;
};

/// Runs the full estimator over one recording. In lenient mode per-sample
/// data errors skip the sample and are logged in the summary; in strict mode
/// the first one is rethrown.
inline ProcessResult process_stream(const SensorStream& drill, const SensorStream& wrist, const PoseStream& pose,
                                    const CalibratedEstimator& est) {
  est.validate();
  if (drill.frame() != Frame::drill) throw DataError("process_stream: first stream must be the drill sensor");
  if (wrist.frame() != Frame::wrist) throw DataError("process_stream: second stream must be the wrist sensor");
  detail::StreamAligner aligner(drill, wrist, pose);
  BaselineTracker tracker(est.baseline);
  ProcessResult out;
  out.samples.reserve(aligner.remaining_hint());
  constexpr std::size_t kMaxLoggedErrors = 20;
  AlignedRecord rec;
  while (aligner.next(rec)) {
    try {
      const Wrench wc = compensated_wrist(rec, est.wrist_toolweight);
      const auto delta = tracker.update(rec.t, wc, rec.orientation);
      const NetWrench net = compensate(rec, est, delta);
      auto tip = tip_force(net.wrench, est.d_offset, rec.t, rec.drill.saturated);
      if (net.clamped) ++out.summary.clamped;
      if (tip.saturated) ++out.summary.saturated;
      out.samples.push_back(tip);
    } catch (const DataError& e) {
      if (est.mode == ErrorMode::strict) throw;
      ++out.summary.skipped;
      if (out.summary.errors.size() < kMaxLoggedErrors) {
        out.summary.errors.push_back("t=" + detail::time_str(rec.t) + ": " + e.what());
      }
    }
  }
  out.summary.samples = out.samples.size();
  if (!out.samples.empty()) out.summary.duration = out.samples.back().t - out.samples.front().t;
  return out;
}

/// Training pairs for hand-force calibration: wrist delta against the
/// tool-weight-compensated drill reading (no tip contact during collection).
inline std::vector<handforce::HandPair> collect_hand_pairs(const SensorStream& drill, const SensorStream& wrist,
                                                           const PoseStream& pose, const ToolWeightModel& drill_tw,
                                                           const std::optional<ToolWeightModel>& wrist_tw,
                                                           BaselinePolicy policy = {}) {
  detail::StreamAligner aligner(drill, wrist, pose);
  BaselineTracker tracker(policy);
  std::vector<handforce::HandPair> pairs;
  pairs.reserve(aligner.remaining_hint());
  AlignedRecord rec;
  while (aligner.next(rec)) {
    const auto delta = tracker.update(rec.t, compensated_wrist(rec, wrist_tw), rec.orientation);
    const Wrench residual = rec.drill.wrench() - evaluate_tool_weight(drill_tw, rec.orientation).wrench;
    pairs.push_back({delta.as_wrench(), residual});
  }
  return pairs;
}

}  // namespace drillforce
