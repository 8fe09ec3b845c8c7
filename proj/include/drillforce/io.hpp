#pragma once

// File formats: sensor/pose/tip/ground-truth CSVs, JSON model and estimator
// config files, and the simulator output directory.
//
// Numbers are written in shortest round-trip form (std::to_chars), so a
// write/read cycle is lossless and output is byte-stable across runs.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "drillforce/core.hpp"
#include "drillforce/error.hpp"
#include "drillforce/handforce.hpp"
#include "drillforce/pipeline.hpp"
#include "drillforce/simrig.hpp"
#include "drillforce/toolweight.hpp"

namespace drillforce::io {

namespace fs = std::filesystem;

inline constexpr std::string_view kSensorHeader = "t,fx,fy,fz,tx,ty,tz";
inline constexpr std::string_view kPoseHeader = "t,roll,tilt";
inline constexpr std::string_view kTipHeader = "t,fx_tip,fy_tip,fz_tip,mag,saturated";
inline constexpr std::string_view kTruthHeader = "t,fx,fy,fz,mag";

inline double default_rate(Frame f) {
  return f == Frame::wrist ? 200.0 : 100.0;
}

inline void append_number(std::string& out, double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, r.ptr);
}

inline std::string format_number(double x) {
  std::string s;
  append_number(s, x);
  return s;
}

// ---------------------------------------------------------------------------
// raw file access

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw DataError(path.parent_path().string() + ": cannot create directory: " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError(path.string() + ": write failed");
}

inline nlohmann::json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV parsing

/// Rows of numeric CSV with a fixed header; errors carry file:line context.
struct CsvTable {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // 1-based source line per row
};

inline CsvTable parse_csv(std::string_view text, std::string_view expected_header, const std::string& name) {
  CsvTable table;
  const std::size_t width = static_cast<std::size_t>(std::count(expected_header.begin(), expected_header.end(), ',')) + 1;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }
    const std::string where = name + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (line != expected_header) {
        throw DataError(where + ": expected header '" + std::string(expected_header) + "', got '" + std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(width);
    std::size_t f = 0;
    while (true) {
      const std::size_t comma = line.find(',', f);
      std::string_view field = line.substr(f, comma == std::string_view::npos ? std::string_view::npos : comma - f);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || r.ec != std::errc() || r.ptr != field.data() + field.size()) {
        throw DataError(where + ": column " + std::to_string(row.size() + 1) + ": not a number: '" +
                        std::string(field) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      f = comma + 1;
    }
    if (row.size() != width) {
      throw DataError(where + ": expected " + std::to_string(width) + " columns, got " + std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
    table.lines.push_back(line_no);
  }
  if (!header_seen) throw DataError(name + ": empty file (missing header)");
  return table;
}

inline CsvTable read_csv(const fs::path& path, std::string_view header) {
  return parse_csv(read_text_file(path), header, path.string());
}

// ---------------------------------------------------------------------------
// sensor streams

inline std::string stream_csv(const SensorStream& s) {
  std::string out(kSensorHeader);
  out += '\n';
  for (const auto& x : s.samples()) {
    append_number(out, x.t);
    for (int i = 0; i < 3; ++i) {
      out += ',';
      append_number(out, x.force(i));
    }
    for (int i = 0; i < 3; ++i) {
      out += ',';
      append_number(out, x.torque(i));
    }
    out += '\n';
  }
  return out;
}

/// Saturation flags are recomputed from the frame's sensor range.
inline SensorStream parse_stream_csv(std::string_view text, Frame frame, std::optional<double> rate,
                                     const std::string& name) {
  const auto table = parse_csv(text, kSensorHeader, name);
  const SensorRange range = SensorRange::for_frame(frame);
  std::vector<FTSample> samples;
  samples.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (i > 0 && !(r[0] > table.rows[i - 1][0])) {
      throw DataError(name + ":" + std::to_string(table.lines[i]) + ": timestamps must be strictly increasing");
    }
    samples.push_back(make_sample(r[0], make_wrench({r[1], r[2], r[3]}, {r[4], r[5], r[6]}), frame, range));
  }
  try {
    return SensorStream(frame, rate.value_or(default_rate(frame)), std::move(samples));
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  }
}

inline SensorStream read_stream_csv(const fs::path& path, Frame frame, std::optional<double> rate = std::nullopt) {
  return parse_stream_csv(read_text_file(path), frame, rate, path.string());
}

inline void write_stream_csv(const fs::path& path, const SensorStream& s) { write_text_file(path, stream_csv(s)); }

inline std::string pose_csv(const PoseStream& p) {
  std::string out(kPoseHeader);
  out += '\n';
  for (const auto& x : p.samples()) {
    append_number(out, x.t);
    out += ',';
    append_number(out, x.orientation.roll);
    out += ',';
    append_number(out, x.orientation.tilt);
    out += '\n';
  }
  return out;
}

inline PoseStream read_pose_csv(const fs::path& path) {
  const auto table = read_csv(path, kPoseHeader);
  std::vector<PoseSample> samples;
  samples.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (i > 0 && !(r[0] > table.rows[i - 1][0])) {
      throw DataError(path.string() + ":" + std::to_string(table.lines[i]) + ": timestamps must be strictly increasing");
    }
    samples.push_back({r[0], {r[1], r[2]}});
  }
  return PoseStream(std::move(samples));
}

inline void write_pose_csv(const fs::path& path, const PoseStream& p) { write_text_file(path, pose_csv(p)); }

// ---------------------------------------------------------------------------
// tip-force trajectories and ground truth

/// A force trajectory: estimator output or phantom ground truth.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec3> force;
  std::vector<double> magnitude;
  std::vector<bool> saturated;  // empty for ground truth

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
};

inline Trajectory trajectory_from(const std::vector<TipForceSample>& samples) {
  Trajectory tr;
  for (const auto& s : samples) {
    tr.t.push_back(s.t);
    tr.force.push_back(s.f_tip);
    tr.magnitude.push_back(s.magnitude);
    tr.saturated.push_back(s.saturated);
  }
  return tr;
}

inline Trajectory trajectory_from(const std::vector<sim::TruthSample>& samples) {
  Trajectory tr;
  for (const auto& s : samples) {
    tr.t.push_back(s.t);
    tr.force.push_back(s.force);
    tr.magnitude.push_back(s.force.norm());
  }
  return tr;
}

inline std::string tip_csv(const std::vector<TipForceSample>& samples) {
  std::string out(kTipHeader);
  out += '\n';
  for (const auto& s : samples) {
    append_number(out, s.t);
    for (int i = 0; i < 3; ++i) {
      out += ',';
      append_number(out, s.f_tip(i));
    }
    out += ',';
    append_number(out, s.magnitude);
    out += s.saturated ? ",1\n" : ",0\n";
  }
  return out;
}

inline std::string truth_csv(const std::vector<sim::TruthSample>& samples) {
  std::string out(kTruthHeader);
  out += '\n';
  for (const auto& s : samples) {
    append_number(out, s.t);
    for (int i = 0; i < 3; ++i) {
      out += ',';
      append_number(out, s.force(i));
    }
    out += ',';
    append_number(out, s.force.norm());
    out += '\n';
  }
  return out;
}

namespace detail {
inline Trajectory trajectory_from_table(const CsvTable& table, bool has_saturation, const std::string& name) {
  Trajectory tr;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (i > 0 && !(r[0] > table.rows[i - 1][0])) {
      throw DataError(name + ":" + std::to_string(table.lines[i]) + ": timestamps must be strictly increasing");
    }
    tr.t.push_back(r[0]);
    tr.force.emplace_back(r[1], r[2], r[3]);
    tr.magnitude.push_back(r[4]);
    if (has_saturation) tr.saturated.push_back(r[5] != 0.0);
  }
  return tr;
}
}  // namespace detail

inline Trajectory read_tip_csv(const fs::path& path) {
  return detail::trajectory_from_table(read_csv(path, kTipHeader), true, path.string());
}

inline Trajectory read_truth_csv(const fs::path& path) {
  return detail::trajectory_from_table(read_csv(path, kTruthHeader), false, path.string());
}

/// Ground truth from a phantom-holder log: the reaction force negated.
inline Trajectory truth_from_phantom(const SensorStream& phantom) {
  Trajectory tr;
  for (const auto& s : phantom.samples()) {
    tr.t.push_back(s.t);
    tr.force.push_back(-s.force);
    tr.magnitude.push_back(s.force.norm());
  }
  return tr;
}

// ---------------------------------------------------------------------------
// models and estimator config

inline ToolWeightModel read_tool_weight(const fs::path& path) {
  try {
    return tool_weight_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline handforce::HandModel read_hand_model(const fs::path& path) {
  try {
    return handforce::hand_model_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline std::string_view to_string(ErrorMode m) { return m == ErrorMode::strict ? "strict" : "lenient"; }

inline ErrorMode error_mode_from_string(std::string_view s) {
  if (s == "strict") return ErrorMode::strict;
  if (s == "lenient") return ErrorMode::lenient;
  throw ConfigError("unknown error mode '" + std::string(s) + "' (expected strict|lenient)");
}

/// Estimator config as stored on disk; model paths are relative to the file.
struct EstimatorFile {
  fs::path toolweight;
  std::optional<fs::path> wrist_toolweight;
  std::optional<fs::path> hand;
  std::optional<double> d_offset;  // mm; required, never defaulted
  BaselinePolicy baseline;
  ErrorMode mode = ErrorMode::lenient;
};

inline EstimatorFile parse_estimator_file(const nlohmann::json& j, const fs::path& base) {
  try {
    EstimatorFile f;
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    f.toolweight = resolve(j.at("toolweight").get<std::string>());
    if (j.contains("wrist_toolweight") && !j["wrist_toolweight"].is_null()) {
      f.wrist_toolweight = resolve(j["wrist_toolweight"].get<std::string>());
    }
    if (j.contains("hand") && !j["hand"].is_null()) f.hand = resolve(j["hand"].get<std::string>());
    if (j.contains("d_offset")) f.d_offset = j["d_offset"].get<double>();
    if (j.contains("baseline")) {
      const auto& b = j["baseline"];
      f.baseline.rest_window_s = b.value("rest_window_s", f.baseline.rest_window_s);
      f.baseline.rezero_deg = b.value("rezero_deg", f.baseline.rezero_deg);
    }
    if (j.contains("mode")) f.mode = error_mode_from_string(j["mode"].get<std::string>());
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("estimator config: ") + e.what());
  }
}

inline EstimatorFile read_estimator_file(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_estimator_file(j, path.parent_path());
}

inline nlohmann::json to_json(const EstimatorFile& f) {
  nlohmann::json j{{"toolweight", f.toolweight.generic_string()},
                   {"baseline", {{"rest_window_s", f.baseline.rest_window_s}, {"rezero_deg", f.baseline.rezero_deg}}},
                   {"mode", to_string(f.mode)}};
  if (f.wrist_toolweight) j["wrist_toolweight"] = f.wrist_toolweight->generic_string();
  if (f.hand) j["hand"] = f.hand->generic_string();
  if (f.d_offset) j["d_offset"] = *f.d_offset;
  return j;
}

/// Loads every referenced model (fail-fast) and validates the result.
inline CalibratedEstimator load_estimator(const EstimatorFile& f) {
  if (!f.d_offset) throw ConfigError("estimator config: d_offset is required");
  CalibratedEstimator est;
  est.toolweight = read_tool_weight(f.toolweight);
  if (f.wrist_toolweight) est.wrist_toolweight = read_tool_weight(*f.wrist_toolweight);
  if (f.hand) est.hand = read_hand_model(*f.hand);
  est.d_offset = *f.d_offset;
  est.baseline = f.baseline;
  est.mode = f.mode;
  est.validate();
  return est;
}

// ---------------------------------------------------------------------------
// simulator output directory

inline constexpr const char* kDrillFile = "drill.csv";
inline constexpr const char* kWristFile = "wrist.csv";
inline constexpr const char* kPoseFile = "pose.csv";
inline constexpr const char* kPhantomFile = "phantom.csv";
inline constexpr const char* kTruthFile = "ground_truth.csv";
inline constexpr const char* kManifestFile = "rig_manifest.json";

inline nlohmann::json manifest_json(const sim::SimOutput& out) {
  return nlohmann::json{
      {"seed", out.rig.seed},
      {"rig_seed", out.rig.rig_seed},
      {"rig", sim::to_json(out.rig)},
      {"scenario", sim::to_json(out.scenario)},
      {"files",
       {{"drill", kDrillFile},
        {"wrist", kWristFile},
        {"pose", kPoseFile},
        {"phantom", kPhantomFile},
        {"ground_truth", kTruthFile}}},
      {"samples",
       {{"drill", out.drill.size()},
        {"wrist", out.wrist.size()},
        {"phantom", out.phantom.size()},
        {"pose", out.pose.size()}}},
  };
}

inline void write_sim_output(const fs::path& dir, const sim::SimOutput& out) {
  write_stream_csv(dir / kDrillFile, out.drill);
  write_stream_csv(dir / kWristFile, out.wrist);
  write_pose_csv(dir / kPoseFile, out.pose);
  write_stream_csv(dir / kPhantomFile, out.phantom);
  write_text_file(dir / kTruthFile, truth_csv(out.truth));
  write_json_file(dir / kManifestFile, manifest_json(out));
}

/// Rig parameters recorded by a previous simulation (manifest or bare rig JSON).
inline sim::RigConfig read_rig(const fs::path& path) {
  const auto j = read_json_file(path);
  try {
    return sim::rig_from_json(j.contains("rig") ? j.at("rig") : j);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Recording directory with the three estimator inputs.
struct Recording {
  SensorStream drill;
  SensorStream wrist;
  PoseStream pose;
};

inline Recording read_recording(const fs::path& dir) {
  return {read_stream_csv(dir / kDrillFile, Frame::drill), read_stream_csv(dir / kWristFile, Frame::wrist),
          read_pose_csv(dir / kPoseFile)};
}

}  // namespace drillforce::io
