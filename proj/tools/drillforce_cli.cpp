// drillforce: simulate, calibrate, estimate, evaluate and plot drill tip forces.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drillforce/handforce.hpp"
#include "drillforce/io.hpp"
#include "drillforce/metrics.hpp"
#include "drillforce/pipeline.hpp"
#include "drillforce/simrig.hpp"
#include "drillforce/svg.hpp"
#include "drillforce/toolweight.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using namespace drillforce;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

constexpr const char* kSeedEnv = "DRILLFORCE_SEED";

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return 0;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(kSeedEnv) + " must be a non-negative integer, got '" + env + "'");
  }
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

void print_residuals(std::ostream& os, const char* what, const ResidualReport& r) {
  os << what << " residuals (rmse / max):\n";
  for (int c = 0; c < 6; ++c) {
    os << "  " << kChannelNames[c] << "  " << io::format_number(r.rmse(c)) << " / " << io::format_number(r.max_abs(c))
       << (c < 3 ? " N\n" : " Nmm\n");
  }
  if (r.clamped) os << "  " << r.clamped << " evaluations clamped to the fitted domain\n";
}

nlohmann::json residual_json(const ResidualReport& r, std::size_t samples) {
  nlohmann::json rmse = nlohmann::json::object(), mx = nlohmann::json::object();
  for (int c = 0; c < 6; ++c) {
    rmse[std::string(kChannelNames[c])] = r.rmse(c);
    mx[std::string(kChannelNames[c])] = r.max_abs(c);
  }
  return {{"samples", samples}, {"rmse", rmse}, {"max_abs", mx}, {"clamped", r.clamped}};
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scenario;
  fs::path out;
  std::uint64_t seed = 0;
  std::uint64_t rig_seed = 0;
  std::optional<fs::path> rig;
  int grid = 9;
  int stations = -1;
  double dwell = -1.0;
  double range_deg = 60.0;
  double station_time = 10.0;
  double hand_amplitude = 5.0;
  int points = 9;
  double peak = 1.5;
  double duration = -1.0;
  double mean_force = 1.0;
  double guidance = 2.0;
  std::optional<double> roll_deg;
  std::optional<double> tilt_deg;
  double noise_scale = 1.0;
  double sag_scale = 1.0;
  std::optional<double> leak_nonlinearity;
};

sim::Scenario build_scenario(const SimulateArgs& a) {
  const double r = deg2rad(a.range_deg);
  const Workspace range{-r, r, -r, r};
  sim::Scenario sc;
  if (a.scenario == "sweep") {
    sc = sim::scenario_orientation_sweep(a.grid, a.dwell > 0 ? a.dwell : 0.5, range);
  } else if (a.scenario == "sweep-random") {
    sc = sim::scenario_random_sweep(a.stations > 0 ? a.stations : 40, a.dwell > 0 ? a.dwell : 0.5, range);
  } else if (a.scenario == "handforce") {
    sc = sim::scenario_handforce_collection(a.stations > 0 ? a.stations : 8, a.station_time, a.hand_amplitude);
    sc.sweep_range = range;
  } else if (a.scenario == "point") {
    sc = sim::scenario_point_drilling(a.points, a.peak, a.dwell > 0 ? a.dwell : 1.0);
  } else if (a.scenario == "path") {
    sc = sim::scenario_path_drilling(a.duration > 0 ? a.duration : 20.0, a.peak);
  } else if (a.scenario == "coarse") {
    sc = sim::scenario_coarse_drilling(a.duration > 0 ? a.duration : 30.0, a.mean_force);
  } else {
    throw ConfigError("unknown scenario '" + a.scenario + "'");
  }
  if (sc.kind == sim::ScenarioKind::point_drilling || sc.kind == sim::ScenarioKind::path_drilling ||
      sc.kind == sim::ScenarioKind::coarse_drilling) {
    if (a.guidance < 0) throw ConfigError("--guidance must be >= 0");
    sc.guidance_amplitude = a.guidance;
    if (a.roll_deg.has_value() != a.tilt_deg.has_value()) throw ConfigError("--roll and --tilt must be given together");
    if (a.roll_deg) sc.orientation = Orientation{deg2rad(*a.roll_deg), deg2rad(*a.tilt_deg)};
  }
  return sc;
}

int cmd_simulate(const SimulateArgs& a) {
  sim::RigConfig rig = a.rig ? io::read_rig(*a.rig) : sim::default_rig(a.rig_seed);
  rig.seed = a.seed;
  if (!(a.noise_scale >= 0)) throw ConfigError("--noise-scale must be >= 0");
  if (!(a.sag_scale >= 0)) throw ConfigError("--sag-scale must be >= 0");
  rig.noise = rig.noise.scaled(a.noise_scale);
  rig.sag.force_amplitude *= a.sag_scale;
  rig.sag.torque_amplitude *= a.sag_scale;
  if (a.leak_nonlinearity) rig.leakage.nonlinearity = *a.leak_nonlinearity;
  const auto out = sim::simulate(rig, build_scenario(a));
  io::write_sim_output(a.out, out);
  std::cout << "simulated " << sim::to_string(out.scenario.kind) << ": " << out.drill.size() << " drill, "
            << out.wrist.size() << " wrist, " << out.phantom.size() << " phantom samples over "
            << std::fixed << std::setprecision(2) << out.scenario.duration << std::defaultfloat << " s -> " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// calibrate-toolweight

struct ToolWeightArgs {
  fs::path data;
  std::optional<fs::path> val_data;
  std::string method = "bp";
  int degree = 4;
  std::string frame = "drill";
  fs::path out;
  std::optional<fs::path> report;
};

std::vector<CalibrationPoint> load_calibration(const fs::path& dir, Frame frame) {
  const auto stream = io::read_stream_csv(dir / (frame == Frame::wrist ? io::kWristFile : io::kDrillFile), frame);
  const auto pose = io::read_pose_csv(dir / io::kPoseFile);
  return join_with_pose(stream, pose);
}

int cmd_calibrate_toolweight(const ToolWeightArgs& a) {
  const Frame frame = frame_from_string(a.frame);
  if (frame == Frame::phantom) throw ConfigError("--frame must be drill or wrist");
  // fail fast: parse every input before fitting
  const auto train = load_calibration(a.data, frame);
  std::optional<std::vector<CalibrationPoint>> val;
  if (a.val_data) val = load_calibration(*a.val_data, frame);

  ToolWeightModel model;
  if (a.method == "physics") {
    model = fit_physics(train);
  } else if (a.method == "bp") {
    model = bp_fit(train, a.degree).model;
  } else {
    throw ConfigError("unknown method '" + a.method + "' (expected physics|bp)");
  }
  const auto fit_res = tool_weight_residuals(model, train);
  nlohmann::json report{{"method", a.method}, {"frame", a.frame}, {"train", residual_json(fit_res, train.size())}};
  if (a.method == "bp") report["degree"] = a.degree;
  print_residuals(std::cout, "training", fit_res);
  if (val) {
    const auto vr = tool_weight_residuals(model, *val);
    report["validation"] = residual_json(vr, val->size());
    print_residuals(std::cout, "held-out", vr);
  }
  io::write_json_file(a.out, to_json(model));
  if (a.report) io::write_json_file(*a.report, report);
  std::cout << "wrote " << kind_of(model) << " model -> " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// calibrate-handforce

struct HandForceArgs {
  fs::path data;
  std::optional<fs::path> val_data;
  fs::path toolweight;
  std::optional<fs::path> wrist_toolweight;
  std::string family = "linear";
  fs::path out;
  std::optional<fs::path> table;
  std::optional<fs::path> report;
  std::uint64_t seed = 0;
  double split = 0.8;
  std::vector<int> hidden{16};
  double lr = 1e-2;
  int epochs = 2000;
  double momentum = 0.9;
  int trees = 100;
  int depth = 8;
  int min_leaf = 1;
  double rest_window = 0.5;
  double rezero_deg = 2.0;
};

std::vector<handforce::HandPair> load_pairs(const fs::path& dir, const ToolWeightModel& tw,
                                            const std::optional<ToolWeightModel>& wtw, BaselinePolicy policy) {
  const auto rec = io::read_recording(dir);
  return collect_hand_pairs(rec.drill, rec.wrist, rec.pose, tw, wtw, policy);
}

nlohmann::json wrench_obj(const Wrench& w) {
  nlohmann::json j = nlohmann::json::object();
  for (int c = 0; c < 6; ++c) j[std::string(kChannelNames[c])] = w(c);
  return j;
}

int cmd_calibrate_handforce(const HandForceArgs& a) {
  const BaselinePolicy policy{a.rest_window, a.rezero_deg};
  const auto tw = io::read_tool_weight(a.toolweight);
  std::optional<ToolWeightModel> wtw;
  if (a.wrist_toolweight) wtw = io::read_tool_weight(*a.wrist_toolweight);
  const auto pairs = load_pairs(a.data, tw, wtw, policy);

  handforce::TrainConfig cfg;
  cfg.seed = a.seed;
  cfg.split_fraction = a.split;
  cfg.mlp = {a.hidden, a.lr, a.epochs, a.momentum};
  cfg.rf = {a.trees, a.depth, a.min_leaf};

  std::vector<handforce::HandPair> train, validation;
  if (a.val_data) {
    train = pairs;
    validation = load_pairs(*a.val_data, tw, wtw, policy);
  } else {
    auto s = handforce::split_pairs(pairs, a.split, a.seed);
    train = std::move(s.train);
    validation = std::move(s.validation);
  }

  handforce::HandModel model;
  nlohmann::json report{{"train_pairs", train.size()}, {"validation_pairs", validation.size()}};
  if (a.family == "gridsearch") {
    const auto grid = handforce::default_grid(a.seed);
    const auto gs = handforce::grid_search(grid, train, validation);
    model = gs.best_model;
    const fs::path table = a.table ? *a.table : a.out.parent_path() / "gridsearch.csv";
    io::write_text_file(table, handforce::improvement_table_csv(gs));
    std::cout << handforce::improvement_table_csv(gs);
    for (const auto& row : gs.rows) {
      if (!row.error.empty()) std::cerr << "warning: " << row.config.label() << " failed: " << row.error << "\n";
    }
    std::cout << "selected " << gs.best.label() << "\n";
    report["selected"] = gs.best.label();
    report["table"] = table.generic_string();
  } else {
    cfg.family = handforce::family_from_string(a.family);
    model = handforce::train_model(train, cfg);
  }
  const Wrench before = handforce::uncompensated_rmse(validation);
  const Wrench after = handforce::channel_rmse(model, validation);
  Wrench improvement;
  for (int c = 0; c < 6; ++c) improvement(c) = before(c) > 0 ? metrics::percent_improvement(before(c), after(c)) : 0.0;
  report["family"] = std::string(handforce::to_string(handforce::family_of(model)));
  report["validation_rmse_before"] = wrench_obj(before);
  report["validation_rmse_after"] = wrench_obj(after);
  report["improvement_percent"] = wrench_obj(improvement);
  std::cout << "validation improvement [%]:";
  for (int c = 0; c < 6; ++c) std::cout << " " << kChannelNames[c] << "=" << io::format_number(std::round(improvement(c) * 100) / 100);
  std::cout << "\n";
  io::write_json_file(a.out, handforce::to_json(model));
  if (a.report) io::write_json_file(*a.report, report);
  std::cout << "wrote " << handforce::to_string(handforce::family_of(model)) << " model -> " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  fs::path data;
  std::optional<fs::path> estimator;
  std::optional<fs::path> toolweight;
  std::optional<fs::path> wrist_toolweight;
  std::optional<fs::path> hand;
  std::optional<double> d_offset;
  std::optional<std::string> mode;
  std::optional<double> rest_window;
  std::optional<double> rezero_deg;
  fs::path out;
};

int cmd_estimate(const EstimateArgs& a) {
  io::EstimatorFile f;
  if (a.estimator) f = io::read_estimator_file(*a.estimator);
  if (a.toolweight) f.toolweight = *a.toolweight;
  if (a.wrist_toolweight) f.wrist_toolweight = *a.wrist_toolweight;
  if (a.hand) f.hand = *a.hand;
  if (a.d_offset) f.d_offset = *a.d_offset;
  if (a.mode) f.mode = io::error_mode_from_string(*a.mode);
  if (a.rest_window) f.baseline.rest_window_s = *a.rest_window;
  if (a.rezero_deg) f.baseline.rezero_deg = *a.rezero_deg;
  if (f.toolweight.empty()) throw ConfigError("a tool-weight model is required (--toolweight or --estimator)");
  const auto est = io::load_estimator(f);
  const auto rec = io::read_recording(a.data);
  const auto res = process_stream(rec.drill, rec.wrist, rec.pose, est);
  io::write_text_file(a.out, io::tip_csv(res.samples));
  const auto& s = res.summary;
  std::cout << "estimated " << s.samples << " samples over " << io::format_number(s.duration) << " s ("
            << s.saturated << " saturated, " << s.clamped << " clamped, " << s.skipped << " skipped) -> "
            << a.out.string() << "\n";
  for (const auto& e : s.errors) std::cerr << "skipped: " << e << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

/// Ground truth from either a ground_truth.csv or a phantom-holder log.
io::Trajectory load_truth(const fs::path& path) {
  const std::string text = io::read_text_file(path);
  const std::string header = text.substr(0, text.find_first_of("\r\n"));
  if (header == io::kSensorHeader) {
    return io::truth_from_phantom(io::parse_stream_csv(text, Frame::phantom, std::nullopt, path.string()));
  }
  return io::detail::trajectory_from_table(io::parse_csv(text, io::kTruthHeader, path.string()), false, path.string());
}

struct EvaluateArgs {
  std::vector<fs::path> pred;
  std::vector<fs::path> truth;
  std::size_t k = 100;
  fs::path out;
  std::optional<fs::path> json;
};

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.pred.size() != a.truth.size()) {
    throw ConfigError("--pred and --truth need the same number of files (" + std::to_string(a.pred.size()) + " vs " +
                      std::to_string(a.truth.size()) + ")");
  }
  std::vector<io::Trajectory> preds, truths;
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    preds.push_back(io::read_tip_csv(a.pred[i]));
    truths.push_back(load_truth(a.truth[i]));
  }
  std::vector<metrics::TrialReport> reports;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const auto& t = truths[i];
    if (p.empty()) throw DataError(a.pred[i].string() + ": empty trajectory");
    if (t.empty()) throw DataError(a.truth[i].string() + ": empty trajectory");
    std::vector<double> truth_mag;
    try {
      truth_mag = metrics::interpolate_series(t.t, t.magnitude, p.t);
    } catch (const DataError& e) {
      throw DataError(a.pred[i].string() + " vs " + a.truth[i].string() + ": " + e.what());
    }
    std::string id = a.pred[i].parent_path().filename().string();
    if (id.empty()) id = a.pred[i].stem().string();
    if (a.pred.size() > 1) id = std::to_string(i + 1) + ":" + id;
    reports.push_back(metrics::trial_summary(id, p.t, p.magnitude, truth_mag, a.k));
  }
  io::write_text_file(a.out, metrics::report_csv(reports));
  const auto agg = metrics::aggregate(reports);
  if (a.json) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& r : reports) trials.push_back(metrics::to_json(r));
    io::write_json_file(*a.json, {{"trials", trials}, {"aggregate", metrics::to_json(agg)}});
  }
  std::cout << metrics::summary_line(agg) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  fs::path pred;
  std::optional<fs::path> truth;
  fs::path out;
  std::string title = "Drilling force trajectory";
  bool components = false;
};

int cmd_plot(const PlotArgs& a) {
  const auto p = io::read_tip_csv(a.pred);
  if (p.empty()) throw DataError(a.pred.string() + ": empty trajectory, no plot written");
  std::vector<svg::Series> series;
  if (a.truth) {
    const auto t = load_truth(*a.truth);
    if (t.empty()) throw DataError(a.truth->string() + ": empty trajectory, no plot written");
    series.push_back({"ground truth |F|", t.t, t.magnitude, "#222222", true});
  }
  series.push_back({"estimated |F|", p.t, p.magnitude, "#d62728", false});
  if (a.components) {
    const char* colors[3] = {"#1f77b4", "#2ca02c", "#9467bd"};
    const char* names[3] = {"estimated fx", "estimated fy", "estimated fz"};
    for (int c = 0; c < 3; ++c) {
      svg::Series s{names[c], p.t, {}, colors[c], false};
      for (const auto& f : p.force) s.y.push_back(f(c));
      series.push_back(std::move(s));
    }
  }
  svg::PlotOptions opt;
  opt.title = a.title;
  const std::string doc = svg::line_chart(series, opt);  // throws before any file is touched
  io::write_text_file(a.out, doc);
  std::cout << "wrote plot -> " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

CLI::App* add_subcommand(CLI::App& app, const std::string& name, const std::string& desc) {
  return app.add_subcommand(name, desc)->fallthrough();
}

// CLI11 only reads config files through the root app, so the file's keys are
// attributed to the subcommand named on the command line.
std::string subcommand_in(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (argv[i][0] != '-') return argv[i];
    if (std::string_view(argv[i]) == "--config") ++i;
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tip-force estimation for a cooperatively controlled surgical drill"};
  app.config_formatter(std::make_shared<cli::JsonConfig>(subcommand_in(argc, argv)));
  app.set_config("--config", "", "JSON file with option values (command-line flags take precedence)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.set_version_flag("--version", "drillforce 0.1.0");
  app.get_formatter()->column_width(34);

  std::uint64_t env_seed = 0;
  try {
    env_seed = default_seed();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  SimulateArgs sa;
  sa.seed = env_seed;
  auto* sim_cmd = add_subcommand(app, "simulate", "Generate a simulated recording (sensor CSVs, ground truth, rig manifest)");
  sim_cmd->add_option("--scenario", sa.scenario, "sweep | sweep-random | handforce | point | path | coarse")
      ->required()
      ->check(CLI::IsMember({"sweep", "sweep-random", "handforce", "point", "path", "coarse"}));
  sim_cmd->add_option("--out", sa.out, "Output directory")->required();
  sim_cmd->add_option("--seed", sa.seed, std::string("Realization seed (default: $") + kSeedEnv + " or 0)");
  sim_cmd->add_option("--rig-seed", sa.rig_seed, "Seed of the hidden rig parameters")->capture_default_str();
  sim_cmd->add_option("--rig", sa.rig, "Reuse rig parameters from a rig_manifest.json")->check(CLI::ExistingFile);
  sim_cmd->add_option("--grid", sa.grid, "Sweep: stations per axis")->capture_default_str();
  sim_cmd->add_option("--stations", sa.stations, "Random sweep / hand-force collection: number of stations");
  sim_cmd->add_option("--dwell", sa.dwell, "Sweep dwell per station or point-drilling hold time [s]");
  sim_cmd->add_option("--range-deg", sa.range_deg, "Sweep half-range of roll and tilt [deg]")->capture_default_str();
  sim_cmd->add_option("--station-time", sa.station_time, "Hand-force collection: seconds per station")->capture_default_str();
  sim_cmd->add_option("--hand-amplitude", sa.hand_amplitude, "Hand-force collection: peak hand force [N]")->capture_default_str();
  sim_cmd->add_option("--points", sa.points, "Point drilling: number of contact points")->capture_default_str();
  sim_cmd->add_option("--peak", sa.peak, "Point/path drilling: peak tip force [N]")->capture_default_str();
  sim_cmd->add_option("--duration", sa.duration, "Path/coarse drilling: duration [s]");
  sim_cmd->add_option("--mean-force", sa.mean_force, "Coarse drilling: mean tip force [N]")->capture_default_str();
  sim_cmd->add_option("--guidance", sa.guidance, "Drilling: peak guiding hand force [N]")->capture_default_str();
  sim_cmd->add_option("--roll", sa.roll_deg, "Drilling: fixed roll [deg]");
  sim_cmd->add_option("--tilt", sa.tilt_deg, "Drilling: fixed tilt [deg]");
  sim_cmd->add_option("--noise-scale", sa.noise_scale, "Multiplier on all sensor noise (0: noiseless)")->capture_default_str();
  sim_cmd->add_option("--sag-scale", sa.sag_scale, "Multiplier on cable-sag amplitude")->capture_default_str();
  sim_cmd->add_option("--leak-nonlinearity", sa.leak_nonlinearity, "Weight of the tanh leakage term (0: linear)");

  ToolWeightArgs ta;
  auto* tw_cmd = add_subcommand(app, "calibrate-toolweight", "Fit a tool-weight model from an orientation sweep");
  tw_cmd->add_option("--data", ta.data, "Recording directory (drill.csv/wrist.csv + pose.csv)")->required()->check(CLI::ExistingDirectory);
  tw_cmd->add_option("--val-data", ta.val_data, "Held-out recording for validation residuals")->check(CLI::ExistingDirectory);
  tw_cmd->add_option("--method", ta.method, "physics | bp")->check(CLI::IsMember({"physics", "bp"}))->capture_default_str();
  tw_cmd->add_option("--degree", ta.degree, "Bernstein degree")->check(CLI::Range(1, 12))->capture_default_str();
  tw_cmd->add_option("--frame", ta.frame, "drill | wrist")->check(CLI::IsMember({"drill", "wrist"}))->capture_default_str();
  tw_cmd->add_option("--out", ta.out, "Model JSON")->required();
  tw_cmd->add_option("--report", ta.report, "Fit report JSON");

  HandForceArgs ha;
  ha.seed = env_seed;
  auto* hf_cmd = add_subcommand(app, "calibrate-handforce", "Fit a hand-force leakage model from a collection recording");
  hf_cmd->add_option("--data", ha.data, "Collection recording directory")->required()->check(CLI::ExistingDirectory);
  hf_cmd->add_option("--val-data", ha.val_data, "Separate validation recording (default: seeded split of --data)")->check(CLI::ExistingDirectory);
  hf_cmd->add_option("--toolweight", ha.toolweight, "Drill tool-weight model JSON")->required()->check(CLI::ExistingFile);
  hf_cmd->add_option("--wrist-toolweight", ha.wrist_toolweight, "Wrist tool-weight model JSON")->check(CLI::ExistingFile);
  hf_cmd->add_option("--family", ha.family, "linear | mlp | rf | gridsearch")
      ->check(CLI::IsMember({"linear", "mlp", "rf", "gridsearch"}))
      ->capture_default_str();
  hf_cmd->add_option("--out", ha.out, "Model JSON")->required();
  hf_cmd->add_option("--table", ha.table, "Grid search: percent-improvement CSV (default: gridsearch.csv next to --out)");
  hf_cmd->add_option("--report", ha.report, "Fit report JSON");
  hf_cmd->add_option("--seed", ha.seed, std::string("Split/initialization seed (default: $") + kSeedEnv + " or 0)");
  hf_cmd->add_option("--split", ha.split, "Training share of the pairs")->capture_default_str();
  hf_cmd->add_option("--hidden", ha.hidden, "MLP hidden layer widths")->capture_default_str();
  hf_cmd->add_option("--lr", ha.lr, "MLP learning rate")->capture_default_str();
  hf_cmd->add_option("--epochs", ha.epochs, "MLP epochs")->capture_default_str();
  hf_cmd->add_option("--momentum", ha.momentum, "MLP first-moment decay (Adam beta1)")->capture_default_str();
  hf_cmd->add_option("--trees", ha.trees, "RF tree count")->capture_default_str();
  hf_cmd->add_option("--depth", ha.depth, "RF max depth")->capture_default_str();
  hf_cmd->add_option("--min-leaf", ha.min_leaf, "RF min samples per leaf")->capture_default_str();
  hf_cmd->add_option("--rest-window", ha.rest_window, "Wrist baseline window [s]")->capture_default_str();
  hf_cmd->add_option("--rezero-deg", ha.rezero_deg, "Re-zero the baseline after this orientation change [deg]")->capture_default_str();

  EstimateArgs ea;
  auto* est_cmd = add_subcommand(app, "estimate", "Estimate tip forces for a recording");
  est_cmd->add_option("--data", ea.data, "Recording directory")->required()->check(CLI::ExistingDirectory);
  est_cmd->add_option("--estimator", ea.estimator, "Estimator config JSON (model paths, d_offset, baseline, mode)")->check(CLI::ExistingFile);
  est_cmd->add_option("--toolweight", ea.toolweight, "Drill tool-weight model JSON")->check(CLI::ExistingFile);
  est_cmd->add_option("--wrist-toolweight", ea.wrist_toolweight, "Wrist tool-weight model JSON")->check(CLI::ExistingFile);
  est_cmd->add_option("--hand", ea.hand, "Hand-force model JSON")->check(CLI::ExistingFile);
  est_cmd->add_option("--d-offset", ea.d_offset, "Sensor-to-tip distance [mm]");
  est_cmd->add_option("--mode", ea.mode, "lenient | strict")->check(CLI::IsMember({"lenient", "strict"}));
  est_cmd->add_option("--rest-window", ea.rest_window, "Wrist baseline window [s]");
  est_cmd->add_option("--rezero-deg", ea.rezero_deg, "Re-zero threshold [deg]");
  est_cmd->add_option("--out", ea.out, "Tip-force CSV")->required();

  EvaluateArgs va;
  auto* ev_cmd = add_subcommand(app, "evaluate", "Compare estimated trajectories against ground truth");
  ev_cmd->add_option("--pred", va.pred, "Tip-force CSV(s)")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--truth", va.truth, "ground_truth.csv or phantom.csv, one per --pred")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--k", va.k, "k for the top-k mean")->check(CLI::PositiveNumber)->capture_default_str();
  ev_cmd->add_option("--out", va.out, "Report CSV")->required();
  ev_cmd->add_option("--json", va.json, "Report JSON");

  PlotArgs pa;
  auto* plot_cmd = add_subcommand(app, "plot", "Write an SVG of estimated vs. ground-truth force");
  plot_cmd->add_option("--pred", pa.pred, "Tip-force CSV")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--truth", pa.truth, "ground_truth.csv or phantom.csv")->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", pa.out, "SVG file")->required();
  plot_cmd->add_option("--title", pa.title, "Plot title")->capture_default_str();
  plot_cmd->add_flag("--components", pa.components, "Also draw the estimated force components");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sa);
    if (tw_cmd->parsed()) return cmd_calibrate_toolweight(ta);
    if (hf_cmd->parsed()) return cmd_calibrate_handforce(ha);
    if (est_cmd->parsed()) return cmd_estimate(ea);
    if (ev_cmd->parsed()) return cmd_evaluate(va);
    if (plot_cmd->parsed()) return cmd_plot(pa);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
