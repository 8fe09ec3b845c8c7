// Whole workflow in one process: calibrate the tool weight on an orientation
// sweep, learn hand-force leakage from a collection recording, then estimate
// the tip force of a simulated point-drilling trial.
//
//   calibrate_and_drill [rig-seed]

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "drillforce/io.hpp"
#include "drillforce/metrics.hpp"

using namespace drillforce;

int main(int argc, char** argv) {
  const std::uint64_t rig_seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 42;
  try {
    const auto sweep = sim::simulate(sim::default_rig(rig_seed, 1), sim::scenario_orientation_sweep(9, 0.5));
    const auto pts = join_with_pose(sweep.drill, sweep.pose);
    const auto bp = bp_fit(pts, 4);
    const auto phys = fit_physics(pts);
    std::printf("tool weight: BP degree 4, train RMSE fz %.4f N; physics mass %.4f kg\n", bp.train_rmse(2), phys.mass);

    const auto col = sim::simulate(sim::default_rig(rig_seed, 3), sim::scenario_handforce_collection(8, 10.0));
    const auto pairs = collect_hand_pairs(col.drill, col.wrist, col.pose, ToolWeightModel{bp.model}, std::nullopt);
    const auto split = handforce::split_pairs(pairs, 0.8, 7);
    const auto hand = handforce::fit_linear(split.train);
    const auto before = handforce::uncompensated_rmse(split.validation);
    const auto after = handforce::channel_rmse(handforce::HandModel{hand}, split.validation);
    std::printf("hand leakage: %zu pairs, validation fx %.3f -> %.3f N (%.1f%% better)\n", pairs.size(), before(0),
                after(0), metrics::percent_improvement(before(0), after(0)));

    CalibratedEstimator est;
    est.toolweight = bp.model;
    est.hand = hand;
    est.d_offset = sweep.rig.d_offset;

    const auto trial = sim::simulate(sim::default_rig(rig_seed, 100), sim::scenario_point_drilling(9, 1.5, 1.0));
    const auto res = process_stream(trial.drill, trial.wrist, trial.pose, est);
    std::vector<double> t, pred, tt, tm;
    for (const auto& s : res.samples) {
      t.push_back(s.t);
      pred.push_back(s.magnitude);
    }
    for (const auto& s : trial.truth) {
      tt.push_back(s.t);
      tm.push_back(s.force.norm());
    }
    const auto r = metrics::trial_summary("point", t, pred, metrics::interpolate_series(tt, tm, t));
    std::printf("point drilling: %zu samples, RMSE %.1f mN, max error %.1f mN, top-%zu mean %.2f N\n", r.samples,
                1e3 * r.rmse, 1e3 * r.max_error, r.k, r.top_k_mean);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
