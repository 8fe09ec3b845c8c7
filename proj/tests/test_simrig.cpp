#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "drillforce/io.hpp"
#include "drillforce/metrics.hpp"
#include "drillforce/simrig.hpp"

using namespace drillforce;

namespace {

// The peak is attained exactly; the norm of peak * unit direction may round up by an ulp.
constexpr double kUlpSlack = 1.0 + 4 * std::numeric_limits<double>::epsilon();

sim::RigConfig quiet_rig(std::uint64_t rig_seed = 1, std::uint64_t seed = 2) {
  auto rig = sim::default_rig(rig_seed, seed);
  rig.noise = rig.noise.scaled(0.0);
  return rig;
}

std::vector<double> magnitudes(const std::vector<sim::TruthSample>& truth) {
  std::vector<double> m;
  for (const auto& s : truth) m.push_back(s.force.norm());
  return m;
}

// Maximal runs of nonzero contact.
std::vector<std::pair<std::size_t, std::size_t>> contact_runs(const std::vector<double>& mag) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < mag.size();) {
    if (mag[i] == 0.0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mag.size() && mag[j] != 0.0) ++j;
    runs.emplace_back(i, j);
    i = j;
  }
  return runs;
}

}  // namespace

TEST(Simulate, WeightlessQuietIdleRigReadsZero) {
  auto rig = quiet_rig();
  rig.mass = 0.0;
  rig.sag.force_amplitude = rig.sag.torque_amplitude = 0.0;
  const auto out = sim::simulate(rig, sim::scenario_orientation_sweep(3, 0.5));
  for (const auto& s : out.drill.samples()) ASSERT_TRUE(s.wrench().isZero(0.0));
}

TEST(Simulate, SuperpositionIsExactWithoutNoise) {
  const auto rig = quiet_rig(3, 4);
  for (const auto& sc : {sim::scenario_handforce_collection(2, 4.0), sim::scenario_point_drilling(3),
                         sim::scenario_coarse_drilling(6)}) {
    const auto out = sim::simulate(rig, sc);
    const sim::detail::Script script(out.rig, out.scenario);
    for (std::size_t i = 0; i < out.drill.size(); ++i) {
      const auto& s = out.drill.samples()[i];
      const Orientation o = out.pose.samples()[i].orientation;
      const Wrench expected = physics_wrench(rig.drill_physics(), o) + rig.sag.evaluate(o) +
                              rig.leakage.apply(script.hand(s.t)) + sim::tip_wrench(out.truth[i].force, rig.d_offset);
      ASSERT_LE((s.wrench() - expected).cwiseAbs().maxCoeff(), 1e-12) << sim::to_string(sc.kind) << " t=" << s.t;
    }
  }
}

TEST(Simulate, PhantomIsTheReactionOfTheTip) {
  const auto out = sim::simulate(quiet_rig(5, 6), sim::scenario_point_drilling(4));
  ASSERT_EQ(out.phantom.size(), out.truth.size());
  for (std::size_t i = 0; i < out.truth.size(); ++i) {
    ASSERT_EQ(out.phantom.samples()[i].t, out.truth[i].t);
    ASSERT_LE((out.phantom.samples()[i].force + out.truth[i].force).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_TRUE(out.phantom.samples()[i].torque.isZero(0.0));
  }
}

TEST(Simulate, WithoutSagTheSweepIsPurePhysics) {
  auto rig = quiet_rig(7, 8);
  rig.sag.force_amplitude = rig.sag.torque_amplitude = 0.0;
  const auto out = sim::simulate(rig, sim::scenario_orientation_sweep(5, 0.2));
  for (std::size_t i = 0; i < out.drill.size(); ++i) {
    const auto pred = physics_predict(rig.drill_physics(), out.pose.samples()[i].orientation);
    ASSERT_EQ(out.drill.samples()[i].wrench(), pred.wrench());
  }
}

TEST(Simulate, WristSeesGravityPlusHand) {
  const auto rig = quiet_rig(9, 10);
  const auto out = sim::simulate(rig, sim::scenario_handforce_collection(2, 3.0));
  const sim::detail::Script script(out.rig, out.scenario);
  for (const auto& s : out.wrist.samples()) {
    const Wrench expected = physics_wrench(rig.wrist_physics(), script.orientation(s.t)) + script.hand(s.t);
    ASSERT_LE((s.wrench() - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Simulate, NoiseMatchesConfiguredStd) {
  auto rig = sim::default_rig(11, 12);
  rig.mass = 0.0;
  rig.sag.force_amplitude = rig.sag.torque_amplitude = 0.0;
  auto sc = sim::scenario_orientation_sweep(1, 120.0);  // 12000 idle drill samples
  const auto out = sim::simulate(rig, sc);
  ASSERT_GE(out.drill.size(), 10000u);
  for (int c = 0; c < 6; ++c) {
    std::vector<double> v;
    for (const auto& s : out.drill.samples()) v.push_back(s.wrench()(c));
    const auto ms = metrics::mean_std(v);
    const double target = c < 3 ? rig.noise.drill_force : rig.noise.drill_torque;
    EXPECT_NEAR(ms.std, target, 0.1 * target) << "channel " << c;
    EXPECT_NEAR(ms.mean, 0.0, 5 * target / std::sqrt(v.size())) << "channel " << c;
  }
}

TEST(Simulate, StreamsRunAtNominalRates) {
  const auto out = sim::simulate(quiet_rig(), sim::scenario_coarse_drilling(10.0, 1.0));
  EXPECT_EQ(out.truth.size(), 1000u);
  EXPECT_EQ(out.drill.size(), 1000u);
  EXPECT_EQ(out.wrist.size(), 2000u);
  EXPECT_EQ(out.phantom.size(), 1000u);
  EXPECT_EQ(out.pose.size(), 1000u);
  EXPECT_NEAR(out.drill.nominal_rate(), 100.0, 0.0);
}

TEST(Simulate, SeedFixesEverything) {
  const auto rig = sim::default_rig(13, 14);
  const auto sc = sim::scenario_path_drilling(5.0);
  const auto a = sim::simulate(rig, sc), b = sim::simulate(rig, sc);
  EXPECT_EQ(io::stream_csv(a.drill), io::stream_csv(b.drill));
  EXPECT_EQ(io::stream_csv(a.wrist), io::stream_csv(b.wrist));
  EXPECT_EQ(io::stream_csv(a.phantom), io::stream_csv(b.phantom));
  EXPECT_EQ(io::pose_csv(a.pose), io::pose_csv(b.pose));
  EXPECT_EQ(io::truth_csv(a.truth), io::truth_csv(b.truth));

  auto other = rig;
  other.seed = 15;
  EXPECT_NE(io::stream_csv(sim::simulate(other, sc).drill), io::stream_csv(a.drill));
}

TEST(Simulate, RigSeedDrawsHiddenParameters) {
  const auto a = sim::default_rig(1), b = sim::default_rig(1), c = sim::default_rig(2);
  EXPECT_EQ(a.leakage.linear, b.leakage.linear);
  EXPECT_NE(a.leakage.linear, c.leakage.linear);
  EXPECT_EQ(a.sag.coeffs[3], b.sag.coeffs[3]);
}

TEST(Simulate, InvalidConfigsAreRejected) {
  auto rig = sim::default_rig(1);
  rig.noise.drill_force = -1;
  EXPECT_THROW(sim::simulate(rig, sim::scenario_point_drilling()), ConfigError);
  rig = sim::default_rig(1);
  rig.rates.wrist = 0;
  EXPECT_THROW(sim::simulate(rig, sim::scenario_point_drilling()), ConfigError);
  auto sc = sim::scenario_point_drilling();
  sc.duration = 0;
  EXPECT_THROW(sim::simulate(sim::default_rig(1), sc), ConfigError);
}

TEST(Scenario, ParameterContracts) {
  EXPECT_THROW(sim::scenario_point_drilling(0), ConfigError);
  EXPECT_THROW(sim::scenario_point_drilling(3, 0.0), ConfigError);
  EXPECT_THROW(sim::scenario_point_drilling(3, -1.0), ConfigError);
  EXPECT_THROW(sim::scenario_coarse_drilling(0.0), ConfigError);
  EXPECT_THROW(sim::scenario_coarse_drilling(10.0, -1.0), ConfigError);
  EXPECT_THROW(sim::scenario_orientation_sweep(0), ConfigError);
  EXPECT_THROW(sim::scenario_handforce_collection(0), ConfigError);
}

TEST(PointDrilling, NineSeparatedEpisodes) {
  const auto out = sim::simulate(quiet_rig(17, 18), sim::scenario_point_drilling(9, 1.5, 1.0));
  const auto mag = magnitudes(out.truth);
  const auto runs = contact_runs(mag);
  ASSERT_EQ(runs.size(), 9u);
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) EXPECT_GE(runs[k + 1].first - runs[k].second, 50u);
  for (const auto& [b, e] : runs) {
    const auto above = std::count_if(mag.begin() + b, mag.begin() + e, [](double m) { return m > 0.75; });
    EXPECT_GE(above, 100);
    EXPECT_LE(*std::max_element(mag.begin() + b, mag.begin() + e), 1.5 * kUlpSlack);
  }
}

TEST(PointDrilling, PeakBoundsTheMagnitude) {
  const auto out = sim::simulate(quiet_rig(19, 20), sim::scenario_point_drilling(9, 0.1, 1.0));
  const auto mag = magnitudes(out.truth);
  EXPECT_LE(*std::max_element(mag.begin(), mag.end()), 0.1 * kUlpSlack);
  EXPECT_GT(*std::max_element(mag.begin(), mag.end()), 0.08);
}

TEST(PathDrilling, ContinuousContactAfterRest) {
  const auto out = sim::simulate(quiet_rig(21, 22), sim::scenario_path_drilling(20.0, 1.5));
  const auto runs = contact_runs(magnitudes(out.truth));
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(out.truth[runs[0].first - 1].t, 1.0);
}

TEST(CoarseDrilling, TopHundredInsideTheReportedEnvelope) {
  for (std::uint64_t seed : {300u, 301u, 302u, 303u, 304u}) {
    const auto out = sim::simulate(quiet_rig(42, seed), sim::scenario_coarse_drilling(30.0, 1.0));
    const double top = metrics::top_k_mean(magnitudes(out.truth), 100);
    EXPECT_GE(top, 1.7) << "seed " << seed;
    EXPECT_LE(top, 2.6) << "seed " << seed;
  }
}

TEST(CoarseDrilling, ZeroMeanMeansNoContact) {
  const auto out = sim::simulate(quiet_rig(), sim::scenario_coarse_drilling(10.0, 0.0));
  for (const auto& s : out.truth) ASSERT_TRUE(s.force.isZero(0.0));
}

TEST(HandCollection, RestsBeforeEachStation) {
  const auto rig = quiet_rig(23, 24);
  const auto out = sim::simulate(rig, sim::scenario_handforce_collection(3, 5.0, 5.0));
  const sim::detail::Script script(out.rig, out.scenario);
  double peak = 0.0;
  for (double t = 0.0; t < 15.0; t += 0.01) {
    const double local = std::fmod(t, 5.0);
    if (local < 1.0) {
      ASSERT_TRUE(script.hand(t).isZero(0.0)) << t;
    }
    peak = std::max(peak, script.hand(t).head<3>().norm());
  }
  EXPECT_GT(peak, 1.0);
  EXPECT_LE(peak, 5.0 + 1e-12);
}

TEST(Leakage, LinearPartMatchesApplyWithoutNonlinearity) {
  auto rig = sim::default_rig(25);
  rig.leakage.nonlinearity = 0.0;
  Wrench h;
  h << 1, -2, 0.5, 40, -10, 25;
  EXPECT_LE((rig.leakage.apply(h) - rig.leakage.linear_part() * h).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(rig.leakage.apply(Wrench::Zero()).isZero(0.0));
}

TEST(Manifest, RigRoundTripsThroughJson) {
  const auto rig = sim::default_rig(27, 28);
  const auto back = sim::rig_from_json(sim::to_json(rig));
  EXPECT_EQ(sim::to_json(back).dump(), sim::to_json(rig).dump());
  EXPECT_EQ(back.leakage.linear, rig.leakage.linear);
  EXPECT_EQ(back.seed, 28u);
}
