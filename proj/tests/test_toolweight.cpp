#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "drillforce/toolweight.hpp"

using namespace drillforce;

namespace {

constexpr double kPi = std::numbers::pi;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Gravity in the sensor frame by composing elementary rotations by hand:
// R = Ry(tilt) Rx(roll), sensor sees R^T (0, 0, -mg).
Vec3 gravity_oracle(double mass, const Orientation& o) {
  const double cr = std::cos(o.roll), sr = std::sin(o.roll);
  const double ct = std::cos(o.tilt), st = std::sin(o.tilt);
  Mat3 rx, ry;
  rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  ry << ct, 0, st, 0, 1, 0, -st, 0, ct;
  return (ry * rx).transpose() * Vec3(0, 0, -mass * kStandardGravity);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return v;
}

template <typename F>
std::vector<CalibrationPoint> grid_data(int n, double half_range, F wrench_at) {
  std::vector<CalibrationPoint> data;
  for (double r : linspace(-half_range, half_range, n))
    for (double t : linspace(-half_range, half_range, n))
      data.push_back({{r, t}, make_sample(0.0, wrench_at(Orientation{r, t}), Frame::drill)});
  return data;
}

std::vector<CalibrationPoint> physics_data(const PhysicsModelParams& p, const std::vector<Orientation>& os) {
  std::vector<CalibrationPoint> data;
  for (const auto& o : os) data.push_back({o, physics_predict(p, o)});
  return data;
}

std::vector<Orientation> random_orientations(std::uint64_t seed, int n, double half_range) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> a(-half_range, half_range);
  std::vector<Orientation> os;
  for (int i = 0; i < n; ++i) os.push_back({a(rng), a(rng)});
  return os;
}

// A tensor polynomial written in the monomial basis of normalized coordinates.
struct MonomialSurface {
  int degree;
  std::array<Eigen::MatrixXd, 6> c;
  Workspace domain;

  Wrench at(const Orientation& o) const {
    const double u = (o.roll - domain.roll_min) / (domain.roll_max - domain.roll_min);
    const double v = (o.tilt - domain.tilt_min) / (domain.tilt_max - domain.tilt_min);
    Wrench w = Wrench::Zero();
    for (int ch = 0; ch < 6; ++ch)
      for (int j = 0; j <= degree; ++j)
        for (int k = 0; k <= degree; ++k) w(ch) += c[ch](j, k) * std::pow(u, j) * std::pow(v, k);
    return w;
  }
};

MonomialSurface random_surface(int degree, std::uint64_t seed, Workspace domain) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  MonomialSurface s{degree, {}, domain};
  for (auto& m : s.c) {
    m.resize(degree + 1, degree + 1);
    for (int j = 0; j <= degree; ++j)
      for (int k = 0; k <= degree; ++k) m(j, k) = u(rng);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// physics model

TEST(PhysicsPredict, ZeroMassGivesZeroWrench) {
  for (const auto& o : random_orientations(1, 50, kPi)) {
    EXPECT_TRUE(physics_predict({0.0, kStandardGravity, {10, 5, -3}}, o).wrench().isZero(0.0));
  }
}

TEST(PhysicsPredict, ZeroCentroidGivesZeroTorque) {
  for (const auto& o : random_orientations(2, 50, kPi)) {
    EXPECT_TRUE(physics_predict({0.7, kStandardGravity, Vec3::Zero()}, o).torque.isZero(0.0));
  }
}

TEST(PhysicsPredict, HalfKilogramAtLevelPose) {
  const auto s = physics_predict({0.5, kStandardGravity, {10, 0, 0}}, {0, 0});
  const Vec3 f(0, 0, -0.5 * kStandardGravity);
  const Vec3 c(10, 0, 0);
  EXPECT_LT((s.force - Vec3(0, 0, -4.903325)).norm(), 1e-12);
  EXPECT_LT((s.torque - c.cross(f)).norm(), 1e-12);
  EXPECT_LT((s.torque - Vec3(0, 49.03325, 0)).norm(), 1e-12);
  EXPECT_EQ(s.frame, Frame::drill);
}

TEST(PhysicsPredict, MatchesElementaryRotationOracle) {
  const PhysicsModelParams p{0.5, kStandardGravity, {10, 5, -3}};
  for (const auto& o : random_orientations(3, 200, kPi)) {
    const auto s = physics_predict(p, o);
    const Vec3 f = gravity_oracle(p.mass, o);
    ASSERT_LT((s.force - f).norm(), 1e-12);
    ASSERT_LT((s.torque - p.centroid.cross(f)).norm(), 1e-11);
  }
}

TEST(PhysicsPredict, ForceMagnitudeIsWeight) {
  const PhysicsModelParams p{0.8, kStandardGravity, {1, 2, 3}};
  for (const auto& o : random_orientations(4, 1000, kPi)) {
    ASSERT_NEAR(physics_predict(p, o).force.norm(), p.mass * p.g, 1e-12);
  }
}

TEST(PhysicsPredict, TorqueOrthogonalToForce) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 50);
  for (const auto& o : random_orientations(6, 1000, kPi)) {
    const PhysicsModelParams p{0.5, kStandardGravity, {n(rng), n(rng), n(rng)}};
    const auto s = physics_predict(p, o);
    const double scale = s.force.norm() * s.torque.norm() + 1e-300;
    ASSERT_LT(std::abs(s.force.dot(s.torque)) / scale, 1e-9);
  }
}

TEST(FitPhysics, RecoversNoiselessParameters) {
  const PhysicsModelParams truth{0.5, kStandardGravity, {10, 5, -3}};
  const auto data = physics_data(truth, random_orientations(7, 10, kPi / 2));
  const auto p = fit_physics(data);
  EXPECT_NEAR(p.mass, truth.mass, 1e-9 * truth.mass);
  EXPECT_LT((p.centroid - truth.centroid).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FitPhysics, SingleOrientationIsUnobservable) {
  const PhysicsModelParams truth{0.5, kStandardGravity, {10, 5, -3}};
  const std::vector<Orientation> same(12, Orientation{0.3, -0.2});
  try {
    fit_physics(physics_data(truth, same));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unobservable"), std::string::npos) << e.what();
  }
}

TEST(FitPhysics, TooFewSamples) {
  const auto data = physics_data({0.5, kStandardGravity, {}}, random_orientations(8, 2, 1.0));
  EXPECT_THROW(fit_physics(data), DataError);
}

TEST(FitPhysics, MassWithinOnePercentUnderResolutionNoise) {
  const PhysicsModelParams truth{0.5, kStandardGravity, {10, 5, -3}};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> fn(0, 0.004), tn(0, 0.05);
  auto data = physics_data(truth, random_orientations(10, 400, kPi / 2));
  for (auto& d : data) {
    for (int i = 0; i < 3; ++i) {
      d.reading.force(i) += fn(rng);
      d.reading.torque(i) += tn(rng);
    }
  }
  const auto p = fit_physics(data);
  EXPECT_LT(std::abs(p.mass - truth.mass) / truth.mass, 0.01);
  EXPECT_LT((p.centroid - truth.centroid).norm(), 0.5);
}

// ---------------------------------------------------------------------------
// Bernstein basis

TEST(Bernstein, Endpoint) {
  const auto b = bernstein_basis(2, 0.0);
  EXPECT_EQ(b, Eigen::Vector3d(1, 0, 0));
}

TEST(Bernstein, MidpointSymmetry) {
  const auto b = bernstein_basis(1, 0.5);
  EXPECT_EQ(b, Eigen::Vector2d(0.5, 0.5));
}

TEST(Bernstein, CubicAtQuarter) {
  const auto b = bernstein_basis(3, 0.25);
  const Eigen::Vector4d expected(0.421875, 0.421875, 0.140625, 0.015625);
  EXPECT_LT((b - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(b.sum(), 1.0, 1e-15);
}

TEST(Bernstein, MatchesBinomialDefinition) {
  for (int n = 0; n <= 10; ++n) {
    for (double u : {0.0, 0.1, 0.37, 0.5, 0.93, 1.0}) {
      const auto b = bernstein_basis(n, u);
      ASSERT_EQ(b.size(), n + 1);
      for (int j = 0; j <= n; ++j) {
        ASSERT_NEAR(b(j), binomial(n, j) * std::pow(u, j) * std::pow(1 - u, n - j), 1e-13);
      }
    }
  }
}

TEST(Bernstein, PartitionOfUnityAndNonNegative) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n <= 10; ++n) {
    for (int i = 0; i < 100; ++i) {
      const auto b = bernstein_basis(n, u(rng));
      ASSERT_NEAR(b.sum(), 1.0, 1e-12);
      ASSERT_GE(b.minCoeff(), 0.0);
    }
  }
}

TEST(Bernstein, RejectsOutOfRangeArgument) {
  EXPECT_THROW(bernstein_basis(3, -0.01), DataError);
  EXPECT_THROW(bernstein_basis(3, 1.01), DataError);
  EXPECT_THROW(bernstein_basis(3, std::nan("")), DataError);
}

// ---------------------------------------------------------------------------
// BP surface

TEST(BPFit, ConstantWrenchGivesEqualCoefficients) {
  Wrench c;
  c << 0.3, -1.2, 4.0, 12.0, -7.5, 0.25;
  const auto data = grid_data(5, 1.0, [&](const Orientation&) { return c; });
  for (int n : {0, 1, 3}) {
    const auto fit = bp_fit(data, n);
    for (int ch = 0; ch < 6; ++ch) {
      EXPECT_LT((fit.model.coeffs[ch].array() - c(ch)).abs().maxCoeff(), 1e-9) << "n=" << n << " ch=" << ch;
    }
    for (const auto& o : random_orientations(12, 20, 1.0)) {
      EXPECT_LT((bp_predict(fit.model, o).wrench() - c).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(BPFit, RecoversDegreeTwoPolynomialOnFiveByFiveGrid) {
  const Workspace dom{-1, 1, -1, 1};
  const auto surf = random_surface(2, 13, dom);
  const auto data = grid_data(5, 1.0, [&](const Orientation& o) { return surf.at(o); });
  const auto fit = bp_fit(data, 2);
  for (const auto& o : random_orientations(14, 100, 1.0)) {
    ASSERT_LT((bp_predict(fit.model, o).wrench() - surf.at(o)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BPFit, ExactForEveryDegreeUpToN) {
  const Workspace dom{-1.2, 0.8, -0.5, 1.5};
  for (int n = 1; n <= 5; ++n) {
    for (int m = 0; m <= n; ++m) {
      const auto surf = random_surface(m, 100 + 10 * n + m, dom);
      std::vector<CalibrationPoint> data;
      for (double r : linspace(dom.roll_min, dom.roll_max, n + 3))
        for (double t : linspace(dom.tilt_min, dom.tilt_max, n + 3))
          data.push_back({{r, t}, make_sample(0.0, surf.at({r, t}), Frame::drill)});
      const auto fit = bp_fit(data, n, dom);
      std::mt19937_64 rng(n * 31 + m);
      std::uniform_real_distribution<double> ur(dom.roll_min, dom.roll_max), ut(dom.tilt_min, dom.tilt_max);
      for (int i = 0; i < 100; ++i) {
        const Orientation o{ur(rng), ut(rng)};
        ASSERT_LT((bp_predict(fit.model, o).wrench() - surf.at(o)).cwiseAbs().maxCoeff(), 1e-9)
            << "n=" << n << " m=" << m;
      }
    }
  }
}

namespace {
Wrench held_out_gravity_rmse(double half_range, int degree) {
  const PhysicsModelParams p{0.5, kStandardGravity, {10, 5, -3}};
  const auto data = grid_data(7, half_range, [&](const Orientation& o) { return physics_wrench(p, o); });
  const auto fit = bp_fit(data, degree);
  const auto held_out = physics_data(p, random_orientations(15, 500, half_range));
  return tool_weight_residuals(ToolWeightModel{fit.model}, held_out).rmse;
}
}  // namespace

// Over the calibration sweep range (+-60 deg) degree 4 reaches sensor-level residuals.
TEST(BPFit, GravityOnSevenBySevenGridAtDegreeFour) {
  const Wrench r = held_out_gravity_rmse(kPi / 3, 4);
  EXPECT_LE(r.head<3>().maxCoeff(), 0.01) << r.transpose();
  EXPECT_LE(r.tail<3>().maxCoeff(), 0.2) << r.transpose();
}

// Over the full +-90 deg a quartic cannot follow the trigonometric gravity
// terms to 0.01 N (best fit ~0.018 N); one more degree is enough.
TEST(BPFit, FullHemisphereNeedsDegreeFive) {
  const Wrench r4 = held_out_gravity_rmse(kPi / 2, 4);
  EXPECT_GT(r4.head<3>().maxCoeff(), 0.01);
  const Wrench r5 = held_out_gravity_rmse(kPi / 2, 5);
  EXPECT_LE(r5.head<3>().maxCoeff(), 0.01) << r5.transpose();
  EXPECT_LE(r5.tail<3>().maxCoeff(), 0.2) << r5.transpose();
}

TEST(BPFit, TrainingResidualNeverIncreasesWithDegree) {
  const PhysicsModelParams p{0.5, kStandardGravity, {10, 5, -3}};
  const auto data = grid_data(11, kPi / 2, [&](const Orientation& o) { return physics_wrench(p, o); });
  Wrench prev = Wrench::Constant(INFINITY);
  for (int n = 0; n <= 8; ++n) {
    const auto fit = bp_fit(data, n);
    for (int c = 0; c < 6; ++c) {
      // nested least-squares spaces: allow only round-off growth
      ASSERT_LE(fit.train_rmse(c), prev(c) * (1 + 1e-9) + 1e-12) << "n=" << n << " ch=" << c;
    }
    prev = fit.train_rmse;
  }
}

TEST(BPFit, RoundTripMatchesReportedResidual) {
  const PhysicsModelParams p{0.5, kStandardGravity, {10, 5, -3}};
  std::mt19937_64 rng(16);
  std::normal_distribution<double> noise(0, 0.01);
  auto data = grid_data(8, 1.0, [&](const Orientation& o) { return physics_wrench(p, o); });
  for (auto& d : data) d.reading.force += Vec3(noise(rng), noise(rng), noise(rng));
  const auto fit = bp_fit(data, 3);
  const auto r = tool_weight_residuals(ToolWeightModel{fit.model}, data);
  for (int c = 0; c < 6; ++c) {
    EXPECT_NEAR(r.rmse(c), fit.train_rmse(c), 1e-9 + 1e-9 * fit.train_rmse(c));
    EXPECT_NEAR(r.max_abs(c), fit.train_max_abs(c), 1e-9 + 1e-9 * fit.train_max_abs(c));
  }
}

TEST(BPFit, ExactFitReproducesTrainingPoints) {
  const auto surf = random_surface(3, 17, {-1, 1, -1, 1});
  const auto data = grid_data(6, 1.0, [&](const Orientation& o) { return surf.at(o); });
  const auto fit = bp_fit(data, 3);
  for (const auto& d : data) {
    ASSERT_LT((bp_predict(fit.model, d.orientation).wrench() - d.reading.wrench()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BPFit, TooFewSamplesStatesMinimum) {
  const auto data = grid_data(3, 1.0, [](const Orientation&) { return Wrench::Zero().eval(); });
  try {
    bp_fit(data, 3);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos) << e.what();
  }
}

TEST(BPFit, RankDeficiencyNamesTheAxis) {
  std::vector<CalibrationPoint> data;
  for (double r : linspace(-1, 1, 30)) data.push_back({{r, 0.5}, make_sample(0.0, Wrench::Zero(), Frame::drill)});
  for (double r : linspace(-1, 1, 30)) data.push_back({{r, -0.5}, make_sample(0.0, Wrench::Zero(), Frame::drill)});
  try {
    bp_fit(data, 3);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("tilt"), std::string::npos) << e.what();
  }
}

TEST(BPPredict, RefusesFarExtrapolation) {
  const auto data = grid_data(5, 1.0, [](const Orientation&) { return Wrench::Ones().eval(); });
  const auto fit = bp_fit(data, 2, Workspace{-1, 1, -1, 1});
  EXPECT_THROW(bp_predict(fit.model, {1.2, 0.0}), DataError);
  EXPECT_THROW(bp_predict(fit.model, {0.0, -1.2}), DataError);
}

TEST(BPPredict, ClampsMarginalOvershootWithFlag) {
  const auto data = grid_data(5, 1.0, [](const Orientation& o) {
    Wrench w = Wrench::Zero();
    w(0) = o.roll;
    return w;
  });
  const auto fit = bp_fit(data, 2, Workspace{-1, 1, -1, 1});
  const auto inside = bp_evaluate(fit.model, {0.5, 0.0});
  EXPECT_FALSE(inside.clamped);
  const auto edge = bp_evaluate(fit.model, {1.05, 0.0});
  EXPECT_TRUE(edge.clamped);
  EXPECT_NEAR(edge.wrench(0), 1.0, 1e-9);
}

// ---------------------------------------------------------------------------
// serialization

TEST(ToolWeightJson, RoundTripsBothKinds) {
  const ToolWeightModel phys = PhysicsModelParams{0.5, 9.81, {10, 5, -3}};
  const auto back = tool_weight_from_json(to_json(phys));
  const auto& p = std::get<PhysicsModelParams>(back);
  EXPECT_EQ(p.mass, 0.5);
  EXPECT_EQ(p.g, 9.81);
  EXPECT_EQ(p.centroid, Vec3(10, 5, -3));

  const auto surf = random_surface(2, 18, {-1, 1, -1, 1});
  const auto data = grid_data(5, 1.0, [&](const Orientation& o) { return surf.at(o); });
  const ToolWeightModel bp = bp_fit(data, 2).model;
  const nlohmann::json j = to_json(bp);
  EXPECT_EQ(j["kind"], "bp");
  EXPECT_TRUE(j["coeffs"].contains("ty"));
  const auto back_bp = tool_weight_from_json(nlohmann::json::parse(j.dump()));
  for (const auto& o : random_orientations(19, 20, 1.0)) {
    EXPECT_EQ(evaluate_tool_weight(bp, o).wrench, evaluate_tool_weight(back_bp, o).wrench);
  }
}

TEST(ToolWeightJson, RejectsMalformedModels) {
  EXPECT_THROW(tool_weight_from_json({{"kind", "spline"}}), DataError);
  EXPECT_THROW(tool_weight_from_json({{"kind", "physics"}, {"m", 0.5}}), DataError);
  EXPECT_THROW(tool_weight_from_json({{"kind", "physics"}, {"m", -1.0}, {"C", {0, 0, 0}}}), DataError);
  EXPECT_THROW(tool_weight_from_json(
                   {{"kind", "bp"}, {"degree", 1}, {"domain", {0, 0, -1, 1}}, {"coeffs", nlohmann::json::object()}}),
               DataError);
}
