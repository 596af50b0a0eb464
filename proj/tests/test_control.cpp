#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fblin/control.hpp"

using namespace fblin;

TEST_CASE("proportional point law") {
  const PointVelocityCommand c = tracking_law({2, 3}, {1, 1}, {0.5, 2.0});
  CHECK(c.v_Px == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.v_Py == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS(TrackingGains{-1, 1}.validate());
}

TEST_CASE("circle reference samples") {
  CircleReference c{2.0, 0.5, {1, -1}, M_PI / 2};
  const ReferenceSample s0 = reference_point(c, 0.0);
  CHECK(s0.point.x == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s0.point.y == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s0.feedforward.x == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(s0.feedforward.y == doctest::Approx(0.0).scale(1));
  // one full period later the sample repeats
  const ReferenceSample s1 = reference_point(c, 2 * M_PI / 0.5);
  CHECK(s1.point.x == doctest::Approx(s0.point.x).epsilon(1e-12));
  CHECK(s1.point.y == doctest::Approx(s0.point.y).epsilon(1e-12));
  CHECK_THROWS(reference_point(c, -1.0));
}

TEST_CASE("piecewise-constant velocity reference") {
  PiecewiseConstantVelocityReference r;
  r.origin = {1, 2};
  r.segments = {{2.0, 0.5, 0.0}, {1.0, 0.0, -1.0}};
  auto s = reference_point(r, 1.0);
  CHECK(s.point.x == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(s.point.y == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.feedforward.x == 0.5);
  s = reference_point(r, 2.5);
  CHECK(s.point.x == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.point.y == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(s.feedforward.y == -1.0);
  // past the schedule the position holds and the feedforward vanishes
  s = reference_point(r, 10.0);
  CHECK(s.point.x == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.point.y == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.feedforward.x == 0.0);
  CHECK(s.feedforward.y == 0.0);
}

TEST_CASE("sampled reference interpolates and holds") {
  SampledReference r;
  r.samples = {{0.0, {0, 0}}, {1.0, {2, 0}}, {3.0, {2, 4}}};
  auto s = reference_point(ReferenceTrajectory{r}, 0.5);
  CHECK(s.point.x == doctest::Approx(1.0).epsilon(1e-14));
  s = reference_point(ReferenceTrajectory{r}, 2.0);
  CHECK(s.point.x == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.point.y == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.feedforward.y == doctest::Approx(2.0).epsilon(1e-14));
  s = reference_point(ReferenceTrajectory{r}, 5.0);
  CHECK(s.point.y == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("dropout episodes merge and sort") {
  DropoutModel d;
  d.enabled = true;
  d.episodes = {{5.0, 1.0}, {1.0, 0.5}, {5.5, 1.0}};
  const auto eps = d.realize(10.0);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].start == 1.0);
  CHECK(eps[0].duration == 0.5);
  CHECK(eps[1].start == 5.0);
  CHECK(eps[1].duration == doctest::Approx(1.5));
  CHECK(DropoutModel{}.realize(10.0).empty());
}

TEST_CASE("stochastic dropout is seeded") {
  DropoutModel d;
  d.enabled = true;
  d.stochastic = true;
  d.rate = 0.5;
  d.seed = 99;
  const auto a = d.realize(100.0);
  const auto b = d.realize(100.0);
  CHECK(!a.empty());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].start == b[i].start);
    CHECK(a[i].duration == b[i].duration);
    CHECK(a[i].duration >= d.min_duration - 1e-12);
    CHECK(a[i].duration <= d.max_duration + 1e-12);
    if (i) CHECK(a[i].start >= a[i - 1].start + a[i - 1].duration);
  }
  d.seed = 100;
  const auto c = d.realize(100.0);
  CHECK((c.size() != a.size() || c.front().start != a.front().start));
}

TEST_CASE("dropout holds pose channels only") {
  std::vector<Measurement> stream;
  for (int i = 0; i <= 10; ++i) {
    const double t = 0.1 * i;
    stream.push_back({t, t, 2 * t, 0.1 * t, 1.0 + t, -t, 0.5 * t});
  }
  const std::vector<DropoutEpisode> eps = {{0.35, 0.3}};
  const auto out = apply_dropout(stream, eps);
  REQUIRE(out.size() == stream.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = stream[i].t;
    if (t >= 0.35 && t < 0.65) {
      CHECK(out[i].x_G == doctest::Approx(0.3).epsilon(1e-12));  // held at t=0.3
      CHECK(out[i].y_G == doctest::Approx(0.6).epsilon(1e-12));
      CHECK(out[i].psi == doctest::Approx(0.03).epsilon(1e-12));
    } else {
      CHECK(out[i].x_G == stream[i].x_G);
    }
    // rate-gyro style channels always pass through
    CHECK(out[i].r == stream[i].r);
    CHECK(out[i].beta == stream[i].beta);
    CHECK(out[i].delta == stream[i].delta);
  }
  // idempotent: the held values are fixed points of the hold
  const auto twice = apply_dropout(out, eps);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(twice[i].x_G == out[i].x_G);
  // identity without episodes
  const auto same = apply_dropout(stream, {});
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(same[i].psi == stream[i].psi);
}

namespace {

VehicleState circle_start(const LinearisationConfig& cfg, double radius,
                          double offset) {
  // point P at (radius + offset, 0), heading tangent (+y)
  VehicleState s;
  s.psi = M_PI / 2;
  const double arm = cfg.law == Law::FrontAxleOffset ? cfg.l_f_est + cfg.p : cfg.p;
  s.x_G = radius + offset;
  s.y_G = -arm;
  return s;
}

struct Sinusoid {
  double amplitude;
  double phase;
};

Sinusoid fit(const std::vector<double>& t, const std::vector<double>& y, double w) {
  double a = 0, b = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    a += y[i] * std::cos(w * t[i]);
    b += y[i] * std::sin(w * t[i]);
  }
  a *= 2.0 / t.size();
  b *= 2.0 / t.size();
  return {std::hypot(a, b), std::atan2(-b, a)};
}

}  // namespace

TEST_CASE("closed-loop circle: first-order lag amplitude") {
  VehicleParams prm;
  LinearisationConfig cfg;
  CircleReference ref{1.0, 0.5, {0, 0}, 0.0};
  TrackingOptions opt;
  const RunLog log = run_tracking(ref, {1, 1}, {}, circle_start(cfg, 1.0, 0.3),
                                  prm, cfg, opt);
  REQUIRE(log.rows.size() == 6001);
  // steady window: the last two reference periods
  std::vector<double> t, x;
  for (const auto& row : log.rows)
    if (row.t >= opt.T - 2 * (2 * M_PI / ref.angular_velocity)) {
      t.push_back(row.t);
      x.push_back(row.point_p.x);
    }
  const Sinusoid sx = fit(t, x, ref.angular_velocity);
  // unit proportional gain against a rotating reference is a first-order lag:
  // gain K/sqrt(K^2 + w^2), phase atan(w/K)
  CHECK(sx.amplitude == doctest::Approx(1.0 / std::sqrt(1.25)).epsilon(0.02));
}

TEST_CASE("feedforward removes the tracking lag") {
  VehicleParams prm;
  LinearisationConfig cfg;
  CircleReference ref{1.0, 0.5, {0, 0}, 0.0};
  TrackingOptions opt;
  opt.use_feedforward = true;
  const RunLog log = run_tracking(ref, {1, 1}, {}, circle_start(cfg, 1.0, 0.3),
                                  prm, cfg, opt);
  double err_end = 0;
  for (const auto& row : log.rows)
    if (row.t >= opt.T - 5.0)
      err_end = std::max(err_end, std::hypot(row.point_p.x - row.point_p_ref.x,
                                             row.point_p.y - row.point_p_ref.y));
  CHECK(err_end < 0.02);
}

TEST_CASE("open-loop velocity schedule is reproduced") {
  VehicleParams prm;
  LinearisationConfig cfg;
  VehicleState s0;
  PiecewiseConstantVelocityReference ref;
  ref.origin = {cfg.l_f_est + cfg.p, 0};  // physical point P of the zero state
  ref.segments = {{4.0, 0.5, 0.0}, {4.0, 0.0, 0.5}, {4.0, 0.5, 0.2}};
  TrackingOptions opt;
  opt.T = 12.0;
  opt.use_feedforward = true;
  const RunLog log = run_tracking(ref, {0, 0}, {}, s0, prm, cfg, opt);
  const auto& last = log.rows.back();
  const double dev = std::hypot(last.point_p.x - last.point_p_ref.x,
                                last.point_p.y - last.point_p_ref.y);
  CHECK(dev < 0.2);  // transients at the corners, no feedback to pull them in
}

TEST_CASE("runs are deterministic") {
  VehicleParams prm;
  LinearisationConfig cfg;
  CircleReference ref{1.0, 0.5, {0, 0}, 0.0};
  DropoutModel drop;
  drop.enabled = true;
  drop.stochastic = true;
  drop.rate = 0.2;
  drop.seed = 7;
  TrackingOptions opt;
  opt.T = 20.0;
  const VehicleState s0 = circle_start(cfg, 1.0, 0.3);
  const RunLog a = run_tracking(ref, {1, 1}, drop, s0, prm, cfg, opt);
  const RunLog b = run_tracking(ref, {1, 1}, drop, s0, prm, cfg, opt);
  REQUIRE(a.rows.size() == b.rows.size());
  bool saw_dropout = false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].state.x_G == b.rows[i].state.x_G);
    CHECK(a.rows[i].state.r == b.rows[i].state.r);
    CHECK(a.rows[i].v_cmd == b.rows[i].v_cmd);
    saw_dropout = saw_dropout || a.rows[i].dropout_active;
  }
  CHECK(saw_dropout);
}

TEST_CASE("normalised prediction error") {
  const std::vector<double> ref = {0, 1, 2, 3, 4, 5};
  CHECK(compute_nmpe({ref}, {ref}) == 0.0);
  std::vector<double> shifted = ref;
  for (double& x : shifted) x += 1.0;
  // constant offset: RMS error 1, std of ref = std::sqrt(35/12)
  CHECK(compute_nmpe({shifted}, {ref}) ==
        doctest::Approx(1.0 / std::sqrt(35.0 / 12.0)).epsilon(1e-12));
  CHECK_THROWS_AS(compute_nmpe({{1, 2}}, {{1, 2, 3}}), MetricError);
  CHECK_THROWS_AS(compute_nmpe({{1, 2}, {1, 2}}, {{1, 2}}), MetricError);
  CHECK_THROWS_AS(compute_nmpe({{1, 1}}, {{2, 2}}), MetricError);  // zero variance
}
