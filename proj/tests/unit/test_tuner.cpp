#include <cmath>

#include "doctest.h"
#include "nrdq/tuner.hpp"

using namespace nrdq;

namespace {

TuneConfig stub_config() {
  TuneConfig c;
  c.theta_min = 0.0;
  c.theta_max = 16.0;
  c.step = 0.3;
  c.dtheta = 0.5;
  c.max_iters = 20;
  return c;
}

}  // namespace

TEST_CASE("quadratic stub") {
  const auto cfg = stub_config();
  const auto t = tune([](double x) { return -(x - 7) * (x - 7); }, cfg);
  CHECK(std::abs(t.theta - 7.0) <= 0.5);
  CHECK(t.iterations() <= 20);
  CHECK(t.evaluations == 2 * t.iterations() + 1);
  CHECK(t.iterates.front().theta == 8.0);
  const auto again = tune([](double x) { return -(x - 7) * (x - 7); }, cfg);
  CHECK(again.theta == t.theta);
  CHECK(again.iterations() == t.iterations());
}

TEST_CASE("constant objective stops at the start") {
  int calls = 0;
  const auto t = tune([&](double) { ++calls; return 3.0; }, stub_config());
  CHECK(t.iterations() == 1);
  CHECK(t.theta == 8.0);
  CHECK(t.converged);
  CHECK(t.evaluations == 3);
  CHECK(calls == 3);
}

TEST_CASE("concave peaks are found") {
  // For q = -c (x - p)^2 the central difference is exact and each step scales
  // the distance to p by (1 - r), r = 2 λ c. The run stops once the step is
  // below tol, so |θ* - p| < tol |1 - r| / r.
  for (double peak : {1.5, 4.0, 11.0, 14.5}) {
    for (double curv : {0.05, 0.2, 1.0}) {
      for (double r : {0.35, 0.6, 1.0, 1.5}) {
        auto cfg = stub_config();
        cfg.step = r / (2 * curv);
        cfg.max_iters = 200;
        int calls = 0;
        const auto t = tune([&](double x) { ++calls; return -curv * (x - peak) * (x - peak); }, cfg);
        const double bound = cfg.tolerance() * std::abs(1 - r) / r;
        CHECK(t.converged);
        CHECK(std::abs(t.theta - peak) <= bound + 1e-9);
        CHECK(std::abs(t.theta - peak) <= std::max(cfg.tolerance(), cfg.half_step()));
        CHECK(calls == 2 * t.iterations() + 1);
      }
    }
  }
}

TEST_CASE("bounds clamp theta and probes") {
  auto cfg = stub_config();
  cfg.step = 50.0;
  std::vector<double> seen;
  const auto t = tune([&](double x) { seen.push_back(x); return x; }, cfg);
  for (double x : seen) {
    CHECK(x >= 0.0);
    CHECK(x <= 16.0);
  }
  CHECK(t.theta == 16.0);
}

TEST_CASE("defaults") {
  const auto p = TuneConfig::for_method(Method::nlm, Target::psnr);
  const auto s = TuneConfig::for_method(Method::nlm, Target::ssim);
  CHECK(p.step == 2.0);
  CHECK(s.step == 20.0);
  CHECK(p.max_iters == 20);
  CHECK(p.half_step() == doctest::Approx((p.theta_max - p.theta_min) / 80.0));
  CHECK(p.tolerance() == doctest::Approx(0.5 * p.half_step()));
  CHECK(p.start() == doctest::Approx(0.5 * (p.theta_min + p.theta_max)));
  CHECK_THROWS_AS(TuneConfig::for_method(Method::median, Target::psnr), Error);
  auto bad = stub_config();
  bad.step = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = stub_config();
  bad.theta_max = bad.theta_min;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("theta grid") {
  const auto r = *theta_range(Method::nlm);
  const auto g = theta_grid(Method::nlm, 80);
  CHECK(g.size() == 80);
  CHECK(g.front() == r.min);
  CHECK(g.back() == r.max);
  CHECK(theta_grid(Method::nlm, 1) == std::vector<double>{r.mid()});
}

TEST_CASE("trace csv") {
  const auto t = tune([](double x) { return -(x - 7) * (x - 7); }, stub_config());
  const auto csv = trace_csv(t);
  CHECK(csv.rfind("iter,theta,q,grad\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == t.iterations() + 1);
}

TEST_CASE("calibration prefers steps that reach the peak") {
  std::vector<CalibrationCurve> curves;
  for (double peak : {0.5, 0.9, 2.2}) {
    CalibrationCurve c;
    for (int i = 0; i <= 40; ++i) {
      const double th = 0.2 + 2.8 * i / 40.0;
      c.theta.push_back(th);
      c.predicted.push_back(30 - 3 * (th - peak) * (th - peak));
      c.truth.push_back(30 - 3 * (th - peak) * (th - peak));
    }
    curves.push_back(c);
  }
  TuneConfig base;
  base.theta_min = 0.2;
  base.theta_max = 3.0;
  const auto cal = calibrate_step(curves, base);
  CHECK(cal.mean_gap < 0.05);
  CHECK(cal.config.step <= base.step);
  CHECK(cal.config.theta_min == base.theta_min);
  CHECK_THROWS_AS(calibrate_step(std::vector<CalibrationCurve>{}, base), Error);
}
