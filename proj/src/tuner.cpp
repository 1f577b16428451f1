#include "nrdq/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "nrdq/features.hpp"
#include "nrdq/metrics.hpp"

namespace nrdq {

TuneConfig TuneConfig::for_method(Method m, Target target) {
  const auto range = theta_range(m);
  if (!range) {
    throw Error(fmt::format("method '{}' has no continuous parameter", to_string(m)));
  }
  TuneConfig cfg;
  cfg.theta_min = range->min;
  cfg.theta_max = range->max;
  cfg.step = target == Target::psnr ? 2.0 : 20.0;
  return cfg;
}

void TuneConfig::validate() const {
  if (!(step > 0.0)) throw Error("tune step must be positive");
  if (dtheta < 0.0) throw Error("tune dtheta must be positive (or 0 for the default)");
  if (max_iters <= 0) throw Error("tune max_iters must be positive");
  if (!(theta_min < theta_max)) throw Error("tune bounds must satisfy min < max");
}

double TuneConfig::half_step() const {
  return dtheta > 0.0 ? dtheta : (theta_max - theta_min) / 80.0;
}

TuneTrace tune(const QualityFn& q, const TuneConfig& cfg) {
  cfg.validate();
  const double h = cfg.half_step();
  auto clamp = [&](double t) { return std::clamp(t, cfg.theta_min, cfg.theta_max); };

  TuneTrace trace;
  double theta = cfg.start();
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double hi = clamp(theta + h), lo = clamp(theta - h);
    const double q_hi = q(hi), q_lo = q(lo);
    trace.evaluations += 2;
    const double grad = (q_hi - q_lo) / (hi - lo);
    trace.iterates.push_back({theta, 0.5 * (q_hi + q_lo), grad});
    const double next = clamp(theta + cfg.step * grad);
    const bool done = std::abs(next - theta) < cfg.tolerance();
    theta = next;
    if (done) {
      trace.converged = true;
      break;
    }
  }
  trace.theta = theta;
  trace.q = q(theta);
  ++trace.evaluations;
  return trace;
}

double quality_of(const Image& noisy, Method method, double theta,
                  const QualityModel& model) {
  const Image out = denoise(noisy, DenoiserId::with_theta(method, theta));
  return model.predict(extract_features(noisy, out));
}

TuneTrace tune(const Image& noisy, Method method, const QualityModel& model,
               const TuneConfig& cfg) {
  auto q = [&](double theta) { return quality_of(noisy, method, theta, model); };
  TuneTrace trace = tune(q, cfg);
  trace.result = denoise(noisy, DenoiserId::with_theta(method, trace.theta));
  return trace;
}

std::vector<double> theta_grid(Method method, int n) {
  const auto range = theta_range(method);
  if (!range) {
    throw Error(fmt::format("method '{}' has no continuous parameter", to_string(method)));
  }
  if (n <= 0) throw Error("theta grid needs at least one point");
  if (n == 1) return {range->mid()};
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = range->min + range->width() * static_cast<double>(i) / (n - 1);
  }
  out.back() = range->max;
  return out;
}

double true_quality(const Image& clean, const Image& denoised, Target target) {
  return target == Target::psnr ? psnr(clean, denoised) : ssim(clean, denoised);
}

BruteForceResult brute_force_optimum(const Image& noisy, const Image& clean,
                                     Method method, std::span<const double> grid,
                                     Target target) {
  if (grid.empty()) throw Error("brute-force grid is empty");
  std::vector<double> sorted(grid.begin(), grid.end());
  std::ranges::sort(sorted);
  BruteForceResult best;
  bool first = true;
  for (double theta : sorted) {
    const double v =
        true_quality(clean, denoise(noisy, DenoiserId::with_theta(method, theta)), target);
    best.curve.push_back(v);
    if (first || v > best.value) {
      best.theta = theta;
      best.value = v;
      first = false;
    }
  }
  return best;
}

double tune_quality_gap(const Image& noisy, const Image& clean, Method method,
                        double theta_star, double theta_gt, Target target) {
  auto metric = [&](double theta) {
    return true_quality(clean, denoise(noisy, DenoiserId::with_theta(method, theta)),
                        target);
  };
  if (theta_star == theta_gt) return 0.0;
  return metric(theta_gt) - metric(theta_star);
}

namespace {

double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

}  // namespace

Calibration calibrate_step(std::span<const CalibrationCurve> curves, const TuneConfig& base) {
  base.validate();
  if (curves.empty()) throw Error("calibration needs at least one curve");
  for (const auto& c : curves) {
    if (c.theta.size() < 2 || c.predicted.size() != c.theta.size() ||
        c.truth.size() != c.theta.size() || !std::ranges::is_sorted(c.theta)) {
      throw Error("calibration curve must be an ascending grid of matching lengths");
    }
  }
  const double width = base.theta_max - base.theta_min;
  Calibration best;
  bool first = true;
  for (int k = 0; k <= 10; ++k) {
    for (double mult : {1.0, 2.0, 4.0, 8.0}) {
      TuneConfig cfg = base;
      cfg.step = base.step / std::ldexp(1.0, k);
      cfg.dtheta = width / 80.0 * mult;
      double gap = 0.0, iters = 0.0;
      for (const auto& c : curves) {
        const TuneTrace t =
            tune([&](double th) { return interpolate(c.theta, c.predicted, th); }, cfg);
        const double top = *std::ranges::max_element(c.truth);
        gap += top - interpolate(c.theta, c.truth, t.theta);
        iters += t.iterations();
      }
      gap /= static_cast<double>(curves.size());
      iters /= static_cast<double>(curves.size());
      if (first || gap < best.mean_gap) {
        best = {cfg, gap, iters};
        first = false;
      }
    }
  }
  return best;
}

std::string trace_csv(const TuneTrace& trace) {
  std::string out = "iter,theta,q,grad\n";
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    const auto& it = trace.iterates[i];
    out += fmt::format("{},{},{},{}\n", i, it.theta, it.q, it.grad);
  }
  return out;
}

void write_trace_csv(const TuneTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write trace '{}'", path.string()));
  out << trace_csv(trace);
}

}  // namespace nrdq
