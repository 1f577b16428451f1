#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nrdq/denoisers.hpp"
#include "nrdq/forest.hpp"
#include "nrdq/image.hpp"

namespace nrdq {

struct TuneConfig {
  double step = 2.0;
  /// Finite-difference half step; 0 means width / 80.
  double dtheta = 0.0;
  int max_iters = 20;
  double theta_min = 0.0;
  double theta_max = 1.0;

  /// Defaults for a method: its theta range, step 2 (psnr) or 20 (ssim).
  static TuneConfig for_method(Method m, Target target);

  void validate() const;
  double half_step() const;
  double tolerance() const { return 0.5 * half_step(); }
  double start() const { return 0.5 * (theta_min + theta_max); }
};

struct TuneIterate {
  double theta = 0.0;
  double q = 0.0;  // mean of the two finite-difference evaluations
  double grad = 0.0;
};

struct TuneTrace {
  std::vector<TuneIterate> iterates;
  double theta = 0.0;  // θ*
  double q = 0.0;      // q(θ*)
  bool converged = false;
  int evaluations = 0;
  Image result;  // denoised at θ*; empty for stub objectives

  int iterations() const { return static_cast<int>(iterates.size()); }
};

using QualityFn = std::function<double(double)>;

/// Gradient ascent θ ← clamp(θ + λ (q(θ+dθ) − q(θ−dθ)) / (2 dθ)) from the
/// midpoint; stops when a step moves less than tolerance() or after
/// max_iters. Probe points are clamped into the bounds. q(θ*) is evaluated
/// once at the end, so evaluations = 2 iterations + 1.
TuneTrace tune(const QualityFn& q, const TuneConfig& cfg);

/// predict(model, extract_features(noisy, denoise(noisy, θ))).
double quality_of(const Image& noisy, Method method, double theta,
                  const QualityModel& model);

TuneTrace tune(const Image& noisy, Method method, const QualityModel& model,
               const TuneConfig& cfg);

/// n evenly spaced θ values covering the method's range, ends included.
std::vector<double> theta_grid(Method method, int n = 80);

double true_quality(const Image& clean, const Image& denoised, Target target);

struct BruteForceResult {
  double theta = 0.0;
  double value = 0.0;
  std::vector<double> curve;  // true metric per grid point
};

/// Exhaustive argmax of the true metric over the grid; ties go to the
/// smallest θ.
BruteForceResult brute_force_optimum(const Image& noisy, const Image& clean,
                                     Method method, std::span<const double> grid,
                                     Target target);

/// metric(denoise(θ_gt)) − metric(denoise(θ*)).
double tune_quality_gap(const Image& noisy, const Image& clean, Method method,
                        double theta_star, double theta_gt, Target target);

/// Predicted and true quality sampled on an ascending θ grid.
struct CalibrationCurve {
  std::vector<double> theta;
  std::vector<double> predicted;
  std::vector<double> truth;
};

struct Calibration {
  TuneConfig config;
  double mean_gap = 0.0;
  double mean_iterations = 0.0;
};

/// Picks step and dtheta for `base` by running the tuner on piecewise linear
/// predicted curves and scoring θ* against the true curve. Steps tried are
/// base.step / 2^k (k = 0..10), half steps width/80 times 1, 2, 4, 8. The
/// lowest mean gap wins; ties keep the earlier candidate.
Calibration calibrate_step(std::span<const CalibrationCurve> curves, const TuneConfig& base);

/// CSV with header iter,theta,q,grad.
std::string trace_csv(const TuneTrace& trace);
void write_trace_csv(const TuneTrace& trace, const std::filesystem::path& path);

}  // namespace nrdq
