#include "nrdq/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "nrdq/metrics.hpp"
#include "nrdq/noise.hpp"
#include "nrdq/svd.hpp"

namespace nrdq {

std::string_view to_string(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::ss: return "ss";
    case FeatureFamily::sr: return "sr";
    case FeatureFamily::sgm: return "sgm";
    case FeatureFamily::sc: return "sc";
    case FeatureFamily::vr: return "vr";
    case FeatureFamily::gh: return "gh";
  }
  return "unknown";
}

FeatureFamily parse_family(std::string_view text) {
  for (FeatureFamily f : kAllFamilies) {
    if (to_string(f) == text) return f;
  }
  throw Error(fmt::format("unknown feature family '{}'", text));
}

FamilySpan family_span(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::ss: return {0, 3};
    case FeatureFamily::sr: return {3, 3};
    case FeatureFamily::sgm: return {6, 3};
    case FeatureFamily::sc: return {9, 3};
    case FeatureFamily::vr: return {12, 6};
    case FeatureFamily::gh: return {18, 1};
  }
  return {0, 0};
}

std::array<double, 3> feature_ss(const Image& denoised) {
  require_gray(denoised, "feature_ss");
  const auto patches = extract_patches(denoised, kSsPatchSide);
  const auto spectrum = singular_values(patches);
  const double n = static_cast<double>(spectrum.values.size());
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < kSsAlphas.size(); ++i) {
    out[i] = partial_energy_count(spectrum.values, kSsAlphas[i]) / n;
  }
  return out;
}

namespace {

// Residual maps of several results of the same noisy image. The weights only
// depend on the noisy guide, so they are evaluated once per neighbour.
std::vector<std::vector<double>> residual_maps(const Image& noisy,
                                               std::span<const Image> denoised,
                                               const SrParams& params) {
  require_gray(noisy, "feature_sr");
  for (const auto& d : denoised) require_same_shape(noisy, d, "feature_sr");
  const int w = noisy.width(), h = noisy.height();
  const std::size_t n = noisy.plane_size();
  const std::size_t count = denoised.size();
  const auto guide_grad = gradient_field(noisy).magnitude;
  auto guide = noisy.plane(0);
  // residual values interleaved per pixel: residual[q * count + k]
  std::vector<double> residual(n * count);
  for (std::size_t k = 0; k < count; ++k) {
    auto result = denoised[k].plane(0);
    for (std::size_t i = 0; i < n; ++i) residual[i * count + k] = double(result[i]) - guide[i];
  }

  const int radius = static_cast<int>(std::ceil(2.0 * params.sigma_spatial));
  const int side = 2 * radius + 1;
  std::vector<double> spatial(static_cast<std::size_t>(side) * side);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      spatial[(dy + radius) * side + dx + radius] =
          (dx * dx + dy * dy) / (2.0 * params.sigma_spatial * params.sigma_spatial);
    }
  }
  const double color_scale = 1.0 / (2.0 * params.sigma_color * params.sigma_color);
  const double structure_scale =
      1.0 / (2.0 * params.sigma_structure * params.sigma_structure);

  std::vector<std::vector<double>> out(count, std::vector<double>(n));
  std::vector<double> acc(count);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const double ip = guide[p], gp = guide_grad[p];
      double wsum = 0.0;
      std::ranges::fill(acc, 0.0);
      for (int qy = y0; qy <= y1; ++qy) {
        const double* srow = spatial.data() + (qy - y + radius) * side;
        const std::size_t row = static_cast<std::size_t>(qy) * w;
        for (int qx = x0; qx <= x1; ++qx) {
          const std::size_t q = row + qx;
          const double di = guide[q] - ip;
          const double dg = guide_grad[q] - gp;
          const double e = srow[qx - x + radius] + di * di * color_scale +
                           dg * dg * structure_scale;
          const double wt = std::exp(-e);
          wsum += wt;
          const double* r = residual.data() + q * count;
          for (std::size_t k = 0; k < count; ++k) acc[k] += wt * r[k];
        }
      }
      for (std::size_t k = 0; k < count; ++k) out[k][p] = acc[k] / wsum;
    }
  }
  return out;
}

std::vector<std::array<double, 3>> feature_sr_batch(const Image& noisy,
                                                    std::span<const Image> denoised) {
  std::vector<std::array<double, 3>> out(denoised.size());
  for (std::size_t i = 0; i < kSrPresets.size(); ++i) {
    const auto maps = residual_maps(noisy, denoised, kSrPresets[i]);
    for (std::size_t k = 0; k < maps.size(); ++k) {
      double sum = 0.0;
      for (double v : maps[k]) sum += v * v;
      out[k][i] = std::sqrt(sum / static_cast<double>(maps[k].size()));
    }
  }
  return out;
}

}  // namespace

std::vector<double> structural_residual_map(const Image& noisy,
                                            const Image& denoised,
                                            const SrParams& params) {
  return std::move(residual_maps(noisy, std::span(&denoised, 1), params).front());
}

std::array<double, 3> feature_sr(const Image& noisy, const Image& denoised) {
  return feature_sr_batch(noisy, std::span(&denoised, 1)).front();
}

std::array<double, 3> feature_sgm(const Image& denoised) {
  require_gray(denoised, "feature_sgm");
  auto mags = gradient_field(denoised).magnitude;
  std::vector<double> nonzero;
  nonzero.reserve(mags.size());
  for (float m : mags) {
    if (m > 0.0f) nonzero.push_back(m);
  }
  std::ranges::sort(nonzero);
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < kSgmPercents.size(); ++i) {
    const std::size_t count = nonzero.size() * kSgmPercents[i] / 100;
    if (count == 0) continue;
    const double mean =
        std::accumulate(nonzero.begin(), nonzero.begin() + count, 0.0) / count;
    double var = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      var += (nonzero[k] - mean) * (nonzero[k] - mean);
    }
    out[i] = std::sqrt(var / count);
  }
  return out;
}

std::array<double, 3> feature_sc(const Image& noisy, const Image& denoised) {
  require_gray(noisy, "feature_sc");
  require_same_shape(noisy, denoised, "feature_sc");
  Image shifted = noise_map(noisy, denoised);
  for (float& v : shifted.data()) v = std::clamp(v + 128.0f, 0.0f, 255.0f);

  std::array<double, 3> out{};
  for (std::size_t i = 0; i < kScWindows.size(); ++i) {
    const auto cfg = SsimConfig::uniform(kScWindows[i]);
    const auto a = ssim_map(denoised, noisy, cfg);
    const auto b = ssim_map(shifted, noisy, cfg);
    const auto r = pearson(a.values, b.values);
    out[i] = r ? -*r : 0.0;
  }
  return out;
}

std::array<double, 6> feature_vr(const Image& noisy, const Image& denoised) {
  require_gray(noisy, "feature_vr");
  require_same_shape(noisy, denoised, "feature_vr");
  auto a = noisy.plane(0), b = denoised.plane(0);
  double data_l1 = 0.0, data_l2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - b[i];
    data_l1 += std::abs(d);
    data_l2 += d * d;
  }
  const auto grad = gradient_field(denoised);
  double grad_l1 = 0.0, grad_l2 = 0.0;
  for (std::size_t i = 0; i < grad.dx.size(); ++i) {
    const double dx = grad.dx[i], dy = grad.dy[i];
    grad_l1 += std::abs(dx) + std::abs(dy);
    grad_l2 += dx * dx + dy * dy;
  }
  const double n = static_cast<double>(a.size());
  std::array<double, 6> out{};
  for (std::size_t i = 0; i < kVrPresets.size(); ++i) {
    const auto& cfg = kVrPresets[i];
    const double data = cfg.data_norm == Norm::l1 ? data_l1 : data_l2;
    const double smooth = cfg.smoothness_norm == Norm::l1 ? grad_l1 : grad_l2;
    out[i] = (data + cfg.lambda * smooth) / n;
  }
  return out;
}

namespace {

const double kMaxMagnitude = 255.0 * std::sqrt(2.0);

void add_to_histogram(std::vector<double>& hist, double magnitude) {
  const double bin_width = kMaxMagnitude / kGhBins;
  const int bin = std::clamp(static_cast<int>(magnitude / bin_width), 0, kGhBins - 1);
  hist[bin] += 1.0;
}

void normalize(std::vector<double>& hist) {
  const double total = std::accumulate(hist.begin(), hist.end(), 0.0);
  if (total > 0.0) {
    for (double& v : hist) v /= total;
  }
}

// Signed differences live on integer-centred bins spanning [-255.5, 255.5].
constexpr int kDiffRange = 255;
constexpr int kDiffBins = 2 * kDiffRange + 1;

int diff_bin(double v) {
  return std::clamp(static_cast<int>(std::lround(v)) + kDiffRange, 0, kDiffBins - 1);
}

std::vector<double> convolve_same(const std::vector<double>& x,
                                  const std::vector<double>& kernel) {
  const int r = static_cast<int>(kernel.size() / 2);
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -r; k <= r; ++k) {
      const int j = i - k;
      if (j >= 0 && j < n) acc += kernel[k + r] * x[j];
    }
    out[i] = acc;
  }
  return out;
}

// Richardson-Lucy style multiplicative deconvolution; the iterate stays
// nonnegative because every update is a product of nonnegative terms.
std::vector<double> deconvolve(const std::vector<double>& observed,
                               const std::vector<double>& kernel, int iterations) {
  std::vector<double> estimate = observed;
  std::vector<double> ratio(observed.size());
  for (int it = 0; it < iterations; ++it) {
    const auto blurred = convolve_same(estimate, kernel);
    for (std::size_t i = 0; i < ratio.size(); ++i) {
      ratio[i] = blurred[i] > 0.0 ? observed[i] / blurred[i] : 0.0;
    }
    const auto correction = convolve_same(ratio, kernel);  // kernel is symmetric
    for (std::size_t i = 0; i < estimate.size(); ++i) estimate[i] *= correction[i];
  }
  normalize(estimate);
  return estimate;
}

// Cumulative mass at bin edges: cdf[i] is the mass left of bin i.
std::vector<double> edge_cdf(const std::vector<double>& hist) {
  std::vector<double> cdf(hist.size() + 1, 0.0);
  for (std::size_t i = 0; i < hist.size(); ++i) cdf[i + 1] = cdf[i] + hist[i];
  return cdf;
}

// Monotone map of noisy differences onto the deconvolved distribution by
// matching cumulative mass, linear within each bin.
class QuantileTransfer {
 public:
  QuantileTransfer(const std::vector<double>& from, const std::vector<double>& to)
      : from_(from), to_(to), from_cdf_(edge_cdf(from)), to_cdf_(edge_cdf(to)) {}

  double operator()(double v) const {
    const int b = diff_bin(v);
    const double left_edge = b - kDiffRange - 0.5;
    const double frac = std::clamp(v - left_edge, 0.0, 1.0);
    const double mass = from_cdf_[b] + frac * from_[b];
    // first bin j whose right edge reaches `mass` and that carries mass
    auto it = std::lower_bound(to_cdf_.begin() + 1, to_cdf_.end(), mass);
    int j = static_cast<int>(it - to_cdf_.begin()) - 1;
    j = std::clamp(j, 0, kDiffBins - 1);
    while (j + 1 < kDiffBins && to_[j] <= 0.0) ++j;
    const double within = to_[j] > 0.0 ? (mass - to_cdf_[j]) / to_[j] : 0.5;
    return (j - kDiffRange - 0.5) + std::clamp(within, 0.0, 1.0);
  }

 private:
  const std::vector<double>& from_;
  const std::vector<double>& to_;
  std::vector<double> from_cdf_;
  std::vector<double> to_cdf_;
};

}  // namespace

double histogram_l1(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("histogram_l1: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

std::vector<double> gradient_histogram(const Image& img) {
  require_gray(img, "gradient_histogram");
  std::vector<double> hist(kGhBins, 0.0);
  for (float m : gradient_field(img).magnitude) add_to_histogram(hist, m);
  normalize(hist);
  return hist;
}

std::vector<double> target_gradient_histogram(const Image& noisy) {
  require_gray(noisy, "target_gradient_histogram");
  const int w = noisy.width(), h = noisy.height();
  const auto grad = gradient_field(noisy);

  // Pool horizontal and vertical differences (boundary zeros excluded).
  std::vector<double> observed(kDiffBins, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (x + 1 < w) observed[diff_bin(grad.dx[i])] += 1.0;
      if (y + 1 < h) observed[diff_bin(grad.dy[i])] += 1.0;
    }
  }
  normalize(observed);

  // A difference of two pixels carries noise of variance 2 sigma^2.
  const double sigma = w >= 2 ? estimate_noise_sigma(noisy) : 0.0;
  const double kernel_sigma = std::sqrt(2.0) * sigma;
  std::vector<double> clean = observed;
  if (kernel_sigma > 1e-3) {
    const int radius = std::min(kDiffRange, static_cast<int>(std::ceil(4.0 * kernel_sigma)));
    std::vector<double> kernel(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k) {
      kernel[k + radius] = std::exp(-(k * k) / (2.0 * kernel_sigma * kernel_sigma));
    }
    const double ksum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    for (double& v : kernel) v /= ksum;
    clean = deconvolve(observed, kernel, kGhDeconvIterations);
  }

  const QuantileTransfer transfer(observed, clean);
  std::vector<double> hist(kGhBins, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double dx = x + 1 < w ? transfer(grad.dx[i]) : 0.0;
      const double dy = y + 1 < h ? transfer(grad.dy[i]) : 0.0;
      add_to_histogram(hist, std::sqrt(dx * dx + dy * dy));
    }
  }
  normalize(hist);
  return hist;
}

double feature_gh(const Image& noisy, const Image& denoised) {
  require_same_shape(noisy, denoised, "feature_gh");
  return histogram_l1(target_gradient_histogram(noisy), gradient_histogram(denoised));
}

namespace {

std::vector<FeatureVector> extract_gray_batch(const Image& noisy,
                                              std::span<const Image> denoised) {
  require_gray(noisy, "extract_features");
  for (const auto& d : denoised) require_same_shape(noisy, d, "extract_features");
  const auto sr = feature_sr_batch(noisy, denoised);
  const auto target = target_gradient_histogram(noisy);
  std::vector<FeatureVector> out(denoised.size());
  for (std::size_t k = 0; k < denoised.size(); ++k) {
    const Image& d = denoised[k];
    FeatureVector& f = out[k];
    auto put = [&f](FeatureFamily family, std::span<const double> values) {
      std::ranges::copy(values, f.begin() + family_span(family).offset);
    };
    put(FeatureFamily::ss, feature_ss(d));
    put(FeatureFamily::sr, sr[k]);
    put(FeatureFamily::sgm, feature_sgm(d));
    put(FeatureFamily::sc, feature_sc(noisy, d));
    put(FeatureFamily::vr, feature_vr(noisy, d));
    f[family_span(FeatureFamily::gh).offset] = histogram_l1(target, gradient_histogram(d));
  }
  return out;
}

}  // namespace

FeatureVector extract_features_gray(const Image& noisy, const Image& denoised) {
  return extract_gray_batch(noisy, std::span(&denoised, 1)).front();
}

FeatureVector extract_features(const Image& noisy, const Image& denoised) {
  return extract_features_batch(noisy, std::span(&denoised, 1)).front();
}

std::vector<FeatureVector> extract_features_batch(const Image& noisy,
                                                  std::span<const Image> denoised) {
  for (const auto& d : denoised) require_same_shape(noisy, d, "extract_features");
  if (noisy.channels() == 1) return extract_gray_batch(noisy, denoised);
  // Running mean, so equal channels reproduce the single-channel value exactly.
  std::vector<FeatureVector> mean(denoised.size(), FeatureVector{});
  for (int c = 0; c < noisy.channels(); ++c) {
    std::vector<Image> planes;
    planes.reserve(denoised.size());
    for (const auto& d : denoised) planes.push_back(d.channel(c));
    const auto f = extract_gray_batch(noisy.channel(c), planes);
    for (std::size_t k = 0; k < f.size(); ++k) {
      for (std::size_t i = 0; i < kFeatureCount; ++i) {
        mean[k][i] += (f[k][i] - mean[k][i]) / (c + 1);
      }
    }
  }
  return mean;
}

}  // namespace nrdq
