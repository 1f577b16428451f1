#include "nrdq/denoisers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "nrdq/noise.hpp"

namespace nrdq {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::gaussian_filter: return "gaussian_filter";
    case Method::bilateral: return "bilateral";
    case Method::median: return "median";
    case Method::nlm: return "nlm";
    case Method::dct: return "dct";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (Method m : kAllMethods) {
    if (to_string(m) == text) return m;
  }
  throw Error(fmt::format("unknown denoising method '{}'", text));
}

std::string DenoiserId::param_string() const {
  return continuous ? fmt::format("theta={}", theta) : fmt::format("{}", index);
}

std::string DenoiserId::to_string() const {
  return fmt::format("{}:{}", nrdq::to_string(method), param_string());
}

DenoiserId DenoiserId::parse(std::string_view method, std::string_view param) {
  DenoiserId id;
  id.method = parse_method(method);
  constexpr std::string_view kThetaPrefix = "theta=";
  const char* end = param.data() + param.size();
  if (param.starts_with(kThetaPrefix)) {
    id.continuous = true;
    const char* first = param.data() + kThetaPrefix.size();
    auto r = std::from_chars(first, end, id.theta);
    if (r.ec != std::errc{} || r.ptr != end || first == end) {
      throw Error(fmt::format("malformed theta '{}'", param));
    }
  } else {
    auto r = std::from_chars(param.data(), end, id.index);
    if (r.ec != std::errc{} || r.ptr != end || param.empty()) {
      throw Error(fmt::format("malformed grid index '{}'", param));
    }
  }
  return id;
}

DenoiserId DenoiserId::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == text.npos) {
    throw Error(fmt::format("malformed denoiser id '{}'", text));
  }
  return parse(text.substr(0, colon), text.substr(colon + 1));
}

int grid_size(Method m) {
  switch (m) {
    case Method::gaussian_filter: return static_cast<int>(kGaussianSigmas.size());
    case Method::bilateral: return static_cast<int>(kBilateralRangeSigmas.size());
    case Method::median: return static_cast<int>(kMedianRadii.size());
    case Method::nlm: return static_cast<int>(kNlmStrengths.size());
    case Method::dct: return static_cast<int>(kDctThresholds.size());
  }
  return 0;
}

std::vector<DenoiserId> full_grid() {
  std::vector<DenoiserId> ids;
  for (Method m : kAllMethods) {
    for (int i = 0; i < grid_size(m); ++i) ids.push_back(DenoiserId::grid(m, i));
  }
  return ids;
}

std::optional<ThetaRange> theta_range(Method m) {
  switch (m) {
    case Method::nlm: return ThetaRange{0.2, 3.0};
    case Method::bilateral: return ThetaRange{5.0, 100.0};
    case Method::gaussian_filter: return ThetaRange{0.3, 5.0};
    default: return std::nullopt;
  }
}

namespace {

// Applies a single-channel filter to every plane of `img`.
template <typename Fn>
Image per_channel(const Image& img, Fn&& fn) {
  if (img.channels() == 1) return fn(img).clamped();
  std::vector<Image> planes;
  for (int c = 0; c < img.channels(); ++c) planes.push_back(fn(img.channel(c)).clamped());
  return Image::merge(planes);
}

std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

Image gaussian_gray(const Image& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const auto taps = gaussian_taps(sigma, radius);
  const int w = img.width(), h = img.height();
  std::vector<double> tmp(img.plane_size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += taps[i + radius] * img.at(reflect_index(x + i, w), y);
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += taps[i + radius] * tmp[static_cast<std::size_t>(reflect_index(y + i, h)) * w + x];
      }
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

Image bilateral_gray(const Image& img, double sigma_s, double sigma_r) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_s));
  const int w = img.width(), h = img.height();
  const int side = 2 * radius + 1;
  std::vector<double> spatial(static_cast<std::size_t>(side) * side);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      spatial[(dy + radius) * side + dx + radius] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s));
    }
  }
  const double range_scale = 1.0 / (2.0 * sigma_r * sigma_r);
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double center = img.at(x, y);
      double wsum = 0.0, acc = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = reflect_index(y + dy, h);
        for (int dx = -radius; dx <= radius; ++dx) {
          const double v = img.at(reflect_index(x + dx, w), yy);
          const double diff = v - center;
          const double wt = spatial[(dy + radius) * side + dx + radius] *
                            std::exp(-diff * diff * range_scale);
          wsum += wt;
          acc += wt * v;
        }
      }
      out.at(x, y) = static_cast<float>(acc / wsum);
    }
  }
  return out;
}

Image median_gray(const Image& img, int radius) {
  const int w = img.width(), h = img.height();
  const int side = 2 * radius + 1;
  std::vector<float> window(static_cast<std::size_t>(side) * side);
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t k = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = reflect_index(y + dy, h);
        for (int dx = -radius; dx <= radius; ++dx) {
          window[k++] = img.at(reflect_index(x + dx, w), yy);
        }
      }
      std::nth_element(window.begin(), mid, window.end());
      out.at(x, y) = *mid;
    }
  }
  return out;
}

Image nlm_gray(const Image& img, double h, int pr, int sr, double sigma) {
  const int w = img.width(), hgt = img.height();
  const int pw = w + 2 * pr, ph = hgt + 2 * pr;  // padded grid of patch pixels
  const double patch_n = static_cast<double>((2 * pr + 1) * (2 * pr + 1));
  const double offset = 2.0 * sigma * sigma;
  const double inv_h2 = 1.0 / (h * h);

  const std::size_t n = img.plane_size();
  std::vector<double> wsum(n, 0.0), acc(n, 0.0), wmax(n, 0.0);
  std::vector<double> diff(static_cast<std::size_t>(pw) * ph);
  // summed-area table with a zero border row/column
  std::vector<double> sat(static_cast<std::size_t>(pw + 1) * (ph + 1), 0.0);

  auto value = [&](int x, int y) {
    return static_cast<double>(img.at(reflect_index(x, w), reflect_index(y, hgt)));
  };

  for (int oy = -sr; oy <= sr; ++oy) {
    for (int ox = -sr; ox <= sr; ++ox) {
      if (ox == 0 && oy == 0) continue;
      for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
          const int ix = x - pr, iy = y - pr;
          const double d = value(ix, iy) - value(ix + ox, iy + oy);
          diff[static_cast<std::size_t>(y) * pw + x] = d * d;
        }
      }
      for (int y = 0; y < ph; ++y) {
        double row = 0.0;
        for (int x = 0; x < pw; ++x) {
          row += diff[static_cast<std::size_t>(y) * pw + x];
          sat[static_cast<std::size_t>(y + 1) * (pw + 1) + x + 1] =
              sat[static_cast<std::size_t>(y) * (pw + 1) + x + 1] + row;
        }
      }
      const int side = 2 * pr + 1;
      for (int y = 0; y < hgt; ++y) {
        const int qy = y + oy;
        if (qy < 0 || qy >= hgt) continue;
        for (int x = 0; x < w; ++x) {
          const int qx = x + ox;
          if (qx < 0 || qx >= w) continue;
          // patch centred on padded (x + pr, y + pr) spans [x, x + side)
          const std::size_t r0 = static_cast<std::size_t>(y) * (pw + 1);
          const std::size_t r1 = static_cast<std::size_t>(y + side) * (pw + 1);
          const double ssd = sat[r1 + x + side] - sat[r0 + x + side] -
                             sat[r1 + x] + sat[r0 + x];
          const double d2 = ssd / patch_n;
          const double wt = std::exp(-std::max(d2 - offset, 0.0) * inv_h2);
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          wsum[p] += wt;
          acc[p] += wt * img.at(qx, qy);
          wmax[p] = std::max(wmax[p], wt);
        }
      }
    }
  }

  Image out(w, hgt, 1);
  auto src = img.plane(0);
  auto dst = out.plane(0);
  for (std::size_t p = 0; p < n; ++p) {
    const double self = wsum[p] > 0.0 ? wmax[p] : 1.0;
    dst[p] = static_cast<float>((acc[p] + self * src[p]) / (wsum[p] + self));
  }
  return out;
}

constexpr int kDctSize = 8;
constexpr int kDctStride = 4;

std::array<double, kDctSize * kDctSize> dct_basis() {
  std::array<double, kDctSize * kDctSize> c{};
  for (int k = 0; k < kDctSize; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / kDctSize);
    for (int n = 0; n < kDctSize; ++n) {
      c[k * kDctSize + n] =
          scale * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * kDctSize));
    }
  }
  return c;
}

std::vector<int> block_origins(int extent) {
  std::vector<int> origins;
  for (int o = 0; o + kDctSize <= extent; o += kDctStride) origins.push_back(o);
  if (origins.back() != extent - kDctSize) origins.push_back(extent - kDctSize);
  return origins;
}

Image dct_gray(const Image& img, double threshold) {
  const int w = img.width(), h = img.height();
  if (w < kDctSize || h < kDctSize) {
    throw Error(fmt::format("dct_denoise needs at least {}x{} pixels", kDctSize, kDctSize));
  }
  static const auto c = dct_basis();
  std::vector<double> acc(img.plane_size(), 0.0), count(img.plane_size(), 0.0);
  std::array<double, kDctSize * kDctSize> block{}, tmp{}, coef{};

  for (int by : block_origins(h)) {
    for (int bx : block_origins(w)) {
      for (int y = 0; y < kDctSize; ++y) {
        for (int x = 0; x < kDctSize; ++x) block[y * kDctSize + x] = img.at(bx + x, by + y);
      }
      // coef = C * block * C^T
      for (int u = 0; u < kDctSize; ++u) {
        for (int x = 0; x < kDctSize; ++x) {
          double s = 0.0;
          for (int y = 0; y < kDctSize; ++y) s += c[u * kDctSize + y] * block[y * kDctSize + x];
          tmp[u * kDctSize + x] = s;
        }
      }
      for (int u = 0; u < kDctSize; ++u) {
        for (int v = 0; v < kDctSize; ++v) {
          double s = 0.0;
          for (int x = 0; x < kDctSize; ++x) s += tmp[u * kDctSize + x] * c[v * kDctSize + x];
          coef[u * kDctSize + v] = (u == 0 && v == 0) || std::abs(s) >= threshold ? s : 0.0;
        }
      }
      // block = C^T * coef * C
      for (int y = 0; y < kDctSize; ++y) {
        for (int v = 0; v < kDctSize; ++v) {
          double s = 0.0;
          for (int u = 0; u < kDctSize; ++u) s += c[u * kDctSize + y] * coef[u * kDctSize + v];
          tmp[y * kDctSize + v] = s;
        }
      }
      for (int y = 0; y < kDctSize; ++y) {
        for (int x = 0; x < kDctSize; ++x) {
          double s = 0.0;
          for (int v = 0; v < kDctSize; ++v) s += tmp[y * kDctSize + v] * c[v * kDctSize + x];
          const std::size_t p = static_cast<std::size_t>(by + y) * w + bx + x;
          acc[p] += s;
          count[p] += 1.0;
        }
      }
    }
  }
  Image out(w, h, 1);
  auto dst = out.plane(0);
  for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = static_cast<float>(acc[p] / count[p]);
  return out;
}

}  // namespace

Image gaussian_filter(const Image& img, double sigma) {
  if (!(sigma > 0.0)) throw Error("gaussian_filter: sigma must be positive");
  return per_channel(img, [&](const Image& g) { return gaussian_gray(g, sigma); });
}

Image bilateral_filter(const Image& img, double sigma_s, double sigma_r) {
  if (!(sigma_s > 0.0) || !(sigma_r > 0.0)) {
    throw Error("bilateral_filter: sigmas must be positive");
  }
  return per_channel(img, [&](const Image& g) { return bilateral_gray(g, sigma_s, sigma_r); });
}

Image median_filter(const Image& img, int radius) {
  if (radius < 1) throw Error("median_filter: radius must be >= 1");
  return per_channel(img, [&](const Image& g) { return median_gray(g, radius); });
}

Image nlm(const Image& img, double h, int patch_radius, int search_radius,
          std::optional<double> noise_sigma) {
  if (!(h > 0.0)) throw Error("nlm: h must be positive");
  if (patch_radius < 1 || search_radius < 1) throw Error("nlm: radii must be >= 1");
  return per_channel(img, [&](const Image& g) {
    const double sigma = noise_sigma ? *noise_sigma : estimate_noise_sigma(g);
    return nlm_gray(g, h, patch_radius, search_radius, sigma);
  });
}

double nlm_weight(const Image& img, int px, int py, int qx, int qy, double h,
                  int patch_radius, double noise_sigma) {
  require_gray(img, "nlm_weight");
  const int w = img.width(), hgt = img.height();
  double ssd = 0.0;
  for (int dy = -patch_radius; dy <= patch_radius; ++dy) {
    for (int dx = -patch_radius; dx <= patch_radius; ++dx) {
      const double a = img.at(reflect_index(px + dx, w), reflect_index(py + dy, hgt));
      const double b = img.at(reflect_index(qx + dx, w), reflect_index(qy + dy, hgt));
      ssd += (a - b) * (a - b);
    }
  }
  const double n = (2.0 * patch_radius + 1) * (2.0 * patch_radius + 1);
  return std::exp(-std::max(ssd / n - 2.0 * noise_sigma * noise_sigma, 0.0) / (h * h));
}

Image dct_denoise(const Image& img, double threshold) {
  if (!(threshold >= 0.0)) throw Error("dct_denoise: threshold must be >= 0");
  return per_channel(img, [&](const Image& g) { return dct_gray(g, threshold); });
}

double parameter_noise_sigma(const Image& gray) {
  return std::max(kMinNoiseSigma, estimate_noise_sigma(gray));
}

namespace {

Image denoise_gray(const Image& g, const DenoiserId& id) {
  const auto at = [&](const auto& table) {
    if (id.index < 0 || id.index >= static_cast<int>(table.size())) {
      throw Error(fmt::format("grid index {} out of range for {}", id.index,
                              to_string(id.method)));
    }
    return table[static_cast<std::size_t>(id.index)];
  };
  switch (id.method) {
    case Method::gaussian_filter:
      return gaussian_gray(g, id.continuous ? id.theta : at(kGaussianSigmas));
    case Method::bilateral:
      return bilateral_gray(g, kBilateralSpatialSigma,
                            id.continuous ? id.theta : at(kBilateralRangeSigmas));
    case Method::median:
      return median_gray(g, at(kMedianRadii));
    case Method::nlm: {
      const double sigma = parameter_noise_sigma(g);
      const double strength = id.continuous ? id.theta : at(kNlmStrengths);
      return nlm_gray(g, strength * sigma, kNlmPatchRadius, kNlmSearchRadius, sigma);
    }
    case Method::dct:
      return dct_gray(g, at(kDctThresholds) * parameter_noise_sigma(g));
  }
  throw Error("unknown denoising method");
}

}  // namespace

Image denoise(const Image& img, const DenoiserId& id) {
  if (id.continuous) {
    const auto range = theta_range(id.method);
    if (!range) {
      throw Error(fmt::format("{} has no continuous parameter", to_string(id.method)));
    }
    if (!(id.theta >= range->min && id.theta <= range->max)) {
      throw Error(fmt::format("theta {} outside [{}, {}] for {}", id.theta,
                              range->min, range->max, to_string(id.method)));
    }
  }
  return per_channel(img, [&](const Image& g) { return denoise_gray(g, id); });
}

}  // namespace nrdq
