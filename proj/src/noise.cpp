#include "nrdq/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <vector>

#include <fmt/format.h>

namespace nrdq {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::poisson: return "poisson";
    case NoiseKind::salt_pepper: return "salt_pepper";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "gaussian") return NoiseKind::gaussian;
  if (text == "poisson") return NoiseKind::poisson;
  if (text == "salt_pepper") return NoiseKind::salt_pepper;
  throw Error(fmt::format("unknown noise kind '{}'", text));
}

void NoiseSpec::validate() const {
  if (!std::isfinite(level)) throw Error("noise level must be finite");
  if (kind == NoiseKind::salt_pepper) {
    if (!(level > 0.0 && level < 1.0)) {
      throw Error(fmt::format("salt & pepper density {} outside (0,1)", level));
    }
  } else if (!(level > 0.0)) {
    throw Error(fmt::format("{} level must be positive", nrdq::to_string(kind)));
  }
}

std::string NoiseSpec::to_string() const {
  return fmt::format("{}:{}:{}", nrdq::to_string(kind), level, seed);
}

NoiseSpec NoiseSpec::parse(std::string_view text) {
  const auto first = text.find(':');
  const auto second = text.find(':', first == text.npos ? first : first + 1);
  if (first == text.npos || second == text.npos) {
    throw Error(fmt::format("malformed noise spec '{}'", text));
  }
  NoiseSpec spec;
  spec.kind = parse_noise_kind(text.substr(0, first));
  const auto level_text = text.substr(first + 1, second - first - 1);
  const auto seed_text = text.substr(second + 1);
  auto r1 = std::from_chars(level_text.data(),
                            level_text.data() + level_text.size(), spec.level);
  auto r2 = std::from_chars(seed_text.data(),
                            seed_text.data() + seed_text.size(), spec.seed);
  if (r1.ec != std::errc{} || r2.ec != std::errc{} ||
      r1.ptr != level_text.data() + level_text.size() ||
      r2.ptr != seed_text.data() + seed_text.size()) {
    throw Error(fmt::format("malformed noise spec '{}'", text));
  }
  spec.validate();
  return spec;
}

Image add_gaussian(const Image& img, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw Error("gaussian sigma must be positive");
  Rng rng(seed);
  Image out = img;
  for (float& v : out.data()) {
    v = static_cast<float>(v + sigma * rng.normal());
  }
  return out.clamped();
}

std::uint64_t sample_poisson(Rng& rng, double rate) {
  if (!(rate > 0.0)) return 0;
  if (rate < 30.0) {
    // sequential search of the CDF
    const double u = rng.uniform();
    double p = std::exp(-rate);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= rate / static_cast<double>(k);
      cdf += p;
      if (p < 1e-300 && cdf >= 1.0 - 1e-15) break;
    }
    return k;
  }
  const double log_rate = std::log(rate);
  const double smu = std::sqrt(rate);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -rate + k * log_rate - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

Image add_poisson(const Image& img, double k, std::uint64_t seed) {
  if (!(k > 0.0)) throw Error("poisson scale k must be positive");
  Rng rng(seed);
  Image out = img;
  for (float& v : out.data()) {
    if (v < 0.0f) throw Error("poisson noise needs nonnegative samples");
    v = static_cast<float>(k * static_cast<double>(sample_poisson(rng, v / k)));
  }
  return out.clamped();
}

Image add_salt_pepper(const Image& img, double d, std::uint64_t seed) {
  if (!(d > 0.0 && d < 1.0)) throw Error("salt & pepper density must be in (0,1)");
  Rng rng(seed);
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (rng.uniform() >= d) continue;
      const float value = rng.uniform() < 0.5 ? 0.0f : 255.0f;
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = value;
    }
  }
  return out;
}

Image apply_noise(const Image& img, const NoiseSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case NoiseKind::gaussian: return add_gaussian(img, spec.level, spec.seed);
    case NoiseKind::poisson: return add_poisson(img, spec.level, spec.seed);
    case NoiseKind::salt_pepper:
      return add_salt_pepper(img, spec.level, spec.seed);
  }
  throw Error("unknown noise kind");
}

double estimate_noise_sigma(const Image& img) {
  require_gray(img, "estimate_noise_sigma");
  if (img.width() < 2) throw Error("noise estimation needs at least 2 columns");
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(img.width() - 1) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x + 1 < img.width(); ++x) {
      diffs.push_back(std::abs(double(img.at(x + 1, y)) - img.at(x, y)));
    }
  }
  const std::size_t n = diffs.size();
  const auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(diffs.begin(), mid, diffs.end());
  double median = *mid;
  if (n % 2 == 0) {
    median = 0.5 * (median + *std::max_element(diffs.begin(), mid));
  }
  return median / (0.6745 * std::sqrt(2.0));
}

}  // namespace nrdq
