#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nrdq/denoisers.hpp"
#include "nrdq/features.hpp"
#include "nrdq/noise.hpp"
#include "oracles.hpp"

using namespace nrdq;

namespace {

Image noisy_image(std::uint64_t seed, int w = 48, int h = 40) {
  Rng rng(seed);
  return add_gaussian(oracle::smooth_image(rng, w, h), 20.0, seed).quantized();
}

}  // namespace

TEST_CASE("ss") {
  const auto flat = feature_ss(Image(45, 30, 1, 100.0f));
  for (double v : flat) CHECK(v == doctest::Approx(1.0 / 6.0));

  Image two(30, 15, 1);
  for (int i = 0; i < 112; ++i) {
    two.at(i % 15, i / 15) = 1.0f;
    two.at(15 + (112 + i) % 15, (112 + i) / 15) = 1.0f;
  }
  const auto ss = feature_ss(two);
  CHECK(ss[0] == 1.0);

  const Image n = noisy_image(1);
  const auto s = feature_ss(n);
  CHECK(s[0] > 0.0);
  CHECK(s[0] <= s[1]);
  CHECK(s[1] <= s[2]);
  CHECK(s[2] <= 1.0);
}

TEST_CASE("sr") {
  const Image n = noisy_image(2);
  for (double v : feature_sr(n, n)) CHECK(v == 0.0);

  const Image d = gaussian_filter(n, 1.5).quantized();
  const auto base = feature_sr(n, d);
  for (double v : base) CHECK(v > 0.0);
  Image n2 = n, d2 = d;
  for (float& v : n2.data()) v += 13.0f;
  for (float& v : d2.data()) v += 13.0f;
  const auto shifted = feature_sr(n2, d2);
  for (int i = 0; i < 3; ++i) CHECK(shifted[i] == doctest::Approx(base[i]).epsilon(1e-9));
}

TEST_CASE("sr separates structured from unstructured residuals") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed + 3);
    const Image clean = oracle::smooth_image(rng, 64, 64);
    const Image guide = add_gaussian(clean, 10.0, seed);
    const auto edges = gradient_field(clean);
    double energy = 0.0;
    for (float m : edges.magnitude) energy += double(m) * m;
    const double sd = std::sqrt(energy / edges.magnitude.size());
    Image structured = guide, iid = guide;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      structured.data()[i] += edges.magnitude[i];
      iid.data()[i] += static_cast<float>(sd * rng.normal());
    }
    // widest window; the radius-2 preset averages too few neighbours
    CHECK(feature_sr(guide, structured)[2] > 3.0 * feature_sr(guide, iid)[2]);
  }
}

TEST_CASE("sgm") {
  for (double v : feature_sgm(Image(20, 20, 1, 3.0f))) CHECK(v == 0.0);
  // every nonzero magnitude equals 5
  Image flat_grad(20, 20, 1);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) flat_grad.at(x, y) = static_cast<float>(5 * x);
  }
  for (double v : feature_sgm(flat_grad)) CHECK(v == 0.0);
  const auto s = feature_sgm(noisy_image(4));
  for (double v : s) CHECK(v > 0.0);
}

TEST_CASE("sc") {
  const Image n = noisy_image(5);
  for (double v : feature_sc(n, n)) CHECK(v == 0.0);

  Rng rng(6);
  const Image a = oracle::random_image(rng, 12, 12);
  const Image b = gaussian_filter(a, 1.0);
  const auto sc = feature_sc(a, b);
  Image shifted = noise_map(a, b);
  for (float& v : shifted.data()) v = std::clamp(v + 128.0f, 0.0f, 255.0f);
  for (int i = 0; i < 3; ++i) {
    const auto cfg = SsimConfig::uniform(kScWindows[i]);
    const double r = oracle::pearson(oracle::ssim_map(b, a, cfg), oracle::ssim_map(shifted, a, cfg));
    CHECK(std::abs(sc[i] - (-r)) <= 1e-9);
    CHECK(sc[i] >= -1.0);
    CHECK(sc[i] <= 1.0);
  }
}

TEST_CASE("vr") {
  const Image n = noisy_image(7);
  const auto g = gradient_field(n);
  double l1 = 0, l2 = 0;
  for (std::size_t i = 0; i < g.dx.size(); ++i) {
    l1 += std::abs(double(g.dx[i])) + std::abs(double(g.dy[i]));
    l2 += double(g.dx[i]) * g.dx[i] + double(g.dy[i]) * g.dy[i];
  }
  const double px = static_cast<double>(n.size());
  const auto self = feature_vr(n, n);
  for (int i = 0; i < 6; ++i) {
    const auto& c = kVrPresets[i];
    const double smooth = c.smoothness_norm == Norm::l1 ? l1 : l2;
    CHECK(self[i] == doctest::Approx(c.lambda * smooth / px).epsilon(1e-12));
  }

  const Image flat(n.width(), n.height(), 1, 90.0f);
  double d1 = 0, d2 = 0;
  for (float v : n.data()) {
    d1 += std::abs(v - 90.0);
    d2 += (v - 90.0) * (v - 90.0);
  }
  const auto data_only = feature_vr(n, flat);
  for (int i = 0; i < 6; ++i) {
    const double data = kVrPresets[i].data_norm == Norm::l1 ? d1 : d2;
    CHECK(data_only[i] == doctest::Approx(data / px).epsilon(1e-12));
  }
  const auto v = feature_vr(n, gaussian_filter(n, 1.0));
  CHECK(v[1] >= v[0]);
  CHECK(v[3] >= v[2]);
  CHECK(v[5] >= v[4]);
}

TEST_CASE("gh") {
  std::vector<double> a(kGhBins, 0.0), b(kGhBins, 0.0);
  a[0] = 1.0;
  b[1] = 1.0;
  CHECK(histogram_l1(a, b) == 2.0);
  CHECK(histogram_l1(a, a) == 0.0);

  const Image n = noisy_image(8);
  const double g = feature_gh(n, gaussian_filter(n, 1.0));
  CHECK(g >= 0.0);
  CHECK(g <= 2.0);
  const auto h = gradient_histogram(n);
  CHECK(h.size() == static_cast<std::size_t>(kGhBins));
  double mass = 0.0;
  for (double v : h) mass += v;
  CHECK(mass == doctest::Approx(1.0));

  // piecewise constant, so the noise estimate is 0
  Rng rng(9);
  Image blocks(64, 64, 1);
  for (int by = 0; by < 8; ++by) {
    for (int bx = 0; bx < 8; ++bx) {
      const float v = static_cast<float>(rng.below(256));
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) blocks.at(bx * 8 + x, by * 8 + y) = v;
      }
    }
  }
  CHECK(estimate_noise_sigma(blocks) == 0.0);
  CHECK(feature_gh(blocks, blocks) <= 0.05);
}

TEST_CASE("feature vector") {
  const Image n = noisy_image(10);
  const auto self = extract_features(n, n);
  for (auto fam : {FeatureFamily::sr, FeatureFamily::sc}) {
    const auto sp = family_span(fam);
    for (std::size_t i = 0; i < sp.size; ++i) CHECK(self[sp.offset + i] == 0.0);
  }
  const Image d = median_filter(n, 1);
  const auto f = extract_features(n, d);
  for (double v : f) CHECK(std::isfinite(v));

  const Image rgb_n = Image::merge(std::vector<Image>{n, n, n});
  const Image rgb_d = Image::merge(std::vector<Image>{d, d, d});
  const auto fr = extract_features(rgb_n, rgb_d);
  for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(fr[i] == f[i]);
}

TEST_CASE("batch extraction matches single pairs") {
  const Image n = noisy_image(11);
  std::vector<Image> outs;
  for (const auto& id : full_grid()) outs.push_back(denoise(n, id));
  const auto batch = extract_features_batch(n, outs);
  REQUIRE(batch.size() == outs.size());
  for (std::size_t k = 0; k < outs.size(); ++k) CHECK(batch[k] == extract_features(n, outs[k]));
}

TEST_CASE("family names") {
  for (auto f : kAllFamilies) CHECK(parse_family(to_string(f)) == f);
  std::size_t total = 0;
  for (auto f : kAllFamilies) total += family_span(f).size;
  CHECK(total == kFeatureCount);
  CHECK_THROWS_AS(parse_family("bogus"), Error);
}
