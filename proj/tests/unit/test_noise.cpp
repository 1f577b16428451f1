#include <cmath>

#include "doctest.h"
#include "nrdq/noise.hpp"
#include "oracles.hpp"

using namespace nrdq;

namespace {

struct Moments {
  double mean = 0.0, var = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

}  // namespace

TEST_CASE("gaussian noise moments") {
  const Image gray(256, 256, 1, 128.0f);
  const Image noisy = add_gaussian(gray, 10.0, 42);
  std::vector<double> d;
  for (float v : noisy.data()) d.push_back(v - 128.0);
  const auto m = moments(d);
  CHECK(std::abs(m.mean) < 0.2);
  CHECK(std::abs(std::sqrt(m.var) - 10.0) < 0.2);
}

TEST_CASE("noise is deterministic per seed") {
  Rng rng(1);
  const Image img = oracle::random_image(rng, 32, 32);
  for (auto spec : {NoiseSpec{NoiseKind::gaussian, 20, 9}, NoiseSpec{NoiseKind::poisson, 0.1, 9},
                    NoiseSpec{NoiseKind::salt_pepper, 0.2, 9}}) {
    CHECK(apply_noise(img, spec) == apply_noise(img, spec));
    NoiseSpec other = spec;
    other.seed = 10;
    CHECK_FALSE(apply_noise(img, spec) == apply_noise(img, other));
  }
}

TEST_CASE("poisson noise") {
  CHECK(add_poisson(Image(8, 8, 1, 0.0f), 0.1, 3) == Image(8, 8, 1, 0.0f));
  const Image img(300, 300, 1, 100.0f);
  const Image noisy = add_poisson(img, 0.1, 5);
  std::vector<double> v(noisy.data().begin(), noisy.data().end());
  const auto m = moments(v);
  CHECK(m.mean == doctest::Approx(100.0).epsilon(0.01));
  CHECK(m.var == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("poisson sampler moments") {
  for (double rate : {0.5, 7.0, 100.0, 1000.0}) {
    Rng rng(11);
    std::vector<double> v;
    for (int i = 0; i < 100000; ++i) v.push_back(static_cast<double>(sample_poisson(rng, rate)));
    const auto m = moments(v);
    CHECK(m.mean == doctest::Approx(rate).epsilon(0.02));
    CHECK(m.var == doctest::Approx(rate).epsilon(0.05));
  }
}

TEST_CASE("salt and pepper") {
  const Image img(512, 512, 1, 128.0f);
  const Image noisy = add_salt_pepper(img, 0.2, 13);
  std::size_t corrupted = 0;
  for (float v : noisy.data()) {
    if (v != 128.0f) {
      ++corrupted;
      CHECK((v == 0.0f || v == 255.0f));
    }
  }
  CHECK(std::abs(static_cast<double>(corrupted) / noisy.size() - 0.2) < 0.005);
}

TEST_CASE("noise sigma estimate") {
  CHECK(estimate_noise_sigma(Image(20, 20, 1, 50.0f)) == 0.0);
  Rng rng(17);
  Image field(256, 256, 1);
  for (float& v : field.data()) v = static_cast<float>(10.0 * rng.normal());
  const double s = estimate_noise_sigma(field);
  CHECK(s >= 9.0);
  CHECK(s <= 11.0);
  const Image clean = oracle::smooth_image(rng, 128, 128);
  const double n = estimate_noise_sigma(add_gaussian(clean, 20.0, 4));
  CHECK(n >= 17.0);
  CHECK(n <= 23.0);
}

TEST_CASE("noise spec text") {
  const NoiseSpec s{NoiseKind::salt_pepper, 0.15, 77};
  CHECK(NoiseSpec::parse(s.to_string()) == s);
  CHECK_THROWS_AS(NoiseSpec::parse("bogus"), Error);
  CHECK_THROWS_AS((NoiseSpec{NoiseKind::salt_pepper, 1.5, 0}.validate()), Error);
  CHECK_THROWS_AS(parse_noise_kind("speckle"), Error);
}
