#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nrdq/image.hpp"
#include "nrdq/image_io.hpp"
#include "nrdq/rng.hpp"
#include "oracles.hpp"

using namespace nrdq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nrdq_test_image";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

}  // namespace

TEST_CASE("pgm bytes map directly to samples") {
  const auto p = scratch("tiny.pgm");
  write_bytes(p, std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4));
  const Image img = load_image(p);
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img.channels() == 1);
  CHECK(img.at(0, 0) == 0.0f);
  CHECK(img.at(1, 0) == 255.0f);
  CHECK(img.at(0, 1) == 128.0f);
  CHECK(img.at(1, 1) == 64.0f);
}

TEST_CASE("ppm planes are R, G, B") {
  const auto p = scratch("px.ppm");
  write_bytes(p, std::string("P6\n1 1\n255\n") + std::string("\x0a\x14\x1e", 3));
  const Image img = load_image(p);
  REQUIRE(img.channels() == 3);
  CHECK(img.at(0, 0, 0) == 10.0f);
  CHECK(img.at(0, 0, 1) == 20.0f);
  CHECK(img.at(0, 0, 2) == 30.0f);
}

TEST_CASE("truncated file") {
  const auto p = scratch("short.pgm");
  write_bytes(p, std::string("P5\n4 4\n255\n") + std::string("\x01\x02", 2));
  CHECK_THROWS_WITH_AS(load_image(p), doctest::Contains("unexpected end of stream"), Error);
}

TEST_CASE("save and load round trips") {
  Image ramp(37, 5, 1);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 37; ++x) ramp.at(x, y) = static_cast<float>(x * 6.9 + y * 0.3);
  }
  for (const char* name : {"ramp.png", "ramp.pgm"}) {
    const auto p = scratch(name);
    save_image(ramp, p);
    const Image back = load_image(p);
    REQUIRE(back.same_shape(ramp));
    for (std::size_t i = 0; i < ramp.size(); ++i) {
      CHECK(std::abs(back.data()[i] - ramp.data()[i]) <= 0.5f);
    }
  }
  Rng rng(3);
  const Image rgb = oracle::random_image(rng, 6, 4, 3).quantized();
  for (const char* name : {"rgb.png", "rgb.ppm"}) {
    const auto p = scratch(name);
    save_image(rgb, p);
    CHECK(load_image(p) == rgb);
  }
  std::ifstream ppm(scratch("rgb.ppm"), std::ios::binary);
  std::string magic(2, ' ');
  ppm.read(magic.data(), 2);
  CHECK(magic == "P6");
}

TEST_CASE("save into a missing directory fails") {
  CHECK_THROWS_AS(save_image(Image(2, 2, 1), scratch("no/such/dir/x.png")), Error);
}

TEST_CASE("grayscale conversion") {
  Image gray(3, 1, 1, 42.0f);
  CHECK(to_grayscale(gray) == gray);
  Image rgb(2, 1, 3);
  for (int c = 0; c < 3; ++c) rgb.at(0, 0, c) = 255.0f;
  rgb.at(1, 0, 0) = 100.0f;
  const Image g = to_grayscale(rgb);
  CHECK(g.channels() == 1);
  CHECK(g.at(0, 0) == doctest::Approx(255.0).epsilon(1e-6));
  CHECK(g.at(1, 0) == doctest::Approx(29.9).epsilon(1e-6));
}

TEST_CASE("gradients") {
  const auto flat = gradient_field(Image(5, 4, 1, 9.0f));
  for (float v : flat.magnitude) CHECK(v == 0.0f);

  Image ramp(6, 3, 1);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 6; ++x) ramp.at(x, y) = static_cast<float>(x);
  }
  const auto g = gradient_field(ramp);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 6; ++x) {
      CHECK(g.dx[y * 6 + x] == (x == 5 ? 0.0f : 1.0f));
      CHECK(g.dy[y * 6 + x] == 0.0f);
    }
  }

  Image imp(3, 3, 1);
  imp.at(1, 1) = 255.0f;
  const auto gi = gradient_field(imp);
  // forward differences by hand: (x, y) -> (dx, dy)
  auto expect = [&](int x, int y, double dx, double dy) {
    const std::size_t i = static_cast<std::size_t>(y) * 3 + x;
    CHECK(gi.dx[i] == doctest::Approx(dx));
    CHECK(gi.dy[i] == doctest::Approx(dy));
    CHECK(gi.magnitude[i] == doctest::Approx(std::sqrt(dx * dx + dy * dy)));
  };
  expect(0, 0, 0, 0);
  expect(1, 0, 0, 255);
  expect(0, 1, 255, 0);
  expect(1, 1, -255, -255);
  expect(2, 1, 0, 0);
  expect(1, 2, 0, 0);
  expect(0, 2, 0, 0);
  expect(2, 2, 0, 0);
}

TEST_CASE("patch tiling") {
  Rng rng(5);
  auto a = extract_patches(Image(30, 30, 1), 15);
  CHECK(a.count == 4);
  CHECK(a.patch_dim == 225);
  auto b = extract_patches(oracle::random_image(rng, 44, 30), 15);
  CHECK(b.count == 4);
  CHECK(b.tiles_x == 2);
  const Image one = oracle::random_image(rng, 15, 15);
  auto c = extract_patches(one, 15);
  REQUIRE(c.count == 1);
  // column-major inside a patch
  for (int y = 0; y < 15; ++y) {
    for (int x = 0; x < 15; ++x) CHECK(c.column(0)[x * 15 + y] == double(one.at(x, y)));
  }
  const Image sq = oracle::random_image(rng, 45, 30);
  CHECK(assemble_patches(extract_patches(sq, 15)) == sq);
}

TEST_CASE("noise map") {
  Rng rng(8);
  const Image a = oracle::random_image(rng, 9, 7);
  const Image zero = noise_map(a, a);
  for (float v : zero.data()) CHECK(v == 0.0f);
  Image x(2, 2, 1, std::vector<float>{1, 2, 3, 4});
  Image y(2, 2, 1, std::vector<float>{4, 2, 0, 10});
  const Image m = noise_map(x, y);
  CHECK(m.at(0, 0) == 3.0f);
  CHECK(m.at(1, 0) == 0.0f);
  CHECK(m.at(0, 1) == -3.0f);
  CHECK(m.at(1, 1) == 6.0f);
  // clean + eps, perfectly denoised back to clean
  Image noisy = a;
  for (float& v : noisy.data()) v += 2.5f;
  const Image back = noise_map(noisy, a);
  for (float v : back.data()) CHECK(v == doctest::Approx(-2.5f));
  // swapping the arguments negates the map
  const Image b = oracle::random_image(rng, 9, 7);
  const Image ab = noise_map(a, b), ba = noise_map(b, a);
  for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab.data()[i] == -ba.data()[i]);
}

TEST_CASE("reflect index stays in range") {
  for (int n : {1, 2, 5}) {
    for (int i = -20; i < 20; ++i) {
      const int r = reflect_index(i, n);
      CHECK(r >= 0);
      CHECK(r < n);
    }
  }
  CHECK(reflect_index(-1, 5) == 0);
  CHECK(reflect_index(5, 5) == 4);
  CHECK(reflect_index(6, 5) == 3);
}

TEST_CASE("shape mismatch is an error") {
  CHECK_THROWS_AS(noise_map(Image(2, 2, 1), Image(3, 2, 1)), Error);
}
