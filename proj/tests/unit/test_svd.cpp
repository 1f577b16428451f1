#include <cmath>
#include <vector>

#include "doctest.h"
#include "nrdq/svd.hpp"
#include "oracles.hpp"

using namespace nrdq;

namespace {

double frobenius2(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

}  // namespace

TEST_CASE("diagonal") {
  const std::vector<double> a = {3, 0, 0, 2};
  const auto s = singular_values(a, 2, 2);
  REQUIRE(s.values.size() == 2);
  CHECK(std::abs(s.values[0] - 3.0) <= 1e-8);
  CHECK(std::abs(s.values[1] - 2.0) <= 1e-8);
  CHECK(s.converged);
}

TEST_CASE("rank one") {
  Rng rng(1);
  for (auto [rows, cols] : {std::pair{5, 3}, std::pair{3, 7}, std::pair{225, 4}}) {
    std::vector<double> u(rows), v(cols), a(static_cast<std::size_t>(rows) * cols);
    for (double& x : u) x = rng.normal();
    for (double& x : v) x = rng.normal();
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) a[j * rows + i] = u[i] * v[j];
    }
    const auto s = singular_values(a, rows, cols);
    const double expect = std::sqrt(frobenius2(u) * frobenius2(v));
    CHECK(std::abs(s.values[0] - expect) <= 1e-8 * expect);
    for (std::size_t k = 1; k < s.values.size(); ++k) CHECK(s.values[k] <= 1e-8 * expect);
  }
}

TEST_CASE("frobenius identity") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(250);
    for (double& x : a) x = rng.normal();
    const auto s = singular_values(a, 10, 25);
    REQUIRE(s.values.size() == 10);
    double sum = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      sum += s.values[k] * s.values[k];
      if (k > 0) CHECK(s.values[k] <= s.values[k - 1]);
    }
    CHECK(std::abs(sum - frobenius2(a)) <= 1e-8 * frobenius2(a));
  }
}

TEST_CASE("3x3 against closed-form eigenvalues") {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> a(9);
    for (double& x : a) x = rng.normal();
    double g[3][3] = {};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int r = 0; r < 3; ++r) g[i][j] += a[i * 3 + r] * a[j * 3 + r];
      }
    }
    const auto eig = oracle::sym3_eigenvalues(g);
    const auto s = singular_values(a, 3, 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(s.values[k] - std::sqrt(std::max(0.0, eig[k]))) <= 1e-8);
    }
  }
}

TEST_CASE("gram matrix of the smaller side") {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};  // 3x2, columns (1,2,3), (4,5,6)
  const auto g = smaller_gram(a, 3, 2);
  REQUIRE(g.order() == 2);
  CHECK(g(0, 0) == 14.0);
  CHECK(g(0, 1) == 32.0);
  CHECK(g(1, 0) == 32.0);
  CHECK(g(1, 1) == 77.0);
}

TEST_CASE("patch matrix overload") {
  Rng rng(4);
  const Image img = oracle::random_image(rng, 45, 30);
  const auto m = extract_patches(img, 15);
  const auto s = singular_values(m);
  CHECK(s.values.size() == 6);
  double sum = 0.0;
  for (double v : s.values) sum += v * v;
  CHECK(std::abs(sum - frobenius2(m.values)) <= 1e-8 * frobenius2(m.values));
}

TEST_CASE("partial energy count") {
  CHECK(partial_energy_count(std::vector<double>{1, 0, 0}, 0.97) == 1);
  CHECK(partial_energy_count(std::vector<double>{1, 1}, 0.97) == 2);
  CHECK(partial_energy_count(std::vector<double>{5, 3, 2}, 0.79) == 2);
  CHECK(partial_energy_count(std::vector<double>{5, 3, 2}, 0.81) == 3);
}

TEST_CASE("bad shapes") {
  CHECK_THROWS_AS(singular_values(std::vector<double>{1, 2, 3}, 2, 2), Error);
}
