#include "nrdq/svd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

namespace nrdq {

SymmetricMatrix::SymmetricMatrix(int order) : order_(order) {
  if (order <= 0) throw Error("symmetric matrix order must be positive");
  data_.assign(static_cast<std::size_t>(order) * (order + 1) / 2, 0.0);
}

std::size_t SymmetricMatrix::index(int i, int j) const {
  if (i > j) std::swap(i, j);
  // row i of the upper triangle starts after rows 0..i-1
  const std::size_t row_start =
      static_cast<std::size_t>(i) * order_ - static_cast<std::size_t>(i) * (i - 1) / 2;
  return row_start + static_cast<std::size_t>(j - i);
}

double SymmetricMatrix::frobenius_norm() const {
  double sum = 0.0;
  for (int i = 0; i < order_; ++i) {
    for (int j = i; j < order_; ++j) {
      const double v = (*this)(i, j);
      sum += (i == j ? 1.0 : 2.0) * v * v;
    }
  }
  return std::sqrt(sum);
}

namespace {

// Columns of the factor whose Gram matrix is the smaller one, each stored
// contiguously.
std::vector<std::vector<double>> smaller_side_columns(
    std::span<const double> colmajor, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw Error("singular_values: empty matrix");
  if (colmajor.size() != static_cast<std::size_t>(rows) * cols) {
    throw Error("singular_values: data size does not match shape");
  }
  std::vector<std::vector<double>> out;
  if (cols <= rows) {
    out.resize(cols);
    for (int j = 0; j < cols; ++j) {
      auto first = colmajor.begin() + static_cast<std::ptrdiff_t>(j) * rows;
      out[j].assign(first, first + rows);
    }
  } else {
    out.assign(rows, std::vector<double>(cols));
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) {
        out[i][j] = colmajor[static_cast<std::size_t>(j) * rows + i];
      }
    }
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SymmetricMatrix smaller_gram(std::span<const double> colmajor, int rows,
                             int cols) {
  const auto cols_of_factor = smaller_side_columns(colmajor, rows, cols);
  const int n = static_cast<int>(cols_of_factor.size());
  SymmetricMatrix g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) g(i, j) = dot(cols_of_factor[i], cols_of_factor[j]);
  }
  return g;
}

SingularValues singular_values(std::span<const double> colmajor, int rows,
                               int cols, const JacobiOptions& options) {
  auto b = smaller_side_columns(colmajor, rows, cols);
  const int n = static_cast<int>(b.size());
  const double gram_norm = smaller_gram(colmajor, rows, cols).frobenius_norm();

  SingularValues result;
  result.converged = false;
  std::vector<double> norm2(n);
  for (int j = 0; j < n; ++j) norm2[j] = dot(b[j], b[j]);

  if (gram_norm == 0.0 || n == 1) {
    result.converged = true;
  } else {
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
      result.sweeps = sweep;
      double off = 0.0;
      for (int p = 0; p + 1 < n; ++p) {
        for (int q = p + 1; q < n; ++q) {
          const double gamma = dot(b[p], b[q]);
          off += gamma * gamma;
          if (gamma == 0.0) continue;
          const double alpha = norm2[p], beta = norm2[q];
          const double zeta = (beta - alpha) / (2.0 * gamma);
          const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = c * t;
          auto& bp = b[p];
          auto& bq = b[q];
          for (std::size_t i = 0; i < bp.size(); ++i) {
            const double vp = bp[i], vq = bq[i];
            bp[i] = c * vp - s * vq;
            bq[i] = s * vp + c * vq;
          }
          norm2[p] = alpha - t * gamma;
          norm2[q] = beta + t * gamma;
        }
      }
      for (int j = 0; j < n; ++j) norm2[j] = dot(b[j], b[j]);
      if (std::sqrt(2.0 * off) < options.tolerance * gram_norm) {
        result.converged = true;
        break;
      }
    }
  }

  result.values.resize(n);
  for (int j = 0; j < n; ++j) result.values[j] = std::sqrt(std::max(0.0, norm2[j]));
  std::ranges::sort(result.values, std::greater<>());
  return result;
}

SingularValues singular_values(const PatchMatrix& m,
                               const JacobiOptions& options) {
  return singular_values(m.values, m.patch_dim, m.count, options);
}

int partial_energy_count(std::span<const double> s, double alpha) {
  if (s.empty()) throw Error("partial_energy_count: empty spectrum");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(fmt::format("partial_energy_count: alpha {} outside (0,1]", alpha));
  }
  std::vector<double> prefix(s.size());
  double running = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    running += s[i];
    prefix[i] = running;
  }
  const double total = prefix.back();
  if (total <= 0.0) return 1;
  const double target = alpha * total;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (prefix[i] >= target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(prefix.size());
}

}  // namespace nrdq
