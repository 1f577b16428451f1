#pragma once

#include <span>
#include <vector>

#include "nrdq/image.hpp"

namespace nrdq {

/// Dense symmetric matrix stored as its upper triangle, row by row.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(int order);

  int order() const { return order_; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double frobenius_norm() const;

 private:
  std::size_t index(int i, int j) const;

  int order_;
  std::vector<double> data_;
};

/// Gram matrix of the smaller side of a column-major rows x cols matrix:
/// AᵀA when cols <= rows, AAᵀ otherwise.
SymmetricMatrix smaller_gram(std::span<const double> colmajor, int rows, int cols);

struct SingularValues {
  std::vector<double> values;  // descending, min(rows, cols) entries
  bool converged = true;
  int sweeps = 0;
};

struct JacobiOptions {
  double tolerance = 1e-10;  // relative to the Gram matrix Frobenius norm
  int max_sweeps = 30;
};

/// Singular values as square roots of the eigenvalues of the smaller Gram
/// matrix. The cyclic Jacobi rotations act on the Gram matrix implicitly
/// (Hestenes' one-sided form): they are applied to the columns of the
/// smaller-side factor, and the eigenvalues are read off as squared column
/// norms. This never forms the squared spectrum explicitly, so tiny singular
/// values keep their absolute accuracy. Non-convergence is reported through
/// the result, which then holds the last iterate.
SingularValues singular_values(std::span<const double> colmajor, int rows,
                               int cols, const JacobiOptions& options = {});

SingularValues singular_values(const PatchMatrix& m,
                               const JacobiOptions& options = {});

/// Smallest t with s_1 + ... + s_t >= alpha * sum(s). An all-zero spectrum
/// gives 1.
int partial_energy_count(std::span<const double> s, double alpha);

}  // namespace nrdq
