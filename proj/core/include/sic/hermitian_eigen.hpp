#pragma once

#include <Eigen/Dense>

namespace sic {

struct HermitianEigen {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // columns, matching values
};

/// Cyclic Jacobi eigendecomposition of a small Hermitian matrix. Sweeps stop
/// once the off-diagonal Frobenius norm falls below `tolerance` times the
/// norm of the whole matrix.
HermitianEigen jacobi_eigen(const Eigen::MatrixXcd& a, double tolerance = 1e-14, int max_sweeps = 100);

}  // namespace sic
