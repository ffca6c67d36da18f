#pragma once

#include <Eigen/Dense>

namespace rvc {

struct EighResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, matching eigenvalue order
  int sweeps = 0;
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Convergence: off-diagonal Frobenius norm <= tol * max(1, ||A||_F),
/// the scale guard keeps the test meaningful for large-eigenvalue matrices.
/// Throws EigenFailure if not converged within max_sweeps.
EighResult jacobi_eigh(const Eigen::MatrixXd& a, int max_sweeps = 100,
                       double tol = 1e-12);

}  // namespace rvc
