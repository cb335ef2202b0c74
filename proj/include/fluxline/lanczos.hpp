#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <cstdint>

namespace fluxline::linalg {

using SparseHermitian = Eigen::SparseMatrix<std::complex<double>>;

struct LanczosOptions {
  int max_subspace = 350;    // Krylov basis size before a thick restart
  int max_restarts = 60;
  double tol = 1e-12;        // residual threshold, relative to spectral scale
  int check_every = 10;      // Ritz/residual check cadence (in Lanczos steps)
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

struct EigenPairs {
  Eigen::VectorXd values;     // ascending, size k
  Eigen::MatrixXcd vectors;   // dim x k, orthonormal
  Eigen::VectorXd residuals;  // ||H v - theta v||_2, computed explicitly
  int matvecs = 0;
  bool converged = false;
};

// Lowest-k eigenpairs of a sparse Hermitian matrix.
//
// Lanczos with full reorthogonalization; thick restart (Wu/Simon style) when
// the basis hits max_subspace. Deterministic for a fixed seed. The matrix is
// assumed Hermitian; only its action on vectors is used. Throws
// std::invalid_argument on k < 1, k > dim, or a non-square matrix.
EigenPairs lowest_eigenpairs(const SparseHermitian& H, int k,
                             const LanczosOptions& opts = {});

}  // namespace fluxline::linalg
