#include "fluxline/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fluxline::linalg {

namespace {

Eigen::VectorXcd random_unit_vector(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v(i) = std::complex<double>(re, im);
  }
  v.normalize();
  return v;
}

// Remove from w its components along the first m columns of V. Two classical
// Gram-Schmidt passes keep the basis orthogonal to machine precision; the
// summed coefficients are the Galerkin entries for the projected matrix.
Eigen::VectorXd orthogonalize(const Eigen::MatrixXcd& V, int m,
                              Eigen::VectorXcd& w) {
  Eigen::VectorXcd c = V.leftCols(m).adjoint() * w;
  w.noalias() -= V.leftCols(m) * c;
  Eigen::VectorXcd c2 = V.leftCols(m).adjoint() * w;
  w.noalias() -= V.leftCols(m) * c2;
  return (c + c2).real();
}

}  // namespace

EigenPairs lowest_eigenpairs(const SparseHermitian& H, int k,
                             const LanczosOptions& opts) {
  const Eigen::Index dim = H.rows();
  if (H.cols() != dim) throw std::invalid_argument("lanczos: matrix not square");
  if (k < 1 || k > dim) throw std::invalid_argument("lanczos: bad eigenpair count");

  const int mmax = static_cast<int>(std::min<Eigen::Index>(opts.max_subspace, dim));
  if (mmax < std::min<Eigen::Index>(dim, k + 2))
    throw std::invalid_argument("lanczos: subspace too small for k");

  std::mt19937_64 rng(opts.seed);

  // Columns 0..m-1 hold the orthonormal basis captured in T; column m holds
  // the pending (next) direction. All residuals of the current Ritz pairs
  // are parallel to that pending vector, which is what makes both the cheap
  // convergence bound and the thick restart work.
  Eigen::MatrixXcd V(dim, mmax + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mmax, mmax);
  V.col(0) = random_unit_vector(dim, rng);

  int m = 0;
  double beta_last = 0.0;
  EigenPairs out;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small;

  auto spectral_scale = [](const Eigen::VectorXd& theta) {
    return std::max({std::abs(theta(0)), std::abs(theta(theta.size() - 1)), 1e-300});
  };

  // Extracts the k lowest Ritz pairs and accepts them if their explicitly
  // computed residuals pass. Returns true when done.
  auto try_accept = [&](const Eigen::VectorXd& theta, const Eigen::MatrixXd& S,
                        double scale) {
    out.values = theta.head(k);
    out.vectors.noalias() = V.leftCols(m) * S.leftCols(k);
    out.residuals.resize(k);
    bool ok = true;
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXcd r = H * out.vectors.col(i) - out.values(i) * out.vectors.col(i);
      ++out.matvecs;
      out.residuals(i) = r.norm();
      if (out.residuals(i) > 20.0 * opts.tol * scale) ok = false;
    }
    return ok;
  };

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    while (m < mmax) {
      // One expansion step: w = H v_m, fully reorthogonalized. The projection
      // coefficients fill column m of T (real for Hermitian H up to noise).
      Eigen::VectorXcd w = H * V.col(m);
      ++out.matvecs;
      const Eigen::VectorXd proj = orthogonalize(V, m + 1, w);
      for (int i = 0; i <= m; ++i) {
        T(i, m) = proj(i);
        T(m, i) = proj(i);
      }
      beta_last = w.norm();
      ++m;

      if (beta_last > 1e-13) {
        V.col(m) = w / beta_last;
      } else if (m < dim) {
        // Invariant subspace: deflate with a fresh random direction.
        Eigen::VectorXcd f = random_unit_vector(dim, rng);
        orthogonalize(V, m, f);
        f.normalize();
        V.col(m) = f;
        beta_last = 0.0;
      }

      const bool full = (m == mmax) || (m >= dim);
      if (!full && (m < std::max(2 * k, 8) || m % opts.check_every != 0)) continue;
      if (m < k) continue;

      small.compute(T.topLeftCorner(m, m));
      const Eigen::VectorXd& theta = small.eigenvalues();
      const Eigen::MatrixXd& S = small.eigenvectors();
      const double scale = spectral_scale(theta);
      bool bound_ok = true;
      for (int i = 0; i < k && bound_ok; ++i) {
        const double rbound = (m >= dim) ? 0.0 : beta_last * std::abs(S(m - 1, i));
        if (rbound > opts.tol * scale) bound_ok = false;
      }
      if ((bound_ok || m >= dim) && try_accept(theta, S, scale)) {
        out.converged = true;
        return out;
      }
      if (m >= dim) {
        // Exhausted the whole space; accept whatever we have.
        out.converged = true;
        return out;
      }
    }

    // Thick restart: keep the lowest Ritz vectors; the pending vector stays
    // as the next direction (it carries every Ritz residual).
    small.compute(T.topLeftCorner(m, m));
    const Eigen::VectorXd theta = small.eigenvalues();
    const Eigen::MatrixXd S = small.eigenvectors();
    const int keep = std::min(k + 8, m - 1);
    const Eigen::MatrixXcd Vk = V.leftCols(m) * S.leftCols(keep);
    const Eigen::VectorXcd pending = V.col(m);
    V.leftCols(keep) = Vk;
    V.col(keep) = pending;
    T.setZero();
    for (int i = 0; i < keep; ++i) T(i, i) = theta(i);
    m = keep;
  }

  // Out of restarts: report the best current pairs, flagged unconverged.
  small.compute(T.topLeftCorner(m, m));
  const Eigen::VectorXd& theta = small.eigenvalues();
  const Eigen::MatrixXd& S = small.eigenvectors();
  const int kk = std::min(k, m);
  out.values = theta.head(kk);
  out.vectors.noalias() = V.leftCols(m) * S.leftCols(kk);
  out.residuals.resize(kk);
  for (int i = 0; i < kk; ++i) {
    Eigen::VectorXcd r = H * out.vectors.col(i) - out.values(i) * out.vectors.col(i);
    out.residuals(i) = r.norm();
  }
  out.converged = false;
  return out;
}

}  // namespace fluxline::linalg
