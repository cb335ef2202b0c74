#include "fluxline/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fluxline/constants.hpp"

namespace fluxline::circuit {

using cplx = std::complex<double>;
using constants::pi;

void CircuitSpec::validate() const {
  auto need_pos = [](double v, const char* name) {
    if (!(v > 0.0)) {
      std::ostringstream os;
      os << "circuit: " << name << " must be > 0";
      throw std::invalid_argument(os.str());
    }
  };
  need_pos(r1, "r1");
  need_pos(r2, "r2");
  need_pos(r3, "r3");
  need_pos(r4, "r4");
  need_pos(r5, "r5");
  need_pos(ej_ghz, "ej_ghz");
  need_pos(ec_ghz, "ec_ghz");
  need_pos(area_ratio, "area_ratio");
  if (n_trunc < 1) throw std::invalid_argument("circuit: n_trunc must be >= 1");
}

ChargeBasis::ChargeBasis(int nt) : n_trunc(nt), side(2 * nt + 1) {
  if (nt < 1) throw std::invalid_argument("circuit: n_trunc must be >= 1");
  dim = static_cast<Eigen::Index>(side) * side * side;
}

Eigen::Index ChargeBasis::flatten(int n1, int n2, int n4) const {
  return (static_cast<Eigen::Index>(n1 + n_trunc) * side + (n2 + n_trunc)) * side +
         (n4 + n_trunc);
}

std::array<int, 3> ChargeBasis::unflatten(Eigen::Index idx) const {
  const int n4 = static_cast<int>(idx % side) - n_trunc;
  idx /= side;
  const int n2 = static_cast<int>(idx % side) - n_trunc;
  const int n1 = static_cast<int>(idx / side) - n_trunc;
  return {n1, n2, n4};
}

KineticForm kinetic_form(const CircuitSpec& s) {
  Eigen::Matrix3d K;
  K << s.r1 + s.r3, s.r3, s.r3,
       s.r3, s.r2 + s.r3, s.r3,
       s.r3, s.r3, s.r3 + s.r4 + s.r5;
  KineticForm out;
  out.det = K.determinant();
  out.kinv = K.inverse();
  return out;
}

KineticForm kinetic_form_closed(const CircuitSpec& s) {
  // Adjugate of the island capacitance matrix, written out by hand. The
  // beta-branch junctions only appear through their sum b = r4 + r5.
  const double b = s.r4 + s.r5;
  const double t = s.r3 + b;
  const double det = s.r2 * s.r3 * b + s.r1 * (s.r3 * b + s.r2 * t);
  Eigen::Matrix3d adj;
  adj << s.r2 * t + s.r3 * b, -s.r3 * b, -s.r2 * s.r3,
         -s.r3 * b, s.r1 * t + s.r3 * b, -s.r1 * s.r3,
         -s.r2 * s.r3, -s.r1 * s.r3, s.r1 * s.r2 + s.r1 * s.r3 + s.r2 * s.r3;
  KineticForm out;
  out.det = det;
  out.kinv = adj / det;
  return out;
}

std::vector<JosephsonTerm> josephson_terms(const CircuitSpec& s, FluxPoint flux) {
  return {
      {s.r1, 0.0, {1, 0, 0}},
      {s.r2, 0.0, {0, 1, 0}},
      {s.r3, flux.f_eps, {1, 1, 1}},
      {s.r4, 0.0, {0, 0, 1}},
      {s.r5, flux.f_beta, {0, 0, 1}},
  };
}

linalg::SparseHermitian assemble(const KineticForm& kin, double ec_ghz,
                                 double ej_ghz,
                                 const std::vector<JosephsonTerm>& terms,
                                 const ChargeBasis& basis) {
  const int nt = basis.n_trunc;
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(basis.dim) * (1 + 2 * terms.size()));

  for (int n1 = -nt; n1 <= nt; ++n1)
    for (int n2 = -nt; n2 <= nt; ++n2)
      for (int n4 = -nt; n4 <= nt; ++n4) {
        const Eigen::Vector3d n(n1, n2, n4);
        const double ekin = 4.0 * ec_ghz * n.dot(kin.kinv * n);
        const Eigen::Index row = basis.flatten(n1, n2, n4);
        trips.emplace_back(row, row, cplx(ekin, 0.0));
      }

  // -ej w cos(2 pi tau + s.phi): the e^{+i(...)} half lowers the shifted
  // charges by one; its Hermitian partner raises them. Hops that would leave
  // the truncated box are dropped on both sides alike.
  for (const auto& term : terms) {
    const cplx amp = -0.5 * ej_ghz * term.weight *
                     std::polar(1.0, 2.0 * pi * term.phase_turns);
    const auto& st = term.steps;
    for (int n1 = -nt; n1 <= nt; ++n1) {
      const int m1 = n1 - st[0];
      if (m1 < -nt || m1 > nt) continue;
      for (int n2 = -nt; n2 <= nt; ++n2) {
        const int m2 = n2 - st[1];
        if (m2 < -nt || m2 > nt) continue;
        for (int n4 = -nt; n4 <= nt; ++n4) {
          const int m4 = n4 - st[2];
          if (m4 < -nt || m4 > nt) continue;
          const Eigen::Index col = basis.flatten(n1, n2, n4);
          const Eigen::Index row = basis.flatten(m1, m2, m4);
          trips.emplace_back(row, col, amp);
          trips.emplace_back(col, row, std::conj(amp));
        }
      }
    }
  }

  linalg::SparseHermitian H(basis.dim, basis.dim);
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

linalg::SparseHermitian build_hamiltonian(const CircuitSpec& spec, FluxPoint flux,
                                          Eigen::Index max_dim) {
  spec.validate();
  ChargeBasis basis(spec.n_trunc);
  if (basis.dim > max_dim) {
    std::ostringstream os;
    os << "circuit: basis dimension " << basis.dim << " exceeds cap " << max_dim
       << " (n_trunc=" << spec.n_trunc << ")";
    throw std::invalid_argument(os.str());
  }
  return assemble(kinetic_form(spec), spec.ec_ghz, spec.ej_ghz,
                  josephson_terms(spec, flux), basis);
}

std::complex<double> phi_matrix_element(int n, int m) {
  if (m == n) return {0.0, 0.0};
  const int k = m - n;
  const double parity = (k % 2 == 0) ? 1.0 : -1.0;
  return {0.0, -parity / k};
}

double beta_well_angle(const CircuitSpec& spec, FluxPoint flux) {
  const cplx z = spec.r4 + spec.r5 * std::polar(1.0, 2.0 * pi * flux.f_beta);
  return std::arg(z);
}

Eigen::VectorXcd apply_phi_beta(const ChargeBasis& basis, const Eigen::VectorXcd& v,
                                double center_angle) {
  if (v.size() != basis.dim)
    throw std::invalid_argument("circuit: state size does not match basis");
  const int side = basis.side;
  Eigen::MatrixXcd M(side, side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      M(i, j) = phi_matrix_element(i - basis.n_trunc, j - basis.n_trunc) *
                std::polar(1.0, (j - i) * center_angle);

  Eigen::VectorXcd out(v.size());
  for (Eigen::Index blk = 0; blk < basis.dim; blk += side)
    out.segment(blk, side).noalias() = M * v.segment(blk, side);
  return out;
}

std::complex<double> phase_operator_element(const ChargeBasis& basis,
                                            const Eigen::VectorXcd& bra,
                                            const Eigen::VectorXcd& ket,
                                            double center_angle) {
  return bra.dot(apply_phi_beta(basis, ket, center_angle));
}

PauliComponents pauli_decompose(
    const Eigen::VectorXcd& v0, const Eigen::VectorXcd& v1,
    const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& op) {
  const Eigen::VectorXcd ov0 = op(v0);
  const Eigen::VectorXcd ov1 = op(v1);
  const double o00 = v0.dot(ov0).real();
  const double o11 = v1.dot(ov1).real();
  const cplx o01 = v0.dot(ov1);
  PauliComponents p;
  p.id = 0.5 * (o00 + o11);
  p.z = 0.5 * (o00 - o11);
  p.x = o01.real();
  p.y = -o01.imag();
  return p;
}

namespace {

// Rotates the global phase so the largest-magnitude component is real and
// positive; pins the otherwise arbitrary Lanczos vector phase.
void fix_phase(Eigen::VectorXcd& v) {
  Eigen::Index imax = 0;
  double best = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::norm(v(i));
    if (a > best) {
      best = a;
      imax = i;
    }
  }
  const double mag = std::abs(v(imax));
  if (mag > 0.0) v *= std::conj(v(imax)) / mag;
}

}  // namespace

QubitSolution diagonalize(const linalg::SparseHermitian& H, const ChargeBasis& basis,
                          FluxPoint flux, int k, const linalg::LanczosOptions& opts,
                          double center_angle) {
  if (k < 2) throw std::invalid_argument("circuit: need at least two levels");
  if (H.rows() != basis.dim)
    throw std::invalid_argument("circuit: matrix size does not match basis");

  auto pairs = linalg::lowest_eigenpairs(H, k, opts);

  Eigen::VectorXcd v0 = pairs.vectors.col(0);
  Eigen::VectorXcd v1 = pairs.vectors.col(1);
  fix_phase(v0);
  fix_phase(v1);
  const cplx raw01 = phase_operator_element(basis, v0, v1, center_angle);
  if (std::abs(raw01) > 1e-14) v1 *= std::polar(1.0, -std::arg(raw01));

  QubitSolution sol;
  sol.flux = flux;
  sol.energies_ghz.assign(pairs.values.data(), pairs.values.data() + pairs.values.size());
  sol.gap0_ghz = pairs.values(1) - pairs.values(0);
  sol.phi_beta_elem = phase_operator_element(basis, v0, v1, center_angle);
  sol.pauli = pauli_decompose(v0, v1, [&basis, center_angle](const Eigen::VectorXcd& v) {
    return apply_phi_beta(basis, v, center_angle);
  });
  sol.residuals = pairs.residuals;
  sol.converged = pairs.converged;
  return sol;
}

QubitSolution solve_point(const CircuitSpec& spec, FluxPoint flux, int k,
                          const linalg::LanczosOptions& opts) {
  ChargeBasis basis(spec.n_trunc);
  return diagonalize(build_hamiltonian(spec, flux), basis, flux, k, opts,
                     beta_well_angle(spec, flux));
}

double symmetry_residual(const CircuitSpec& s, FluxPoint flux) {
  return s.r4 * std::sin(2.0 * pi * flux.f_eps) +
         s.r5 * std::sin(2.0 * pi * (flux.f_eps - flux.f_beta));
}

bool symmetry_frustrated(const CircuitSpec& s, FluxPoint flux) {
  return s.r4 * std::cos(2.0 * pi * flux.f_eps) +
             s.r5 * std::cos(2.0 * pi * (flux.f_eps - flux.f_beta)) <
         0.0;
}

std::vector<FluxPoint> symmetry_points(const CircuitSpec& spec, double f_eps_lo,
                                       double f_eps_hi, double f_beta_offset) {
  spec.validate();
  if (!(f_eps_hi > f_eps_lo))
    throw std::invalid_argument("circuit: empty symmetry search window");

  auto slaved = [&](double fe) {
    return FluxPoint{fe, fe / spec.area_ratio + f_beta_offset};
  };
  auto g = [&](double fe) { return symmetry_residual(spec, slaved(fe)); };

  // Dense scan for brackets, then bisection. The residual oscillates on the
  // scale of one flux quantum, so a few hundred samples per unit interval
  // cannot skip a transversal root.
  const double h = 0.002;
  const int cells = static_cast<int>(std::ceil((f_eps_hi - f_eps_lo) / h));
  std::vector<double> roots;
  double x0 = f_eps_lo;
  double g0 = g(x0);
  for (int c = 1; c <= cells; ++c) {
    const double x1 = std::min(f_eps_lo + c * h, f_eps_hi);
    const double g1 = g(x1);
    if (g0 == 0.0) roots.push_back(x0);
    if (g0 * g1 < 0.0) {
      double a = x0, b = x1, ga = g0;
      for (int it = 0; it < 100 && (b - a) > 1e-13; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if (gm == 0.0) {
          a = b = mid;
          break;
        }
        if (ga * gm < 0.0) {
          b = mid;
        } else {
          a = mid;
          ga = gm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    g0 = g1;
  }
  if (g0 == 0.0) roots.push_back(x0);

  std::vector<FluxPoint> out;
  for (double r : roots) {
    if (!out.empty() && std::abs(out.back().f_eps - r) < 1e-9) continue;
    const FluxPoint fp = slaved(r);
    if (symmetry_frustrated(spec, fp)) out.push_back(fp);
  }
  return out;
}

std::vector<QubitSolution> sweep_gap(const CircuitSpec& spec,
                                     const std::vector<FluxPoint>& fluxes,
                                     int k, int threads,
                                     const linalg::LanczosOptions& opts) {
  spec.validate();
  std::vector<QubitSolution> out(fluxes.size());
  if (fluxes.empty()) return out;

  const int nthreads = std::max(1, std::min<int>(threads, fluxes.size()));
  std::exception_ptr first_error;
  std::mutex err_mutex;

  auto worker = [&](int tid) {
    for (std::size_t i = tid; i < fluxes.size(); i += nthreads) {
      try {
        out[i] = solve_point(spec, fluxes[i], k, opts);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace fluxline::circuit
