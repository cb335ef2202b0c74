#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "fluxline/lanczos.hpp"

namespace fluxline::circuit {

// Four-junction flux qubit with the coupler junction split into a two-branch
// loop (areas r4, r5) so the effective coupling is flux tunable. All junction
// areas are relative to a reference junction with Josephson energy ej_ghz and
// charging energy ec_ghz (both cyclic frequencies, E/h in GHz).
struct CircuitSpec {
  double r1 = 1.0;
  double r2 = 0.6;
  double r3 = 1.0;
  double r4 = 1.0;
  double r5 = 2.6;
  double ej_ghz = 300.0;
  double ec_ghz = 300.0 / 70.0;
  double area_ratio = 8.3;  // epsilon-loop area over beta-loop area
  int n_trunc = 10;         // charge states kept per island: [-n_trunc, n_trunc]

  void validate() const;  // throws std::invalid_argument naming the bad field
};

struct FluxPoint {
  double f_eps = 0.0;   // epsilon-loop frustration, Phi_eps/Phi_0
  double f_beta = 0.0;  // beta-loop frustration, Phi_beta/Phi_0
};

// Charge-basis indexing for the three independent islands (n1, n2, n4),
// flattened lexicographically with n1 slowest and n4 fastest.
struct ChargeBasis {
  explicit ChargeBasis(int n_trunc);
  int n_trunc;
  int side;           // 2*n_trunc + 1
  Eigen::Index dim;   // side^3

  Eigen::Index flatten(int n1, int n2, int n4) const;
  std::array<int, 3> unflatten(Eigen::Index idx) const;
};

// Charging energy quadratic form: H_kin = 4 ec_ghz * n^T kinv n, where kinv
// is the inverse of the dimensionless capacitance matrix K built from the
// junction areas. kinetic_form_closed uses the hand-derived adjugate/det
// expressions and exists to cross-check the numeric inverse.
struct KineticForm {
  Eigen::Matrix3d kinv;
  double det;
};
KineticForm kinetic_form(const CircuitSpec& spec);
KineticForm kinetic_form_closed(const CircuitSpec& spec);

// One potential term -ej_ghz * weight * cos(2*pi*phase_turns + sum_i steps_i phi_i).
// Exposed so reduced junction configurations (e.g. the merged beta branch at
// integer or half-integer f_beta) can be assembled directly in tests.
struct JosephsonTerm {
  double weight;
  double phase_turns;
  std::array<int, 3> steps;  // which of (phi_1, phi_2, phi_4) enter the cosine
};
std::vector<JosephsonTerm> josephson_terms(const CircuitSpec& spec, FluxPoint flux);

linalg::SparseHermitian assemble(const KineticForm& kin, double ec_ghz,
                                 double ej_ghz,
                                 const std::vector<JosephsonTerm>& terms,
                                 const ChargeBasis& basis);

// Full Hamiltonian in the truncated charge basis, in GHz. Throws if the
// matrix dimension would exceed max_dim. The default cap admits the
// n_trunc = 12 convergence checks while refusing runaway bases.
linalg::SparseHermitian build_hamiltonian(const CircuitSpec& spec, FluxPoint flux,
                                          Eigen::Index max_dim = 29 * 29 * 29);

// Single-mode phase operator element <n| phi |m>; zero on the diagonal,
// -i (-1)^(m-n)/(m-n) otherwise.
std::complex<double> phi_matrix_element(int n, int m);

// Angle of the merged beta-branch junction, arg(r4 + r5 e^{i 2 pi f_beta}).
// The branch potential minimum sits at phi_4 = -angle; the compact phase
// operator must be centered there or its branch cut at +-pi contaminates the
// matrix elements once the well rotates toward the cut.
double beta_well_angle(const CircuitSpec& spec, FluxPoint flux);

// phi acting on the beta-branch island index n4 of a flattened state. The
// operator is the 2pi-periodized phi_4 + center_angle, whose elements are the
// plain ones twisted by e^{i (m-n) center_angle}; pass the well angle so the
// discontinuity sits opposite the wavefunction support.
Eigen::VectorXcd apply_phi_beta(const ChargeBasis& basis, const Eigen::VectorXcd& v,
                                double center_angle = 0.0);

std::complex<double> phase_operator_element(const ChargeBasis& basis,
                                            const Eigen::VectorXcd& bra,
                                            const Eigen::VectorXcd& ket,
                                            double center_angle = 0.0);

// Components of a Hermitian operator restricted to span{v0, v1}:
// O = id * I + x sx + y sy + z sz in the basis (v0, v1).
struct PauliComponents {
  double id = 0.0, x = 0.0, y = 0.0, z = 0.0;
};
PauliComponents pauli_decompose(
    const Eigen::VectorXcd& v0, const Eigen::VectorXcd& v1,
    const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& op);

struct QubitSolution {
  FluxPoint flux;
  std::vector<double> energies_ghz;     // ascending
  double gap0_ghz = 0.0;                // E1 - E0
  std::complex<double> phi_beta_elem;   // <0| phi_4 |1>, gauge fixed real >= 0
  PauliComponents pauli;                // phi_4 in the qubit subspace
  Eigen::VectorXd residuals;
  bool converged = false;
};

// Lowest-k eigenpairs plus the qubit-subspace quantities. Eigenvector phases
// are fixed so that <0|phi_4|1> is real and non-negative. k >= 2. The phase
// operator is evaluated about center_angle (see apply_phi_beta).
QubitSolution diagonalize(const linalg::SparseHermitian& H, const ChargeBasis& basis,
                          FluxPoint flux, int k = 4,
                          const linalg::LanczosOptions& opts = {},
                          double center_angle = 0.0);

QubitSolution solve_point(const CircuitSpec& spec, FluxPoint flux, int k = 4,
                          const linalg::LanczosOptions& opts = {});

// Frustration condition for the parity-symmetric (gap-minimum) bias points:
//   r4 sin(2 pi f_eps) + r5 sin(2 pi (f_eps - f_beta)) = 0
// with r4 cos(2 pi f_eps) + r5 cos(2 pi (f_eps - f_beta)) < 0.
double symmetry_residual(const CircuitSpec& spec, FluxPoint flux);
bool symmetry_frustrated(const CircuitSpec& spec, FluxPoint flux);

// All frustrated points in [f_eps_lo, f_eps_hi] with the beta flux slaved to
// the epsilon flux through the loop-area ratio:
//   f_beta = f_eps / area_ratio + f_beta_offset.
std::vector<FluxPoint> symmetry_points(const CircuitSpec& spec, double f_eps_lo,
                                       double f_eps_hi, double f_beta_offset = 0.0);

// Qubit solutions over a list of flux points. Work is split across threads;
// results keep the input order regardless of thread count.
std::vector<QubitSolution> sweep_gap(const CircuitSpec& spec,
                                     const std::vector<FluxPoint>& fluxes,
                                     int k = 3, int threads = 1,
                                     const linalg::LanczosOptions& opts = {});

}  // namespace fluxline::circuit
