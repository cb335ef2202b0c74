#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "fluxline/circuit.hpp"

using namespace fluxline;
using namespace fluxline::circuit;
using cplx = std::complex<double>;

namespace {

Eigen::VectorXd dense_lowest(const linalg::SparseHermitian& H, int k) {
  Eigen::MatrixXcd D(H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
  return es.eigenvalues().head(k);
}

CircuitSpec small_spec(int n_trunc) {
  CircuitSpec s;
  s.n_trunc = n_trunc;
  return s;
}

// Expectation of the charge-reversal operator (n -> -n on all islands);
// +1/-1 for even/odd states when the Hamiltonian is reflection symmetric.
double reversal_parity(const ChargeBasis& b, const Eigen::VectorXcd& v) {
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < b.dim; ++i) {
    const auto n = b.unflatten(i);
    acc += std::conj(v(i)) * v(b.flatten(-n[0], -n[1], -n[2]));
  }
  return acc.real();
}

}  // namespace

TEST_CASE("spec validation names the offending field") {
  CircuitSpec s;
  s.r4 = 0.0;
  CHECK_THROWS_WITH_AS(s.validate(), "circuit: r4 must be > 0", std::invalid_argument);
  s = CircuitSpec{};
  s.n_trunc = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = CircuitSpec{};
  s.ec_ghz = -1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("charge basis flattening is lexicographic with n4 fastest") {
  ChargeBasis b(2);
  CHECK(b.side == 5);
  CHECK(b.dim == 125);
  CHECK(b.flatten(-2, -2, -2) == 0);
  CHECK(b.flatten(-2, -2, -1) - b.flatten(-2, -2, -2) == 1);
  CHECK(b.flatten(-2, -1, -2) - b.flatten(-2, -2, -2) == 5);
  CHECK(b.flatten(-1, -2, -2) - b.flatten(-2, -2, -2) == 25);
  for (Eigen::Index i = 0; i < b.dim; ++i) {
    const auto n = b.unflatten(i);
    CHECK(b.flatten(n[0], n[1], n[2]) == i);
  }
}

TEST_CASE("closed-form capacitance inverse matches the numeric one") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(0.2, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    CircuitSpec s;
    s.r1 = uni(rng);
    s.r2 = uni(rng);
    s.r3 = uni(rng);
    s.r4 = uni(rng);
    s.r5 = uni(rng);
    const KineticForm a = kinetic_form(s);
    const KineticForm c = kinetic_form_closed(s);
    CHECK(std::abs(a.det - c.det) < 1e-12 * std::abs(c.det));
    CHECK((a.kinv - c.kinv).norm() < 1e-12 * c.kinv.norm());
    // K^{-1} must actually invert K.
    Eigen::Matrix3d K;
    K << s.r1 + s.r3, s.r3, s.r3, s.r3, s.r2 + s.r3, s.r3, s.r3, s.r3,
        s.r3 + s.r4 + s.r5;
    CHECK((c.kinv * K - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("hamiltonian is exactly hermitian with a real diagonal") {
  CircuitSpec s = small_spec(3);
  auto H = build_hamiltonian(s, {0.37, 0.11});
  linalg::SparseHermitian Hd = linalg::SparseHermitian(H.adjoint());
  CHECK((H - Hd).norm() == 0.0);
  for (Eigen::Index i = 0; i < H.rows(); ++i)
    CHECK(H.coeff(i, i).imag() == 0.0);
}

TEST_CASE("dimension cap rejects oversized truncations") {
  CircuitSpec s = small_spec(15);  // 31^3 > 29^3
  CHECK_THROWS_AS(build_hamiltonian(s, {0.0, 0.0}), std::invalid_argument);
  CHECK_NOTHROW(build_hamiltonian(s, {0.0, 0.0}, 31 * 31 * 31));
}

TEST_CASE("sparse eigenvalues match dense diagonalization") {
  CircuitSpec s = small_spec(3);
  auto H = build_hamiltonian(s, {0.5, 0.5 / s.area_ratio});
  auto ref = dense_lowest(H, 5);
  ChargeBasis b(s.n_trunc);
  auto sol = diagonalize(H, b, {0.5, 0.5 / s.area_ratio}, 5);
  REQUIRE(sol.converged);
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(sol.energies_ghz[i] - ref(i)) < 1e-8);
}

TEST_CASE("beta branch merges into one junction at integer and half f_beta") {
  CircuitSpec s = small_spec(3);
  const ChargeBasis b(s.n_trunc);
  const KineticForm kin = kinetic_form(s);
  const FluxPoint feps_only{0.23, 0.0};

  auto eigs = [&](const linalg::SparseHermitian& H) { return dense_lowest(H, 4); };

  // f_beta = 0: branches add.
  {
    auto full = assemble(kin, s.ec_ghz, s.ej_ghz, josephson_terms(s, feps_only), b);
    std::vector<JosephsonTerm> merged = {
        {s.r1, 0.0, {1, 0, 0}},
        {s.r2, 0.0, {0, 1, 0}},
        {s.r3, feps_only.f_eps, {1, 1, 1}},
        {s.r4 + s.r5, 0.0, {0, 0, 1}},
    };
    auto red = assemble(kin, s.ec_ghz, s.ej_ghz, merged, b);
    CHECK((eigs(full) - eigs(red)).cwiseAbs().maxCoeff() < 1e-9);
  }

  // f_beta = 1/2: branches subtract (pi junction when r5 > r4).
  {
    auto full = assemble(kin, s.ec_ghz, s.ej_ghz,
                         josephson_terms(s, {feps_only.f_eps, 0.5}), b);
    std::vector<JosephsonTerm> merged = {
        {s.r1, 0.0, {1, 0, 0}},
        {s.r2, 0.0, {0, 1, 0}},
        {s.r3, feps_only.f_eps, {1, 1, 1}},
        {s.r4 - s.r5, 0.0, {0, 0, 1}},
    };
    auto red = assemble(kin, s.ec_ghz, s.ej_ghz, merged, b);
    CHECK((eigs(full) - eigs(red)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("phase operator matrix elements") {
  CHECK(phi_matrix_element(3, 3) == cplx(0.0, 0.0));
  CHECK(phi_matrix_element(0, 1) == cplx(0.0, 1.0));
  CHECK(phi_matrix_element(0, 2) == cplx(0.0, -0.5));
  CHECK(phi_matrix_element(2, 5) == cplx(0.0, 1.0 / 3.0));
  for (int n = -3; n <= 3; ++n)
    for (int m = -3; m <= 3; ++m)
      CHECK(std::conj(phi_matrix_element(n, m)) == phi_matrix_element(m, n));
}

TEST_CASE("phi acts on the n4 index only and is hermitian") {
  ChargeBasis b(2);
  std::mt19937 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  auto randv = [&] {
    Eigen::VectorXcd v(b.dim);
    for (Eigen::Index i = 0; i < b.dim; ++i) v(i) = cplx(g(rng), g(rng));
    return v;
  };

  // Product state: phi touches the n4 factor, leaves (n1, n2) alone.
  Eigen::VectorXcd x(b.side), v = Eigen::VectorXcd::Zero(b.dim);
  for (int i = 0; i < b.side; ++i) x(i) = cplx(g(rng), g(rng));
  const int i1 = 1, i2 = -2;
  for (int i4 = -2; i4 <= 2; ++i4) v(b.flatten(i1, i2, i4)) = x(i4 + 2);
  const Eigen::VectorXcd pv = apply_phi_beta(b, v);
  for (Eigen::Index i = 0; i < b.dim; ++i) {
    const auto n = b.unflatten(i);
    if (n[0] != i1 || n[1] != i2) CHECK(pv(i) == cplx(0.0, 0.0));
  }
  cplx expect = 0.0;
  for (int m = -2; m <= 2; ++m) expect += phi_matrix_element(0, m) * x(m + 2);
  CHECK(std::abs(pv(b.flatten(i1, i2, 0)) - expect) < 1e-14);

  const Eigen::VectorXcd a = randv(), c = randv();
  CHECK(std::abs(phase_operator_element(b, a, c) -
                 std::conj(phase_operator_element(b, c, a))) < 1e-12);

  // |<bra|phi|ket>| is invariant under global phases.
  const cplx e1 = std::polar(1.0, 0.77), e2 = std::polar(1.0, -2.13);
  CHECK(std::abs(std::abs(phase_operator_element(b, Eigen::VectorXcd(e1 * a),
                                                 Eigen::VectorXcd(e2 * c))) -
                 std::abs(phase_operator_element(b, a, c))) < 1e-12);
}

TEST_CASE("pauli components of the identity") {
  ChargeBasis b(2);
  Eigen::VectorXcd v0 = Eigen::VectorXcd::Zero(b.dim);
  Eigen::VectorXcd v1 = Eigen::VectorXcd::Zero(b.dim);
  v0(3) = 1.0;
  v1(17) = cplx(0.6, 0.8);
  auto p = pauli_decompose(v0, v1, [](const Eigen::VectorXcd& v) { return v; });
  CHECK(p.id == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(p.x) < 1e-12);
  CHECK(std::abs(p.y) < 1e-12);
  CHECK(std::abs(p.z) < 1e-12);
}

TEST_CASE("double well at full frustration: parity split and gauge fixing") {
  CircuitSpec s = small_spec(5);
  const FluxPoint fp{0.5, 0.0};  // beta branches add; frustrated point
  auto H = build_hamiltonian(s, fp);
  ChargeBasis b(s.n_trunc);
  auto sol = diagonalize(H, b, fp, 4);
  REQUIRE(sol.converged);

  // Two tunnel-split levels well below the next doublet.
  CHECK(sol.gap0_ghz > 0.0);
  CHECK(sol.gap0_ghz < 0.3 * (sol.energies_ghz[2] - sol.energies_ghz[1]));

  // Ground state even, first excited odd under charge reversal.
  auto Hfull = build_hamiltonian(s, fp);
  auto pairs = linalg::lowest_eigenpairs(Hfull, 2);
  CHECK(reversal_parity(b, pairs.vectors.col(0)) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(reversal_parity(b, pairs.vectors.col(1)) == doctest::Approx(-1.0).epsilon(1e-6));

  // Gauge fixing makes the qubit phase element real, positive, and equal to
  // the x Pauli component; the diagonal part vanishes by parity.
  CHECK(sol.phi_beta_elem.imag() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(sol.phi_beta_elem.real() > 0.01);
  CHECK(sol.pauli.x == doctest::Approx(sol.phi_beta_elem.real()).epsilon(1e-10));
  CHECK(std::abs(sol.pauli.y) < 1e-10);
  CHECK(std::abs(sol.pauli.z) < 1e-4);
}

TEST_CASE("pauli z grows and x shrinks when biased off the symmetry point") {
  CircuitSpec s = small_spec(4);
  const FluxPoint on{0.5, 0.0};
  const FluxPoint off{0.508, 0.0};
  auto sol_on = solve_point(s, on, 2);
  auto sol_off = solve_point(s, off, 2);
  CHECK(std::abs(sol_on.pauli.z) < 1e-4);
  CHECK(std::abs(sol_off.pauli.z) > 10.0 * std::abs(sol_on.pauli.z));
  CHECK(sol_off.pauli.x < sol_on.pauli.x);
  CHECK(sol_off.gap0_ghz > sol_on.gap0_ghz);
}

TEST_CASE("symmetry points: slaved search, residuals, frustration filter") {
  CircuitSpec s;  // default tunable device
  auto pts = symmetry_points(s, 0.0, 3.0);
  REQUIRE(!pts.empty());
  for (const auto& p : pts) {
    CHECK(std::abs(symmetry_residual(s, p)) < 1e-8);
    CHECK(symmetry_frustrated(s, p));
    CHECK(p.f_beta == doctest::Approx(p.f_eps / s.area_ratio).epsilon(1e-12));
  }
  // Spacings modulate around one flux quantum.
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = pts[i].f_eps - pts[i - 1].f_eps;
    CHECK(d > 0.7);
    CHECK(d < 1.3);
  }
}

TEST_CASE("symmetry points reduce to odd half-integers for one loop") {
  CircuitSpec s;
  s.r5 = 1e-12;  // beta branch effectively a single junction
  auto pts = symmetry_points(s, 0.0, 3.0);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].f_eps == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(pts[1].f_eps == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(pts[2].f_eps == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("gap is locally minimal at a slaved symmetry point") {
  CircuitSpec s = small_spec(5);
  auto pts = symmetry_points(s, 0.3, 0.8);
  REQUIRE(pts.size() == 1);
  const double fe = pts[0].f_eps;
  auto at = [&](double f) {
    return solve_point(s, FluxPoint{f, f / s.area_ratio}, 2).gap0_ghz;
  };
  const double g0 = at(fe);
  CHECK(g0 < at(fe + 0.004));
  CHECK(g0 < at(fe - 0.004));
}

TEST_CASE("spectrum periodicity in f_eps holds only at fixed f_beta") {
  CircuitSpec s = small_spec(4);
  auto gap_fixed = [&](double fe) {
    return solve_point(s, FluxPoint{fe, 0.11}, 2).gap0_ghz;
  };
  CHECK(std::abs(gap_fixed(0.4) - gap_fixed(1.4)) < 1e-9);

  auto gap_slaved = [&](double fe) {
    return solve_point(s, FluxPoint{fe, fe / s.area_ratio}, 2).gap0_ghz;
  };
  CHECK(std::abs(gap_slaved(0.4) - gap_slaved(1.4)) > 1e-3);
}

TEST_CASE("sweep_gap keeps input order and is thread-count independent") {
  CircuitSpec s = small_spec(3);
  std::vector<FluxPoint> fluxes;
  for (int i = 0; i < 5; ++i) fluxes.push_back({0.45 + 0.02 * i, 0.05});
  auto a = sweep_gap(s, fluxes, 3, 1);
  auto b = sweep_gap(s, fluxes, 3, 3);
  REQUIRE(a.size() == fluxes.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].flux.f_eps == fluxes[i].f_eps);
    CHECK(a[i].gap0_ghz == b[i].gap0_ghz);  // bitwise: same work per point
    CHECK(a[i].energies_ghz.size() == 3);
  }
}
