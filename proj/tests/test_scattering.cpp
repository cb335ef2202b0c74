#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "fluxline/scattering.hpp"

using namespace fluxline::scattering;
using cplx = std::complex<double>;

namespace {

// Deterministic spread of physical parameter sets for identity checks.
std::vector<std::pair<RateSet, DriveSpec>> sample_params(int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<RateSet, DriveSpec>> out;
  for (int i = 0; i < count; ++i) {
    RateSet r;
    r.gamma1_ghz = 0.05 + 2.0 * u(rng);
    r.gamma_phi_ghz = 1.5 * u(rng);
    r.n_th = u(rng);
    DriveSpec d;
    d.delta_ghz = 3.0 + 4.0 * u(rng);
    d.omega_ghz = d.delta_ghz + 6.0 * (u(rng) - 0.5);
    d.rabi_ghz = 0.01 + 1.5 * u(rng);
    out.emplace_back(r, d);
  }
  return out;
}

}  // namespace

TEST_CASE("gamma2 composition and validation") {
  RateSet r{0.4, 0.1, 0.25};
  CHECK(r.gamma2_ghz() == doctest::Approx(0.1 + 0.2 * 1.5).epsilon(1e-14));
  r.n_th = -0.1;
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  r = RateSet{-1.0, 0.0, 0.0};
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("undriven steady state is thermal") {
  RateSet r{0.2, 0.05, 0.0};
  auto cold = steady_state(r, {5.0, 5.0, 0.0});
  CHECK(cold.rho_ee == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cold.rho_gg == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(cold.rho_ge) == 0.0);

  r.n_th = 0.37;
  auto warm = steady_state(r, {5.0, 5.0, 0.0});
  // Detailed balance: rho_ee / rho_gg = n / (1 + n).
  CHECK(warm.rho_ee / warm.rho_gg ==
        doctest::Approx(0.37 / 1.37).epsilon(1e-12));
  CHECK(warm.rho_ee ==
        doctest::Approx(0.37 / (1.0 + 2.0 * 0.37)).epsilon(1e-12));
}

TEST_CASE("strong drive saturates the populations to one half") {
  RateSet r{0.3, 0.0, 0.0};
  auto s = steady_state(r, {5.0, 5.0, 50.0});
  CHECK(s.rho_ee == doctest::Approx(0.5).epsilon(1e-4));

  // Gamma1 = 0 with pure dephasing: exactly one half, and no reflection.
  RateSet deph{0.0, 0.2, 0.0};
  auto sd = steady_state(deph, {5.0, 5.0, 0.4});
  CHECK(sd.rho_ee == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(sd.rho_ge) == 0.0);
  CHECK(transmission(deph, {5.0, 5.0, 0.4}) == cplx(1.0, 0.0));
}

TEST_CASE("steady state internal identities across parameter sets") {
  for (const auto& [r, d] : sample_params(40, 91)) {
    auto s = steady_state(r, d);
    CHECK(s.rho_eg == std::conj(s.rho_ge));
    CHECK(s.rho_ee + s.rho_gg == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.rho_ee >= 0.0);
    CHECK(s.rho_ee <= 0.5 + 1e-12);

    // r = -i (G1/W) rho_eg computed from the state matches reflection().
    const cplx via_state = cplx(0.0, -1.0) * (r.gamma1_ghz / d.rabi_ghz) * s.rho_eg;
    const cplx direct = reflection(r, d);
    CHECK(std::abs(via_state - direct) < 1e-12);

    // t = 1 + r.
    CHECK(std::abs(transmission(r, d) - (1.0 + direct)) < 1e-15);

    // Coherence bound |rho_ge|^2 <= rho_ee rho_gg (physical density matrix).
    CHECK(std::norm(s.rho_ge) <= s.rho_ee * s.rho_gg + 1e-12);
  }
}

TEST_CASE("ideal mirror: full reflection on resonance at weak drive") {
  RateSet r{0.1, 0.0, 0.0};
  const cplx refl = reflection(r, {4.0, 4.0, 1e-5});
  CHECK(std::abs(refl + 1.0) < 1e-7);
  CHECK(std::abs(transmission(r, {4.0, 4.0, 1e-5})) < 1e-7);
}

TEST_CASE("reflection magnitude falls monotonically with drive power") {
  RateSet r{0.2, 0.05, 0.1};
  double prev = 2.0;
  for (double W : {0.001, 0.01, 0.1, 0.3, 1.0, 3.0, 10.0}) {
    const double cur = std::abs(reflection(r, {5.0, 5.0, W}));
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-3);  // saturated away
}

TEST_CASE("transmission floor identity 1 - r0 and the rate form") {
  for (const auto& [r, d] : sample_params(30, 92)) {
    const double r0 = r0_coefficient(r);
    CHECK(r0 > 0.0);
    CHECK(r0 <= 1.0);
    CHECK(transmission_min(r) == doctest::Approx(1.0 - r0).epsilon(1e-14));

    // Same floor written out in rates and thermal occupation.
    const double g1 = r.gamma1_ghz, gp = r.gamma_phi_ghz, n = r.n_th;
    const double tmin =
        (4.0 * g1 * n + 2.0 * gp * (1.0 + 2.0 * n) + 4.0 * g1 * n * n) /
        ((1.0 + 2.0 * n) * (g1 + 2.0 * gp + 2.0 * g1 * n));
    CHECK(transmission_min(r) == doctest::Approx(tmin).epsilon(1e-12));

    // And it is the weak-drive on-resonance |t|.
    DriveSpec on{d.delta_ghz, d.delta_ghz, 1e-7};
    CHECK(std::abs(transmission(r, on)) ==
          doctest::Approx(transmission_min(r)).epsilon(1e-8));
  }

  // Cold, dephasing-free qubit: perfect extinction.
  CHECK(transmission_min(RateSet{0.5, 0.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("lineshape symmetry about resonance") {
  for (const auto& [r, d] : sample_params(20, 93)) {
    for (double off : {0.1, 0.7, 2.3}) {
      const cplx tp = transmission(r, {d.delta_ghz + off, d.delta_ghz, d.rabi_ghz});
      const cplx tm = transmission(r, {d.delta_ghz - off, d.delta_ghz, d.rabi_ghz});
      CHECK(tp.real() == doctest::Approx(tm.real()).epsilon(1e-12));
      CHECK(tp.imag() == doctest::Approx(-tm.imag()).epsilon(1e-12));
    }
  }
}

TEST_CASE("no gain from a thermal qubit") {
  for (const auto& [r, d] : sample_params(40, 94))
    CHECK(std::abs(transmission(r, d)) <= 1.0 + 1e-12);
}

TEST_CASE("weak-drive model matches the full formula, then departs") {
  RateSet r{0.3, 0.04, 0.2};
  const double r0 = r0_coefficient(r);
  const double g2 = r.gamma2_ghz();
  for (double w : {4.0, 4.7, 5.0, 5.4, 6.5}) {
    const cplx weak = transmission(r, {w, 5.0, 1e-6});
    const cplx model = transmission_linear(r0, g2, 5.0, w);
    CHECK(std::abs(weak - model) < 1e-9);
  }
  // At strong drive the Lorentzian model no longer applies on resonance.
  const cplx strong = transmission(r, {5.0, 5.0, 2.0});
  const cplx model0 = transmission_linear(r0, g2, 5.0, 5.0);
  CHECK(std::abs(strong - model0) > 0.05);
}

TEST_CASE("RK4 integration reproduces the closed form") {
  int idx = 0;
  for (const auto& [r, d] : sample_params(25, 95)) {
    auto ref = steady_state(r, d);
    auto num = integrate_bloch(r, d);
    INFO("param set ", idx++);
    CHECK(std::abs(num.state.rho_ee - ref.rho_ee) < 1e-6);
    CHECK(std::abs(num.state.rho_eg - ref.rho_eg) < 1e-6);
    CHECK(num.trace_drift < 1e-9);
    CHECK(num.hermiticity_drift < 1e-9);
  }
}

TEST_CASE("trace generation: determinism, noise, flags") {
  TraceParams p;
  p.rates = RateSet{0.4, 0.02, 0.05};
  p.delta_ghz = 5.0;
  p.rabi_ghz = 1e-4;
  auto grid = linspace(3.0, 7.0, 101);

  auto clean = generate_trace(p, grid);
  REQUIRE(clean.t.size() == grid.size());
  CHECK_FALSE(clean.rwa_strained);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx expect =
        transmission(p.rates, {grid[i], p.delta_ghz, p.rabi_ghz});
    CHECK(clean.t[i] == expect);  // noiseless path is exact
  }

  p.noise_sigma = 0.01;
  p.seed = 123;
  auto n1 = generate_trace(p, grid);
  auto n2 = generate_trace(p, grid);
  CHECK(n1.t == n2.t);
  p.seed = 124;
  auto n3 = generate_trace(p, grid);
  CHECK(n1.t != n3.t);

  // Strongly coupled trace trips the validity flag.
  TraceParams hot = p;
  hot.rates.gamma1_ghz = 9.0;
  hot.delta_ghz = 4.0;
  CHECK(generate_trace(hot, grid).rwa_strained);

  // Far-detuned baseline returns to unity as Gamma1/(2 detuning).
  auto far = generate_trace(TraceParams{RateSet{0.2, 0.0, 0.0}, 5.0, 1e-5, 0.0, 0},
                            {500.0});
  CHECK(std::abs(far.t[0] - 1.0) < 0.2 / (2.0 * 490.0) * 1.1);
}

TEST_CASE("degenerate and invalid inputs are rejected") {
  CHECK_THROWS_AS(steady_state(RateSet{0.0, 0.0, 0.0}, {5.0, 5.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(steady_state(RateSet{0.2, 0.0, 0.0}, {5.0, 5.0, -0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(r0_coefficient(RateSet{0.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(transmission_linear(0.5, 0.0, 5.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(
      generate_trace(TraceParams{RateSet{0.1, 0.0, 0.0}, -5.0, 1e-4, 0.0, 0}, {1.0}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      generate_trace(TraceParams{RateSet{0.1, 0.0, 0.0}, 5.0, 1e-4, 0.0, 0}, {}),
      std::invalid_argument);
  CHECK_THROWS_AS(linspace(0.0, 1.0, 0), std::invalid_argument);
}
