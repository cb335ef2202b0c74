#pragma once

#include "fluxline/circuit.hpp"

namespace fluxline::spinboson {

struct EnvironmentSpec {
  double z0_ohm = 50.0;     // line impedance seen by the beta branch
  double cutoff_ghz = 50.0; // environment cutoff, omega_c/2pi
  double p_const = 4.8;     // order-one constant in the gap renormalization

  void validate() const;
};

// Gamma1/Delta from the qubit phase element across a line of impedance z0:
// (1/2pi) (R_Q/z0) |phi|^2.
double coupling_ratio(double abs_phi_elem, double z0_ohm);

// Dimensionless spin-boson coupling alpha = Gamma1/(pi Delta) and back.
double alpha_from_ratio(double gamma1_over_delta);
double ratio_from_alpha(double alpha);

// Ohmic bath spectral density J(omega) = pi alpha omega. With cyclic
// frequencies in and out, the decay rate at the qubit gap is Gamma1 = J(Delta).
double spectral_density(double omega_ghz, double alpha);
double gamma1_ghz(double delta_ghz, double alpha);

// Bath-dressed qubit gap Delta = Delta0 (p Delta0/omega_c)^(alpha/(1-alpha)).
// The self-consistent variant iterates the right-hand side on the dressed gap
// until it settles (at most 100 steps, relative tolerance 1e-10); for
// alpha > 1/2 that iteration collapses to zero when the bare gap is small,
// which is reported as 0 rather than an error. Throws for alpha outside
// [0, 1) or non-positive delta0.
double renormalize_gap(double delta0_ghz, double alpha, const EnvironmentSpec& env,
                       bool self_consistent = false);

enum class Regime { underdamped, overdamped, localized };
Regime classify_regime(double alpha);  // boundaries 0.5 and 1.0 round upward
const char* regime_name(Regime r);

// Above alpha = 1/2 the bare-ratio estimate undershoots the true coupling,
// so a quoted Gamma1/Delta is only a lower bound there.
bool is_lower_bound(double alpha);

struct CouplingResult {
  double abs_phi_elem = 0.0;
  double gamma1_over_delta = 0.0;
  double alpha = 0.0;
  Regime regime = Regime::underdamped;
  bool lower_bound = false;
  double delta0_ghz = 0.0;   // bare circuit gap
  double delta_ghz = 0.0;    // dressed gap; 0 when localized
  double gamma1_ghz = 0.0;   // decay rate at the dressed gap
};

// Bundles the derived environment quantities for one circuit solution.
CouplingResult characterize(double abs_phi_elem, double delta0_ghz,
                            const EnvironmentSpec& env,
                            bool self_consistent = false);

// Centered-difference sensitivity of the qubit gap to the two loop fluxes,
// in GHz per flux quantum.
struct GapSensitivity {
  double d_feps_ghz = 0.0;
  double d_fbeta_ghz = 0.0;
};
GapSensitivity gap_flux_sensitivity(const circuit::CircuitSpec& spec,
                                    circuit::FluxPoint flux, double step = 1e-4,
                                    const linalg::LanczosOptions& opts = {});

}  // namespace fluxline::spinboson
