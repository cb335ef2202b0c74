#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace fluxline::scattering {

// Decay rates of the driven two-level system, all cyclic frequencies (GHz).
struct RateSet {
  double gamma1_ghz = 0.0;    // relaxation into the line
  double gamma_phi_ghz = 0.0; // pure dephasing
  double n_th = 0.0;          // thermal photon number at the qubit frequency

  // Total decoherence rate: gamma_phi + (gamma1/2)(1 + 2 n_th).
  double gamma2_ghz() const;
  void validate() const;
};

struct DriveSpec {
  double omega_ghz = 0.0;  // probe frequency
  double delta_ghz = 0.0;  // qubit frequency
  double rabi_ghz = 0.0;   // drive amplitude Omega

  double detuning_ghz() const { return omega_ghz - delta_ghz; }
};

struct SteadyState {
  double rho_ee = 0.0;
  double rho_gg = 1.0;
  std::complex<double> rho_ge;  // <g|rho|e>
  std::complex<double> rho_eg;
};

// Closed-form steady state of the driven, thermally damped two-level system
// in the frame rotating at the probe. Throws when every rate and the drive
// vanish (no unique steady state).
SteadyState steady_state(const RateSet& rates, const DriveSpec& drive);

// Mirror-like reflection off the qubit, r = -i (Gamma1/Omega) rho_eg, with
// the drive amplitude cancelled analytically so the weak-drive limit is
// exact. t = 1 + r.
std::complex<double> reflection(const RateSet& rates, const DriveSpec& drive);
std::complex<double> transmission(const RateSet& rates, const DriveSpec& drive);

// Weak-drive lineshape t = 1 + r0 (-1 + i x)/(1 + x^2), x = (w - Delta)/G2;
// this is the three-parameter model the fitter inverts.
std::complex<double> transmission_linear(double r0, double gamma2_ghz,
                                         double delta_ghz, double omega_ghz);

// r0 = Gamma1 / (2 Gamma2 (1 + 2 n_th)): on-resonance reflection depth.
double r0_coefficient(const RateSet& rates);

// On-resonance weak-drive transmission floor, identically 1 - r0.
double transmission_min(const RateSet& rates);

struct TraceParams {
  RateSet rates;
  double delta_ghz = 5.0;
  double rabi_ghz = 1e-4;
  double noise_sigma = 0.0;  // white noise added to Re t and Im t
  std::uint64_t seed = 0;
};

struct SpectrumTrace {
  std::vector<double> freq_ghz;
  std::vector<std::complex<double>> t;
  TraceParams params;
  // Gamma1/Delta beyond ~1.5 leaves the validity window of the rotating-wave
  // treatment behind these formulas; flagged, not fatal.
  bool rwa_strained = false;
};

SpectrumTrace generate_trace(const TraceParams& params,
                             const std::vector<double>& freq_ghz);

std::vector<double> linspace(double lo, double hi, int n);

// Fixed-step RK4 integration of the Bloch equations from the ground state,
// long enough to damp every transient. All four density matrix entries are
// integrated as independent complex numbers so trace and hermiticity drift
// are genuine checks, not built-in identities.
struct BlochIntegration {
  SteadyState state;
  double trace_drift = 0.0;
  double hermiticity_drift = 0.0;
  int steps = 0;
};
BlochIntegration integrate_bloch(const RateSet& rates, const DriveSpec& drive);

}  // namespace fluxline::scattering
