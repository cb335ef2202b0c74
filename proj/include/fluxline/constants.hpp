#pragma once

namespace fluxline::constants {

// SI defined values (2019 redefinition), exact.
inline constexpr double h_planck = 6.62607015e-34;   // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K

// Superconducting resistance quantum h/(2e)^2, rounded to the value used
// throughout the coupling formulas (Ohm). Kept as a module constant so the
// Gamma1/Delta <-> |phi_beta|^2 conversion is reproducible to the digit.
inline constexpr double r_quantum_ohm = 6500.0;

inline constexpr double pi = 3.14159265358979323846;

inline constexpr const char* tool_version = "0.1.0";

}  // namespace fluxline::constants
