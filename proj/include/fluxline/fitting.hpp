#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

// Resonance fits for weak-drive transmission traces and the thermometry
// bounds that follow from the fitted dip depth alone.

namespace fluxline::fitting {

struct FitOptions {
  // When set, only points with mask_lo <= f <= mask_hi enter the fit.
  std::optional<double> mask_lo_ghz;
  std::optional<double> mask_hi_ghz;
  int max_iterations = 200;
  double rel_step_tol = 1e-10;
};

struct FitResult {
  double r0 = 0.0;
  double r0_err = 0.0;
  double gamma2_ghz = 0.0;
  double gamma2_err = 0.0;
  double delta_ghz = 0.0;
  double delta_err = 0.0;
  double rss = 0.0;  // sum of squared residuals over both quadratures
  int points_used = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const;
};

// Levenberg-Marquardt fit of t(w) = 1 + r0 (-1 + ix)/(1 + x^2),
// x = (w - delta)/gamma2, to the complex trace. Re and Im enter as
// independent residuals with equal weight. Internally r0 is fit through a
// logistic transform (pinned to (0,1)) and gamma2 through a log transform,
// so no step can leave the physical domain; errors are quoted for the
// untransformed parameters from the Gauss-Newton covariance at the optimum.
// Data flaws are reported through FitResult::flags, not exceptions:
//   no_resonance             dip depth below 1e-3
//   resonance_at_mask_edge   the minimum of |t| sits on the first/last point
//   too_few_points           fewer than 4 usable points, fit skipped
//   dropped_nonfinite        non-finite samples were removed
//   not_converged            iteration cap hit before the step tolerance
//   degenerate_jacobian      errors not estimable (quoted as inf)
FitResult fit_trace(const std::vector<double>& freq_ghz,
                    const std::vector<std::complex<double>>& t,
                    const FitOptions& opts = {});

struct Trace {
  std::vector<double> freq_ghz;
  std::vector<std::complex<double>> t;
};

// Per-trace failures land in flags; the output always lines up index by
// index with the input.
std::vector<FitResult> batch_fit(const std::vector<Trace>& traces,
                                 const FitOptions& opts = {});

// One complex trace cannot separate gamma1, gamma_phi and n_th, but
// gamma2 >= gamma1 (1 + 2n)/2 pins them from the dip depth alone:
//   r0 <= 1/(1+2n)^2         =>  n <= n_max = (1/sqrt(r0) - 1)/2
//   gamma1 = 2 g2 r0 (1+2n)  =>  2 g2 r0 < gamma1 <= 2 g2 sqrt(r0)
// t_eff_mk is the temperature at which a mode at the fitted resonance
// holds n_max thermal photons, i.e. the hottest line consistent with the
// dip. The gamma1 range collapses onto the upper endpoint exactly when
// pure dephasing vanishes.
struct DerivedBounds {
  double n_max = 0.0;
  double gamma1_low_ghz = 0.0;
  double gamma1_high_ghz = 0.0;
  double t_eff_mk = 0.0;
};

DerivedBounds derive_bounds(double r0, double gamma2_ghz, double delta_ghz);
DerivedBounds derive_bounds(const FitResult& fit);

// Thermal occupation of a mode at freq_ghz coupled to a bath at temp_mk,
// and the inverse map. temp_mk = 0 is the exact n = 0 limit.
double bose_einstein(double freq_ghz, double temp_mk);
double effective_temperature(double freq_ghz, double n_bar);

// Pure dephasing implied by a fitted dip once the thermal occupation is
// known independently: gamma_phi = gamma2 (1 - r0 (1 + 2n)^2). Negative
// output means the assumed n_bar exceeds what the dip allows.
double dephasing_from_fit(double gamma2_ghz, double r0, double n_bar);

}  // namespace fluxline::fitting
