#include "fluxline/spinboson.hpp"

#include <cmath>
#include <stdexcept>

#include "fluxline/constants.hpp"

namespace fluxline::spinboson {

using constants::pi;

void EnvironmentSpec::validate() const {
  if (!(z0_ohm > 0.0)) throw std::invalid_argument("environment: z0_ohm must be > 0");
  if (!(cutoff_ghz > 0.0))
    throw std::invalid_argument("environment: cutoff_ghz must be > 0");
  if (!(p_const > 0.0)) throw std::invalid_argument("environment: p_const must be > 0");
}

double coupling_ratio(double abs_phi_elem, double z0_ohm) {
  if (!(z0_ohm > 0.0)) throw std::invalid_argument("environment: z0_ohm must be > 0");
  return constants::r_quantum_ohm / (2.0 * pi * z0_ohm) * abs_phi_elem * abs_phi_elem;
}

double alpha_from_ratio(double gamma1_over_delta) {
  if (gamma1_over_delta < 0.0)
    throw std::invalid_argument("spinboson: negative Gamma1/Delta");
  return gamma1_over_delta / pi;
}

double ratio_from_alpha(double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("spinboson: negative alpha");
  return pi * alpha;
}

double spectral_density(double omega_ghz, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("spinboson: negative alpha");
  if (omega_ghz < 0.0) throw std::invalid_argument("spinboson: negative frequency");
  return pi * alpha * omega_ghz;
}

double gamma1_ghz(double delta_ghz, double alpha) {
  return spectral_density(delta_ghz, alpha);
}

double renormalize_gap(double delta0_ghz, double alpha, const EnvironmentSpec& env,
                       bool self_consistent) {
  env.validate();
  if (!(delta0_ghz > 0.0))
    throw std::invalid_argument("spinboson: delta0 must be > 0");
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("spinboson: renormalization needs 0 <= alpha < 1");
  if (alpha == 0.0) return delta0_ghz;

  const double expo = alpha / (1.0 - alpha);
  const double scale = env.p_const / env.cutoff_ghz;
  if (!self_consistent) return delta0_ghz * std::pow(scale * delta0_ghz, expo);

  double x = delta0_ghz;
  for (int it = 0; it < 100; ++it) {
    const double next = delta0_ghz * std::pow(scale * x, expo);
    if (std::abs(next - x) <= 1e-10 * std::max(x, 1e-300)) return next;
    x = next;
    if (x < 1e-300) return 0.0;  // collapsed to the localized fixed point
  }
  return x;
}

Regime classify_regime(double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("spinboson: negative alpha");
  if (alpha < 0.5) return Regime::underdamped;
  if (alpha < 1.0) return Regime::overdamped;
  return Regime::localized;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::underdamped: return "underdamped";
    case Regime::overdamped: return "overdamped";
    case Regime::localized: return "localized";
  }
  return "unknown";
}

bool is_lower_bound(double alpha) { return alpha > 0.5; }

CouplingResult characterize(double abs_phi_elem, double delta0_ghz,
                            const EnvironmentSpec& env, bool self_consistent) {
  env.validate();
  CouplingResult out;
  out.abs_phi_elem = abs_phi_elem;
  out.gamma1_over_delta = coupling_ratio(abs_phi_elem, env.z0_ohm);
  out.alpha = alpha_from_ratio(out.gamma1_over_delta);
  out.regime = classify_regime(out.alpha);
  out.lower_bound = is_lower_bound(out.alpha);
  out.delta0_ghz = delta0_ghz;
  out.delta_ghz = (out.regime == Regime::localized)
                      ? 0.0
                      : renormalize_gap(delta0_ghz, out.alpha, env, self_consistent);
  // The ratio is frequency-free, so the rate follows whichever gap survives
  // dressing; for a localized spectrum quote the rate at the bare gap.
  const double f = (out.delta_ghz > 0.0) ? out.delta_ghz : delta0_ghz;
  out.gamma1_ghz = out.gamma1_over_delta * f;
  return out;
}

GapSensitivity gap_flux_sensitivity(const circuit::CircuitSpec& spec,
                                    circuit::FluxPoint flux, double step,
                                    const linalg::LanczosOptions& opts) {
  if (!(step > 0.0)) throw std::invalid_argument("spinboson: step must be > 0");
  auto gap = [&](circuit::FluxPoint fp) {
    return circuit::solve_point(spec, fp, 2, opts).gap0_ghz;
  };
  GapSensitivity out;
  out.d_feps_ghz = (gap({flux.f_eps + step, flux.f_beta}) -
                    gap({flux.f_eps - step, flux.f_beta})) /
                   (2.0 * step);
  out.d_fbeta_ghz = (gap({flux.f_eps, flux.f_beta + step}) -
                     gap({flux.f_eps, flux.f_beta - step})) /
                    (2.0 * step);
  return out;
}

}  // namespace fluxline::spinboson
