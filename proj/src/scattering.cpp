#include "fluxline/scattering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fluxline::scattering {

using cplx = std::complex<double>;

double RateSet::gamma2_ghz() const {
  return gamma_phi_ghz + 0.5 * gamma1_ghz * (1.0 + 2.0 * n_th);
}

void RateSet::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  need(gamma1_ghz >= 0.0 && std::isfinite(gamma1_ghz),
       "scattering: gamma1 must be >= 0");
  need(gamma_phi_ghz >= 0.0 && std::isfinite(gamma_phi_ghz),
       "scattering: gamma_phi must be >= 0");
  need(n_th >= 0.0 && std::isfinite(n_th), "scattering: n_th must be >= 0");
}

namespace {

// Shared denominator of the steady state:
// N = G2 W^2 + G1 (G2^2 + d^2)(1 + 2n).
double steady_denominator(const RateSet& r, const DriveSpec& d) {
  const double g2 = r.gamma2_ghz();
  const double det = d.detuning_ghz();
  return g2 * d.rabi_ghz * d.rabi_ghz +
         r.gamma1_ghz * (g2 * g2 + det * det) * (1.0 + 2.0 * r.n_th);
}

void check_inputs(const RateSet& r, const DriveSpec& d) {
  r.validate();
  if (!(d.rabi_ghz >= 0.0) || !std::isfinite(d.rabi_ghz))
    throw std::invalid_argument("scattering: rabi amplitude must be >= 0");
  if (!std::isfinite(d.omega_ghz) || !std::isfinite(d.delta_ghz))
    throw std::invalid_argument("scattering: non-finite drive frequency");
}

}  // namespace

SteadyState steady_state(const RateSet& rates, const DriveSpec& drive) {
  check_inputs(rates, drive);
  const double N = steady_denominator(rates, drive);
  if (!(N > 0.0))
    throw std::invalid_argument(
        "scattering: no unique steady state (drive and decay both vanish)");

  const double g1 = rates.gamma1_ghz;
  const double g2 = rates.gamma2_ghz();
  const double det = drive.detuning_ghz();
  const double W = drive.rabi_ghz;
  const double occ = 1.0 + 2.0 * rates.n_th;

  SteadyState s;
  s.rho_ge = cplx(0.0, 0.5 * W) * g1 * cplx(g2, det) / N;
  s.rho_eg = std::conj(s.rho_ge);
  s.rho_ee = (rates.n_th + W * W * g2 / (2.0 * N)) / occ;
  s.rho_gg = 1.0 - s.rho_ee;
  return s;
}

std::complex<double> reflection(const RateSet& rates, const DriveSpec& drive) {
  check_inputs(rates, drive);
  const double N = steady_denominator(rates, drive);
  if (!(N > 0.0))
    throw std::invalid_argument(
        "scattering: no unique steady state (drive and decay both vanish)");
  // r = -i (G1/W) rho_eg; the drive amplitude cancels against rho_eg ~ W,
  // so evaluate the reduced form valid down to W = 0.
  const double g1 = rates.gamma1_ghz;
  const double g2 = rates.gamma2_ghz();
  const double det = drive.detuning_ghz();
  return -0.5 * g1 * g1 * cplx(g2, -det) / N;
}

std::complex<double> transmission(const RateSet& rates, const DriveSpec& drive) {
  return 1.0 + reflection(rates, drive);
}

std::complex<double> transmission_linear(double r0, double gamma2_ghz,
                                         double delta_ghz, double omega_ghz) {
  if (!(gamma2_ghz > 0.0))
    throw std::invalid_argument("scattering: gamma2 must be > 0");
  const double x = (omega_ghz - delta_ghz) / gamma2_ghz;
  return 1.0 + r0 * cplx(-1.0, x) / (1.0 + x * x);
}

double r0_coefficient(const RateSet& rates) {
  rates.validate();
  const double g2 = rates.gamma2_ghz();
  if (!(g2 > 0.0))
    throw std::invalid_argument("scattering: r0 undefined without decoherence");
  return rates.gamma1_ghz / (2.0 * g2 * (1.0 + 2.0 * rates.n_th));
}

double transmission_min(const RateSet& rates) { return 1.0 - r0_coefficient(rates); }

SpectrumTrace generate_trace(const TraceParams& params,
                             const std::vector<double>& freq_ghz) {
  params.rates.validate();
  if (!(params.delta_ghz > 0.0))
    throw std::invalid_argument("scattering: trace needs a positive qubit frequency");
  if (!(params.rabi_ghz >= 0.0))
    throw std::invalid_argument("scattering: rabi amplitude must be >= 0");
  if (!(params.noise_sigma >= 0.0))
    throw std::invalid_argument("scattering: noise sigma must be >= 0");
  if (freq_ghz.empty())
    throw std::invalid_argument("scattering: empty frequency grid");

  SpectrumTrace trace;
  trace.freq_ghz = freq_ghz;
  trace.params = params;
  trace.rwa_strained = params.rates.gamma1_ghz > 1.5 * params.delta_ghz;
  trace.t.reserve(freq_ghz.size());

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double f : freq_ghz) {
    cplx t = transmission(params.rates, {f, params.delta_ghz, params.rabi_ghz});
    if (params.noise_sigma > 0.0) {
      const double dre = gauss(rng), dim = gauss(rng);
      t += params.noise_sigma * cplx(dre, dim);
    }
    trace.t.push_back(t);
  }
  return trace;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("scattering: linspace needs n >= 1");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = lo + step * i;
  v.back() = hi;
  return v;
}

BlochIntegration integrate_bloch(const RateSet& rates, const DriveSpec& drive) {
  check_inputs(rates, drive);
  const double g1 = rates.gamma1_ghz;
  const double g2 = rates.gamma2_ghz();
  const double nth = rates.n_th;
  const double det = drive.detuning_ghz();
  const double W = drive.rabi_ghz;

  const double rate_up = g1 * nth;
  const double rate_down = g1 * (1.0 + nth);

  // Population relaxation goes at g1(1+2n), coherence at g2; the slowest
  // nonzero one sets the horizon, the fastest scale sets the step.
  double slow = 0.0;
  for (double r : {g1 * (1.0 + 2.0 * nth), g2})
    if (r > 0.0) slow = (slow == 0.0) ? r : std::min(slow, r);
  if (slow == 0.0)
    throw std::invalid_argument("scattering: nothing decays; no steady state");
  const double fast = std::max({g1 * (1.0 + 2.0 * nth), g2, W, std::abs(det)});

  const double h = 1.0 / (200.0 * fast);
  const double horizon = 50.0 / slow;
  const long nsteps = static_cast<long>(std::ceil(horizon / h));
  if (nsteps > 200000000L)
    throw std::invalid_argument("scattering: rate spread too large to integrate");

  // State y = (rho_gg, rho_ge, rho_eg, rho_ee), all complex on purpose.
  using State = std::array<cplx, 4>;
  const cplx ihalfW(0.0, 0.5 * W);
  auto deriv = [&](const State& y) {
    const cplx coh = y[1] - y[2];  // rho_ge - rho_eg
    const cplx pop = y[0] - y[3];  // rho_gg - rho_ee
    State d;
    d[3] = -rate_down * y[3] + rate_up * y[0] - ihalfW * coh;
    d[0] = rate_down * y[3] - rate_up * y[0] + ihalfW * coh;
    d[2] = -cplx(g2, det) * y[2] - ihalfW * pop;
    d[1] = -cplx(g2, -det) * y[1] + ihalfW * pop;
    return d;
  };

  State y{cplx(1.0), cplx(0.0), cplx(0.0), cplx(0.0)};
  double trace_drift = 0.0, herm_drift = 0.0;
  const long check_stride = std::max(1L, nsteps / 1000);

  for (long step = 0; step < nsteps; ++step) {
    const State k1 = deriv(y);
    State y2;
    for (int i = 0; i < 4; ++i) y2[i] = y[i] + 0.5 * h * k1[i];
    const State k2 = deriv(y2);
    State y3;
    for (int i = 0; i < 4; ++i) y3[i] = y[i] + 0.5 * h * k2[i];
    const State k3 = deriv(y3);
    State y4;
    for (int i = 0; i < 4; ++i) y4[i] = y[i] + h * k3[i];
    const State k4 = deriv(y4);
    for (int i = 0; i < 4; ++i)
      y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    if (step % check_stride == 0 || step == nsteps - 1) {
      trace_drift = std::max(trace_drift, std::abs(y[0] + y[3] - 1.0));
      herm_drift = std::max(herm_drift, std::abs(y[1] - std::conj(y[2])));
    }
  }

  BlochIntegration out;
  out.state.rho_gg = y[0].real();
  out.state.rho_ee = y[3].real();
  out.state.rho_ge = y[1];
  out.state.rho_eg = y[2];
  out.trace_drift = trace_drift;
  out.hermiticity_drift = herm_drift;
  out.steps = static_cast<int>(nsteps);
  return out;
}

}  // namespace fluxline::scattering
