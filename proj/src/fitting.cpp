#include "fluxline/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fluxline/constants.hpp"

namespace fluxline::fitting {

namespace {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;
using cplx = std::complex<double>;

struct Params {
  double r0;
  double gamma2;
  double delta;
};

// Internal coordinates: theta = (logit r0, log gamma2, delta). Every theta
// maps to a physical parameter set, so LM steps need no clipping.
Vector3d to_theta(const Params& p) {
  return {std::log(p.r0 / (1.0 - p.r0)), std::log(p.gamma2), p.delta};
}

Params from_theta(const Vector3d& th) {
  return {1.0 / (1.0 + std::exp(-th[0])), std::exp(th[1]), th[2]};
}

// Residuals f (Re, Im interleaved) and, when requested, the Jacobian in
// theta space and in physical space. Physical columns: d t/d r0 = u,
// d t/d gamma2 = -x/g2 dt/dx, d t/d delta = -1/g2 dt/dx with
// u = (-1+ix)/(1+x^2) and dt/dx = r0 (2x + i(1-x^2))/(1+x^2)^2.
void residuals(const std::vector<double>& freq, const std::vector<cplx>& data,
               const Params& p, VectorXd& f, MatrixXd* jac_theta,
               MatrixXd* jac_phys) {
  const auto n = static_cast<Eigen::Index>(freq.size());
  f.resize(2 * n);
  if (jac_theta) jac_theta->resize(2 * n, 3);
  if (jac_phys) jac_phys->resize(2 * n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = (freq[k] - p.delta) / p.gamma2;
    const double den = 1.0 + x * x;
    const cplx u(-1.0 / den, x / den);
    const cplx t = 1.0 + p.r0 * u;
    f[2 * k] = t.real() - data[k].real();
    f[2 * k + 1] = t.imag() - data[k].imag();
    if (!jac_theta && !jac_phys) continue;
    const cplx dt_dx = p.r0 * cplx(2.0 * x, 1.0 - x * x) / (den * den);
    const cplx d_r0 = u;
    const cplx d_g2 = dt_dx * (-x / p.gamma2);
    const cplx d_de = dt_dx * (-1.0 / p.gamma2);
    if (jac_phys) {
      (*jac_phys)(2 * k, 0) = d_r0.real();
      (*jac_phys)(2 * k + 1, 0) = d_r0.imag();
      (*jac_phys)(2 * k, 1) = d_g2.real();
      (*jac_phys)(2 * k + 1, 1) = d_g2.imag();
      (*jac_phys)(2 * k, 2) = d_de.real();
      (*jac_phys)(2 * k + 1, 2) = d_de.imag();
    }
    if (jac_theta) {
      const cplx c0 = d_r0 * p.r0 * (1.0 - p.r0);  // logistic chain rule
      const cplx c1 = d_g2 * p.gamma2;             // log chain rule
      (*jac_theta)(2 * k, 0) = c0.real();
      (*jac_theta)(2 * k + 1, 0) = c0.imag();
      (*jac_theta)(2 * k, 1) = c1.real();
      (*jac_theta)(2 * k + 1, 1) = c1.imag();
      (*jac_theta)(2 * k, 2) = d_de.real();
      (*jac_theta)(2 * k + 1, 2) = d_de.imag();
    }
  }
}

void add_flag(FitResult& r, const char* f) {
  if (!r.has_flag(f)) r.flags.emplace_back(f);
}

Params initial_guess(const std::vector<double>& freq, const std::vector<cplx>& data,
                     FitResult& result) {
  const size_t n = freq.size();
  size_t imin = 0;
  for (size_t k = 1; k < n; ++k)
    if (std::abs(data[k]) < std::abs(data[imin])) imin = k;
  const double depth = 1.0 - std::abs(data[imin]);
  if (depth < 1e-3) add_flag(result, "no_resonance");
  if (imin == 0 || imin == n - 1) add_flag(result, "resonance_at_mask_edge");

  // Half width of the dip in |t|; for shallow dips this is gamma2 itself.
  const double half = std::max(depth, 1e-3) / 2.0;
  double wl = 0.0, wr = 0.0;
  for (size_t k = imin + 1; k < n; ++k)
    if (1.0 - std::abs(data[k]) < half) {
      wr = freq[k] - freq[imin];
      break;
    }
  for (size_t k = imin; k-- > 0;)
    if (1.0 - std::abs(data[k]) < half) {
      wl = freq[imin] - freq[k];
      break;
    }
  double width = 0.0;
  int sides = 0;
  if (wl > 0.0) width += wl, ++sides;
  if (wr > 0.0) width += wr, ++sides;
  width = sides ? width / sides : (freq.back() - freq.front()) / 10.0;
  const double min_width = (freq.back() - freq.front()) / (4.0 * double(n));
  return {std::clamp(depth, 1e-3, 0.999), std::max(width, min_width), freq[imin]};
}

}  // namespace

bool FitResult::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

FitResult fit_trace(const std::vector<double>& freq_ghz,
                    const std::vector<cplx>& t, const FitOptions& opts) {
  if (freq_ghz.size() != t.size())
    throw std::invalid_argument("fit: freq and t length mismatch");

  FitResult result;

  // Mask, drop non-finite samples, sort by frequency.
  std::vector<size_t> order;
  order.reserve(freq_ghz.size());
  for (size_t k = 0; k < freq_ghz.size(); ++k) {
    const double f = freq_ghz[k];
    if (!std::isfinite(f) || !std::isfinite(t[k].real()) ||
        !std::isfinite(t[k].imag())) {
      add_flag(result, "dropped_nonfinite");
      continue;
    }
    if (opts.mask_lo_ghz && f < *opts.mask_lo_ghz) continue;
    if (opts.mask_hi_ghz && f > *opts.mask_hi_ghz) continue;
    order.push_back(k);
  }
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return freq_ghz[a] < freq_ghz[b]; });

  std::vector<double> freq(order.size());
  std::vector<cplx> data(order.size());
  for (size_t k = 0; k < order.size(); ++k) {
    freq[k] = freq_ghz[order[k]];
    data[k] = t[order[k]];
  }
  result.points_used = static_cast<int>(freq.size());
  if (freq.size() < 4) {
    add_flag(result, "too_few_points");
    return result;
  }

  Params p = initial_guess(freq, data, result);
  Vector3d theta = to_theta(p);

  VectorXd f;
  MatrixXd J;
  residuals(freq, data, p, f, &J, nullptr);
  double rss = f.squaredNorm();

  double lambda = 1e-3;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    const Matrix3d jtj = J.transpose() * J;
    const Vector3d jtf = J.transpose() * f;
    Matrix3d damped = jtj;
    for (int i = 0; i < 3; ++i)
      damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
    const Vector3d step = damped.ldlt().solve(-jtf);
    if (!step.allFinite()) {
      lambda = std::min(lambda * 4.0, 1e12);
      continue;
    }
    const Vector3d theta_try = theta + step;
    const Params p_try = from_theta(theta_try);
    VectorXd f_try;
    residuals(freq, data, p_try, f_try, nullptr, nullptr);
    const double rss_try = f_try.squaredNorm();

    // With mild damping a tiny step means the model optimum is within
    // tolerance of the current point. Checked before accept/reject: at a
    // noisy optimum the rss improvement drops below rounding granularity
    // and every step would be rejected even though the fit is done.
    if (lambda <= 1.0 &&
        step.norm() <= opts.rel_step_tol * (theta.norm() + opts.rel_step_tol)) {
      if (rss_try < rss) {
        theta = theta_try;
        p = p_try;
        rss = rss_try;
      }
      result.converged = true;
      ++iter;
      break;
    }
    if (rss_try < rss) {
      theta = theta_try;
      p = p_try;
      f = std::move(f_try);
      rss = rss_try;
      residuals(freq, data, p, f, &J, nullptr);
      lambda = std::max(lambda * 0.3, 1e-12);
    } else {
      if (lambda >= 1e12) break;  // stuck against the damping cap
      lambda *= 4.0;
    }
  }
  if (!result.converged) add_flag(result, "not_converged");

  result.r0 = p.r0;
  result.gamma2_ghz = p.gamma2;
  result.delta_ghz = p.delta;
  result.rss = rss;
  result.iterations = iter;

  // Parameter errors from the Gauss-Newton covariance in physical units.
  MatrixXd jp;
  residuals(freq, data, p, f, nullptr, &jp);
  const Matrix3d a = jp.transpose() * jp;
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(a);
  const double dof = 2.0 * double(freq.size()) - 3.0;
  const double sigma2 = rss / dof;
  if (es.eigenvalues()[0] <= 1e-12 * std::abs(es.eigenvalues()[2])) {
    add_flag(result, "degenerate_jacobian");
    constexpr double inf = std::numeric_limits<double>::infinity();
    result.r0_err = result.gamma2_err = result.delta_err = inf;
  } else {
    const Matrix3d cov = sigma2 * a.inverse();
    result.r0_err = std::sqrt(cov(0, 0));
    result.gamma2_err = std::sqrt(cov(1, 1));
    result.delta_err = std::sqrt(cov(2, 2));
  }
  return result;
}

std::vector<FitResult> batch_fit(const std::vector<Trace>& traces,
                                 const FitOptions& opts) {
  std::vector<FitResult> out;
  out.reserve(traces.size());
  for (const auto& trace : traces) {
    try {
      out.push_back(fit_trace(trace.freq_ghz, trace.t, opts));
    } catch (const std::exception&) {
      FitResult bad;
      bad.flags.emplace_back("invalid_trace");
      out.push_back(std::move(bad));
    }
  }
  return out;
}

DerivedBounds derive_bounds(double r0, double gamma2_ghz, double delta_ghz) {
  if (!(r0 > 0.0) || r0 > 1.0)
    throw std::invalid_argument("bounds: r0 must be in (0, 1]");
  if (!(gamma2_ghz > 0.0))
    throw std::invalid_argument("bounds: gamma2 must be > 0");
  DerivedBounds b;
  const double root = std::sqrt(r0);
  b.n_max = 0.5 * (1.0 / root - 1.0);
  b.gamma1_low_ghz = 2.0 * gamma2_ghz * r0;
  b.gamma1_high_ghz = 2.0 * gamma2_ghz * root;
  b.t_eff_mk = effective_temperature(delta_ghz, b.n_max);
  return b;
}

DerivedBounds derive_bounds(const FitResult& fit) {
  return derive_bounds(fit.r0, fit.gamma2_ghz, fit.delta_ghz);
}

double bose_einstein(double freq_ghz, double temp_mk) {
  if (!(freq_ghz > 0.0)) throw std::invalid_argument("bose: freq must be > 0");
  if (temp_mk < 0.0) throw std::invalid_argument("bose: negative temperature");
  if (temp_mk == 0.0) return 0.0;
  const double x = constants::h_planck * freq_ghz * 1e9 /
                   (constants::k_boltzmann * temp_mk * 1e-3);
  return 1.0 / std::expm1(x);
}

double effective_temperature(double freq_ghz, double n_bar) {
  if (!(freq_ghz > 0.0)) throw std::invalid_argument("temp: freq must be > 0");
  if (n_bar < 0.0) throw std::invalid_argument("temp: negative occupation");
  if (n_bar == 0.0) return 0.0;
  const double x = std::log1p(1.0 / n_bar);
  return constants::h_planck * freq_ghz * 1e9 /
         (constants::k_boltzmann * x) * 1e3;
}

double dephasing_from_fit(double gamma2_ghz, double r0, double n_bar) {
  if (!(gamma2_ghz > 0.0))
    throw std::invalid_argument("dephasing: gamma2 must be > 0");
  const double occ = 1.0 + 2.0 * n_bar;
  return gamma2_ghz * (1.0 - r0 * occ * occ);
}

}  // namespace fluxline::fitting
