#include "fluxline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fluxline/constants.hpp"
#include "fluxline/fitting.hpp"
#include "fluxline/scattering.hpp"
#include "fluxline/table_io.hpp"

namespace fluxline::cli {

namespace {

using io::fmt_g;
using io::RunConfig;
using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void log_line(const std::string& msg) { std::cerr << "[fluxq] " << msg << "\n"; }

std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.output_dir) / name).string();
}

void ensure_outdir(const RunConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec)
    throw io::IoError("cannot create output dir '" + c.output_dir +
                      "': " + ec.message());
}

// resolved.ini + manifest.json close out every command; the manifest holds
// only relative names and no timestamps so reruns stay byte-identical.
CommandResult finish(const RunConfig& c, const std::string& command,
                     std::vector<std::string> files, const json& extra,
                     const std::string& summary) {
  io::write_text_file(out_path(c, "resolved.ini"), io::dump_config(c));
  files.insert(files.begin(), "resolved.ini");
  json m;
  m["tool"] = "fluxq";
  m["version"] = constants::tool_version;
  m["command"] = command;
  m["preset"] = c.preset;
  m["seed"] = c.seed;
  m["config_hash"] = io::config_hash_hex(c);
  m["files"] = files;
  m["summary"] = extra;
  io::write_text_file(out_path(c, "manifest.json"), m.dump(2) + "\n");
  log_line(command + ": " + summary);
  return {std::move(files), summary};
}

double beta_eff(const circuit::CircuitSpec& d, double f_beta) {
  return std::abs(d.r4 + d.r5 * std::polar(1.0, 2.0 * constants::pi * f_beta));
}

std::vector<circuit::QubitSolution> solve_grid(
    const RunConfig& c, const std::vector<circuit::FluxPoint>& grid) {
  const int k = std::max(c.eig_k, 3);
  auto sols = circuit::sweep_gap(c.device, grid, k, c.threads);
  for (const auto& s : sols)
    if (!s.converged) {
      char buf[96];
      std::snprintf(buf, sizeof(buf),
                    "eigensolver did not converge at f_eps=%.6f f_beta=%.6f",
                    s.flux.f_eps, s.flux.f_beta);
      throw std::runtime_error(buf);
    }
  return sols;
}

const std::vector<std::string> kSweepHeader = {
    "f_eps", "f_beta", "E0_ghz", "E1_ghz", "E2_ghz",
    "gap0_ghz", "abs_phi_beta", "pauli_x", "pauli_y", "pauli_z"};

std::vector<std::string> solution_row(const circuit::QubitSolution& s) {
  return {fmt_g(s.flux.f_eps),
          fmt_g(s.flux.f_beta),
          fmt_g(s.energies_ghz[0]),
          fmt_g(s.energies_ghz[1]),
          fmt_g(s.energies_ghz[2]),
          fmt_g(s.gap0_ghz),
          fmt_g(std::abs(s.phi_beta_elem)),
          fmt_g(s.pauli.x),
          fmt_g(s.pauli.y),
          fmt_g(s.pauli.z)};
}

io::Table sweep_table(const std::vector<circuit::QubitSolution>& sols) {
  io::Table t;
  t.header = kSweepHeader;
  for (const auto& s : sols) t.rows.push_back(solution_row(s));
  return t;
}

// One generated trace plus the forward-model numbers behind it, kept for
// the closure check in cmd_report.
struct ForwardTrace {
  int index = 0;
  circuit::FluxPoint flux;
  spinboson::CouplingResult coupling;
  double n_th = 0.0;
  std::string csv_name;
  bool localized = false;
};

std::string trace_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trace_%03d.csv", index);
  return buf;
}

std::vector<ForwardTrace> spectrum_stage(
    const RunConfig& c, const std::vector<circuit::QubitSolution>& sols,
    std::vector<std::string>& files) {
  const auto freq =
      scattering::linspace(c.drive.freq_start_ghz, c.drive.freq_stop_ghz,
                           c.drive.freq_count);
  std::vector<ForwardTrace> traces;
  traces.reserve(sols.size());
  for (size_t i = 0; i < sols.size(); ++i) {
    const auto& sol = sols[i];
    ForwardTrace ft;
    ft.index = static_cast<int>(i);
    ft.flux = sol.flux;
    ft.coupling = spinboson::characterize(std::abs(sol.phi_beta_elem),
                                          sol.gap0_ghz, c.environment);
    if (ft.coupling.delta_ghz <= 0.0) {
      ft.localized = true;
      log_line("trace " + std::to_string(i) +
               ": localized point, no resonance to generate");
      traces.push_back(std::move(ft));
      continue;
    }
    ft.n_th = c.rates.temp_mk >= 0.0
                  ? fitting::bose_einstein(ft.coupling.delta_ghz, c.rates.temp_mk)
                  : c.rates.n_th;
    scattering::TraceParams params;
    params.rates = {ft.coupling.gamma1_ghz, c.rates.gamma_phi_ghz, ft.n_th};
    params.delta_ghz = ft.coupling.delta_ghz;
    params.rabi_ghz = c.drive.rabi_ghz;
    params.noise_sigma = c.drive.noise_sigma;
    params.seed = c.seed + i;
    const auto trace = scattering::generate_trace(params, freq);

    io::Table t;
    t.header = {"freq_ghz", "re_t", "im_t", "abs_t", "arg_t"};
    for (size_t k = 0; k < trace.freq_ghz.size(); ++k)
      t.rows.push_back({fmt_g(trace.freq_ghz[k]), fmt_g(trace.t[k].real()),
                        fmt_g(trace.t[k].imag()), fmt_g(std::abs(trace.t[k])),
                        fmt_g(std::arg(trace.t[k]))});
    ft.csv_name = trace_name(ft.index);
    io::write_csv(out_path(c, ft.csv_name), t);
    files.push_back(ft.csv_name);

    json side;
    side["flux"] = {{"f_eps", sol.flux.f_eps}, {"f_beta", sol.flux.f_beta}};
    side["forward"] = {{"gamma1_ghz", ft.coupling.gamma1_ghz},
                       {"gamma_phi_ghz", c.rates.gamma_phi_ghz},
                       {"n_th", ft.n_th},
                       {"delta_ghz", ft.coupling.delta_ghz},
                       {"gamma1_over_delta", ft.coupling.gamma1_over_delta},
                       {"alpha", ft.coupling.alpha},
                       {"regime", spinboson::regime_name(ft.coupling.regime)}};
    side["drive"] = {{"rabi_ghz", c.drive.rabi_ghz},
                     {"noise_sigma", c.drive.noise_sigma},
                     {"seed", params.seed}};
    side["rwa_strained"] = trace.rwa_strained;
    const std::string side_name = trace_name(ft.index) + ".json";
    io::write_text_file(out_path(c, side_name), side.dump(2) + "\n");
    files.push_back(side_name);
    traces.push_back(std::move(ft));
  }
  return traces;
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

const std::vector<std::string> kFitsHeader = {
    "flux_f_eps", "flux_f_beta", "r0", "r0_err", "gamma2_ghz", "gamma2_err",
    "delta_ghz", "delta_err", "n_max", "t_eff_mk", "gamma1_low_ghz",
    "gamma1_high_ghz", "flags"};

struct FitRow {
  std::vector<std::string> cells;
  fitting::FitResult fit;
  fitting::DerivedBounds bounds;
  bool bounds_ok = false;
};

FitRow fit_one_trace(const RunConfig& c, const std::string& csv_path) {
  const auto table = io::read_csv(csv_path);
  const auto freq = table.numeric("freq_ghz");
  const auto re = table.numeric("re_t");
  const auto im = table.numeric("im_t");
  std::vector<std::complex<double>> t(freq.size());
  for (size_t k = 0; k < freq.size(); ++k) t[k] = {re[k], im[k]};

  double f_eps = kNan, f_beta = kNan;
  fitting::FitOptions opts;
  opts.mask_lo_ghz = c.fit.mask_lo_ghz;
  opts.mask_hi_ghz = c.fit.mask_hi_ghz;
  const std::string side_path =
      std::filesystem::path(csv_path).string() + ".json";
  if (io::file_exists(side_path)) {
    json side;
    try {
      side = json::parse(io::read_text_file(side_path));
    } catch (const json::exception& ex) {
      throw io::IoError(side_path + ": " + ex.what());
    }
    if (side.contains("flux")) {
      f_eps = side["flux"].value("f_eps", kNan);
      f_beta = side["flux"].value("f_beta", kNan);
    }
    // config mask wins over the sidecar's suggestion
    if (side.contains("mask") && side["mask"].is_array() &&
        side["mask"].size() == 2 && !opts.mask_lo_ghz && !opts.mask_hi_ghz) {
      opts.mask_lo_ghz = side["mask"][0].get<double>();
      opts.mask_hi_ghz = side["mask"][1].get<double>();
    }
  }

  FitRow row;
  row.fit = fitting::fit_trace(freq, t, opts);
  auto flags = row.fit.flags;
  row.bounds_ok = row.fit.converged && row.fit.r0 > 0.0 &&
                  row.fit.r0 <= 1.0 && row.fit.delta_ghz > 0.0;
  if (row.bounds_ok)
    row.bounds = fitting::derive_bounds(row.fit);
  else
    flags.push_back("no_bounds");
  const auto& f = row.fit;
  const auto& b = row.bounds;
  row.cells = {fmt_g(f_eps),
               fmt_g(f_beta),
               fmt_g(f.r0),
               fmt_g(f.r0_err),
               fmt_g(f.gamma2_ghz),
               fmt_g(f.gamma2_err),
               fmt_g(f.delta_ghz),
               fmt_g(f.delta_err),
               fmt_g(row.bounds_ok ? b.n_max : kNan),
               fmt_g(row.bounds_ok ? b.t_eff_mk : kNan),
               fmt_g(row.bounds_ok ? b.gamma1_low_ghz : kNan),
               fmt_g(row.bounds_ok ? b.gamma1_high_ghz : kNan),
               join_flags(flags)};
  return row;
}

std::vector<FitRow> fit_stage(const RunConfig& c,
                              const std::vector<std::string>& csv_paths,
                              std::vector<std::string>& files) {
  io::Table t;
  t.header = kFitsHeader;
  std::vector<FitRow> rows;
  rows.reserve(csv_paths.size());
  for (const auto& path : csv_paths) {
    rows.push_back(fit_one_trace(c, path));
    t.rows.push_back(rows.back().cells);
  }
  io::write_csv(out_path(c, "fits.csv"), t);
  files.push_back("fits.csv");
  return rows;
}

std::vector<circuit::FluxPoint> symmetry_grid(const RunConfig& c) {
  // one full beta period: f_beta = f_eps/area_ratio covers [0,1] while
  // f_eps covers [0, area_ratio]
  auto pts = circuit::symmetry_points(c.device, 0.0, c.device.area_ratio,
                                      c.sweep.f_beta_offset);
  if (pts.size() < 2)
    throw std::runtime_error("fewer than two symmetry points in one period");
  return pts;
}

}  // namespace

CommandResult cmd_sweep(const RunConfig& config) {
  ensure_outdir(config);
  const auto grid = config.flux_grid();
  const auto sols = solve_grid(config, grid);
  io::write_csv(out_path(config, "sweep.csv"), sweep_table(sols));
  double lo = sols.front().gap0_ghz, hi = lo;
  for (const auto& s : sols) {
    lo = std::min(lo, s.gap0_ghz);
    hi = std::max(hi, s.gap0_ghz);
  }
  std::ostringstream os;
  os << sols.size() << " points, gap " << fmt_g(lo) << " to " << fmt_g(hi)
     << " GHz";
  return finish(config, "sweep", {"sweep.csv"},
                {{"points", sols.size()}, {"gap_min_ghz", lo}, {"gap_max_ghz", hi}},
                os.str());
}

CommandResult cmd_solve(const RunConfig& config) {
  ensure_outdir(config);
  const auto grid = config.flux_grid();
  const auto sols = solve_grid(config, {grid.front()});
  const auto& s = sols.front();
  io::write_csv(out_path(config, "solve.csv"), sweep_table(sols));
  std::ostringstream os;
  os << "f_eps=" << fmt_g(s.flux.f_eps) << " f_beta=" << fmt_g(s.flux.f_beta)
     << " gap0=" << fmt_g(s.gap0_ghz) << " GHz |phi_beta|="
     << fmt_g(std::abs(s.phi_beta_elem)) << " pauli=(" << fmt_g(s.pauli.x)
     << ", " << fmt_g(s.pauli.y) << ", " << fmt_g(s.pauli.z) << ")";
  return finish(config, "solve", {"solve.csv"},
                {{"gap0_ghz", s.gap0_ghz},
                 {"abs_phi_beta", std::abs(s.phi_beta_elem)}},
                os.str());
}

CommandResult cmd_symmetry(const RunConfig& config) {
  ensure_outdir(config);
  const auto pts = symmetry_grid(config);
  std::vector<double> spacing(pts.size(), kNan);
  double sp_min = 0.0, sp_max = 0.0, sp_sum = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    spacing[i] = pts[i].f_eps - pts[i - 1].f_eps;
    sp_min = i == 1 ? spacing[i] : std::min(sp_min, spacing[i]);
    sp_max = i == 1 ? spacing[i] : std::max(sp_max, spacing[i]);
    sp_sum += spacing[i];
  }
  const double sp_mean = sp_sum / double(pts.size() - 1);
  const double modulation = (sp_max - sp_min) / sp_mean;

  io::Table t;
  t.header = {"index", "f_eps", "f_beta", "beta_eff", "spacing"};
  for (size_t i = 0; i < pts.size(); ++i)
    t.rows.push_back({std::to_string(i), fmt_g(pts[i].f_eps),
                      fmt_g(pts[i].f_beta),
                      fmt_g(beta_eff(config.device, pts[i].f_beta)),
                      fmt_g(spacing[i])});
  io::write_csv(out_path(config, "symmetry.csv"), t);
  std::ostringstream os;
  os << pts.size() << " symmetry points, spacing modulation "
     << fmt_g(100.0 * modulation) << "%";
  return finish(config, "symmetry", {"symmetry.csv"},
                {{"points", pts.size()},
                 {"spacing_mean", sp_mean},
                 {"spacing_min", sp_min},
                 {"spacing_max", sp_max},
                 {"spacing_modulation", modulation}},
                os.str());
}

CommandResult cmd_coupling(const RunConfig& config) {
  ensure_outdir(config);
  const auto pts = symmetry_grid(config);
  const auto sols = solve_grid(config, pts);
  io::Table t;
  t.header = {"f_eps",  "f_beta", "beta_eff", "gap0_ghz",
              "abs_phi_beta", "gamma1_over_delta", "alpha", "regime",
              "lower_bound", "delta_renorm_ghz", "gamma1_ghz"};
  double ratio_min = 0.0, ratio_max = 0.0;
  for (size_t i = 0; i < sols.size(); ++i) {
    const auto& s = sols[i];
    const auto cp = spinboson::characterize(std::abs(s.phi_beta_elem),
                                            s.gap0_ghz, config.environment);
    ratio_min = i == 0 ? cp.gamma1_over_delta
                       : std::min(ratio_min, cp.gamma1_over_delta);
    ratio_max = i == 0 ? cp.gamma1_over_delta
                       : std::max(ratio_max, cp.gamma1_over_delta);
    t.rows.push_back({fmt_g(s.flux.f_eps), fmt_g(s.flux.f_beta),
                      fmt_g(beta_eff(config.device, s.flux.f_beta)),
                      fmt_g(s.gap0_ghz), fmt_g(std::abs(s.phi_beta_elem)),
                      fmt_g(cp.gamma1_over_delta), fmt_g(cp.alpha),
                      spinboson::regime_name(cp.regime),
                      cp.lower_bound ? "1" : "0", fmt_g(cp.delta_ghz),
                      fmt_g(cp.gamma1_ghz)});
  }
  io::write_csv(out_path(config, "coupling.csv"), t);
  std::ostringstream os;
  os << sols.size() << " symmetry points, gamma1/delta " << fmt_g(ratio_min)
     << " to " << fmt_g(ratio_max);
  return finish(config, "coupling", {"coupling.csv"},
                {{"points", sols.size()},
                 {"ratio_min", ratio_min},
                 {"ratio_max", ratio_max}},
                os.str());
}

CommandResult cmd_spectrum(const RunConfig& config) {
  ensure_outdir(config);
  const auto grid = config.flux_grid();
  const auto sols = solve_grid(config, grid);
  std::vector<std::string> files;
  const auto traces = spectrum_stage(config, sols, files);
  int generated = 0, localized = 0;
  for (const auto& ft : traces) (ft.localized ? localized : generated) += 1;
  std::ostringstream os;
  os << generated << " traces generated, " << localized << " localized points";
  return finish(config, "spectrum", std::move(files),
                {{"traces", generated}, {"localized", localized}}, os.str());
}

CommandResult cmd_fit(const RunConfig& config,
                      const std::vector<std::string>& trace_files) {
  if (trace_files.empty())
    throw io::ConfigError("fit: at least one trace file is required");
  ensure_outdir(config);
  std::vector<std::string> files;
  const auto rows = fit_stage(config, trace_files, files);
  int converged = 0;
  for (const auto& r : rows) converged += r.fit.converged;
  std::ostringstream os;
  os << converged << "/" << rows.size() << " fits converged";
  return finish(config, "fit", std::move(files),
                {{"traces", rows.size()}, {"converged", converged}}, os.str());
}

CommandResult cmd_report(const RunConfig& config) {
  ensure_outdir(config);
  const auto grid = config.flux_grid();
  const auto sols = solve_grid(config, grid);
  std::vector<std::string> files;
  io::write_csv(out_path(config, "sweep.csv"), sweep_table(sols));
  files.push_back("sweep.csv");

  const auto traces = spectrum_stage(config, sols, files);
  std::vector<std::string> csv_paths;
  for (const auto& ft : traces)
    if (!ft.localized) csv_paths.push_back(out_path(config, ft.csv_name));
  if (csv_paths.empty())
    throw std::runtime_error("report: every grid point is localized, nothing to fit");
  const auto fits = fit_stage(config, csv_paths, files);

  // Closure: the thermometry interval derived from each fitted trace must
  // contain the Gamma1 the forward model used to generate that trace.
  io::Table t;
  t.header = {"index", "f_eps", "f_beta", "gamma1_forward_ghz",
              "gamma1_low_ghz", "gamma1_high_ghz", "contained"};
  int violations = 0;
  size_t row = 0;
  for (const auto& ft : traces) {
    if (ft.localized) continue;
    const auto& fr = fits[row++];
    const double g1 = ft.coupling.gamma1_ghz;
    bool ok = fr.bounds_ok;
    if (ok) {
      // tiny relative slack: the generator can sit exactly on an endpoint
      const double lo = fr.bounds.gamma1_low_ghz * (1.0 - 1e-6);
      const double hi = fr.bounds.gamma1_high_ghz * (1.0 + 1e-6);
      ok = g1 >= lo && g1 <= hi;
    }
    violations += !ok;
    t.rows.push_back({std::to_string(ft.index), fmt_g(ft.flux.f_eps),
                      fmt_g(ft.flux.f_beta), fmt_g(g1),
                      fmt_g(fr.bounds_ok ? fr.bounds.gamma1_low_ghz : kNan),
                      fmt_g(fr.bounds_ok ? fr.bounds.gamma1_high_ghz : kNan),
                      ok ? "1" : "0"});
  }
  io::write_csv(out_path(config, "closure.csv"), t);
  files.push_back("closure.csv");

  std::ostringstream os;
  os << t.rows.size() - violations << "/" << t.rows.size()
     << " flux points closed (forward gamma1 inside fitted bounds)";
  auto result = finish(config, "report", std::move(files),
                       {{"flux_points", grid.size()},
                        {"traces", csv_paths.size()},
                        {"closure_checked", t.rows.size()},
                        {"closure_violations", violations}},
                       os.str());
  if (violations > 0)
    throw std::runtime_error("report: closure violated at " +
                             std::to_string(violations) + " of " +
                             std::to_string(t.rows.size()) + " flux points");
  return result;
}

}  // namespace fluxline::cli
