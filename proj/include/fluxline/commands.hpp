#pragma once

#include <string>
#include <vector>

#include "fluxline/config.hpp"

// Figure-level pipelines behind the CLI subcommands. Every command resolves
// into config.output_dir and writes CSV data, the resolved config, and a
// manifest.json recording tool version, config hash and seed. Logs go to
// stderr only; stdout stays clean for error JSON. Outputs are deterministic:
// the same config and seed produce byte-identical files.

namespace fluxline::cli {

struct CommandResult {
  std::vector<std::string> files;  // written, relative to output_dir
  std::string summary;             // one line, also logged to stderr
};

// Single flux point (the first point of the sweep grid); writes solve.csv
// with the same schema and values as a count=1 sweep.
CommandResult cmd_solve(const io::RunConfig& config);

// Qubit spectrum and coupling operator across the flux grid -> sweep.csv.
CommandResult cmd_sweep(const io::RunConfig& config);

// Frustrated bias points along the slaved flux line over one beta period,
// with consecutive spacings -> symmetry.csv; spacing stats in the manifest.
CommandResult cmd_symmetry(const io::RunConfig& config);

// Coupling pipeline at each symmetry point over one beta period: bare gap,
// phase element, Gamma1/Delta, spin-boson alpha and regime, dressed gap
// -> coupling.csv.
CommandResult cmd_coupling(const io::RunConfig& config);

// Synthetic transmission traces at every grid point, driven by the forward
// model (circuit -> coupling -> steady-state scattering), optional seeded
// noise -> trace_NNN.csv plus trace_NNN.csv.json sidecars.
CommandResult cmd_spectrum(const io::RunConfig& config);

// Fit transmission traces (freq_ghz, re_t, im_t columns; optional sidecar
// with flux point and mask) -> fits.csv with thermometry bounds.
CommandResult cmd_fit(const io::RunConfig& config,
                      const std::vector<std::string>& trace_files);

// End to end: sweep -> spectra -> fits -> closure.csv, then check that each
// fitted Gamma1 interval contains the forward-model Gamma1. A closure
// violation throws after all files are written.
CommandResult cmd_report(const io::RunConfig& config);

}  // namespace fluxline::cli
