#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxline/circuit.hpp"
#include "fluxline/spinboson.hpp"

// Run configuration: INI-style text with sections mirroring the library
// types, layered over a named device preset. Anything not set in the file
// keeps the preset value, so a config only has to state what it changes.

namespace fluxline::io {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Default window brackets the frustration point at f_eps = 1/2 with the
// beta flux held at zero, where the qubit resonance stays inside the default
// drive grid. Slaved sweeps move both fluxes with one knob, like a single
// coil threading both loops: f_beta = f_eps / area_ratio + f_beta_offset.
struct SweepSpec {
  double f_eps_start = 0.497;
  double f_eps_stop = 0.503;
  int count = 41;
  bool slaved = false;
  double f_beta_offset = 0.0;
  double f_beta = 0.0;  // fixed beta flux when not slaved
};

struct DriveGrid {
  double rabi_ghz = 1e-4;
  double freq_start_ghz = 4.0;
  double freq_stop_ghz = 14.0;
  int freq_count = 801;
  double noise_sigma = 0.0;
};

struct RatesSpec {
  double gamma_phi_ghz = 0.017;  // nonthermal dephasing
  // Thermal occupation for generated traces: taken per point from the qubit
  // gap at temp_mk when temp_mk >= 0, otherwise the fixed n_th below.
  double temp_mk = 90.0;
  double n_th = 0.0;
};

struct FitWindow {
  std::optional<double> mask_lo_ghz;
  std::optional<double> mask_hi_ghz;
};

struct RunConfig {
  circuit::CircuitSpec device;
  spinboson::EnvironmentSpec environment;
  SweepSpec sweep;
  DriveGrid drive;
  RatesSpec rates;
  FitWindow fit;
  std::uint64_t seed = 1;
  int threads = 1;
  int eig_k = 4;
  std::string output_dir = "out";
  std::string preset = "tunable";

  std::vector<circuit::FluxPoint> flux_grid() const;
  void validate() const;  // throws ConfigError naming the bad key
};

// Built-in device presets:
//   tunable          beta SQUID r4=1, r5=2.6 (beta_eff 1.6..3.6), EJ 300 GHz
//   tunable-caption  same device, alternate junction labeling r4=2.6, r5=1,
//                    EJ 350 GHz
//   fixed-beta3.5    single effective beta junction 3.5, beta flux pinned
//   fixed-beta1.8    single effective beta junction 1.8, beta flux pinned
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

// Layer "key = value" pairs from INI text over a base configuration.
// Unknown sections or keys are errors naming the offending key path.
RunConfig parse_config(const std::string& text, const RunConfig& base);
RunConfig load_config_file(const std::string& path, const RunConfig& base);

// Preset requested inside config text ([device] preset = NAME), if any.
std::optional<std::string> preset_in_config(const std::string& text);

// Canonical resolved dump: parsing it back reproduces the config exactly,
// and its FNV-1a hash identifies the run in the manifest.
std::string dump_config(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);
std::string config_hash_hex(const RunConfig& config);

}  // namespace fluxline::io
