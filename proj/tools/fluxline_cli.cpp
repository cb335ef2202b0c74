// fluxq: flux qubit / waveguide pipelines. Data lands in --out as CSV plus a
// manifest; logs go to stderr; failures emit one JSON line on stdout.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluxline/commands.hpp"
#include "fluxline/config.hpp"
#include "fluxline/constants.hpp"
#include "fluxline/table_io.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<double> mask;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "INI config file")
      ->check(CLI::ExistingFile);
  std::string preset_help = "device preset (";
  for (const auto& name : fluxline::io::preset_names()) {
    if (preset_help.back() != '(') preset_help += ", ";
    preset_help += name;
  }
  preset_help += ")";
  cmd->add_option("--preset", flags.preset, preset_help);
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "noise seed");
  cmd->add_option("--threads", flags.threads, "worker threads for flux grids");
  cmd->add_option("--mask", flags.mask, "fit window LO,HI in GHz")
      ->delimiter(',')
      ->expected(2);
}

fluxline::io::RunConfig resolve(const CommonFlags& flags) {
  using fluxline::io::preset_config;
  std::string text;
  if (!flags.config_path.empty())
    text = fluxline::io::read_text_file(flags.config_path);

  std::string preset = "tunable";
  if (const auto fromfile = fluxline::io::preset_in_config(text))
    preset = *fromfile;
  if (!flags.preset.empty()) preset = flags.preset;  // flag wins

  auto config = preset_config(preset);
  if (!text.empty()) config = fluxline::io::parse_config(text, config);
  if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.threads) config.threads = *flags.threads;
  if (flags.mask.size() == 2) {
    config.fit.mask_lo_ghz = flags.mask[0];
    config.fit.mask_hi_ghz = flags.mask[1];
  }
  config.validate();
  return config;
}

void error_json(const char* type, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"type", type}, {"message", message}};
  std::cout << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flux qubit / waveguide simulation and analysis pipelines"};
  app.set_version_flag("--version", fluxline::constants::tool_version);
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<std::string> trace_files;

  auto* solve = app.add_subcommand("solve", "single flux point report");
  auto* sweep = app.add_subcommand("sweep", "qubit spectrum across the flux grid");
  auto* symmetry =
      app.add_subcommand("symmetry", "symmetry points over one beta period");
  auto* coupling = app.add_subcommand(
      "coupling", "coupling strength and spin-boson regime vs beta flux");
  auto* spectrum = app.add_subcommand(
      "spectrum", "synthetic transmission traces from the forward model");
  auto* fit = app.add_subcommand("fit", "fit transmission traces");
  auto* report = app.add_subcommand(
      "report", "sweep + spectra + fits + forward/inverse closure check");
  for (auto* cmd : {solve, sweep, symmetry, coupling, spectrum, fit, report})
    add_common(cmd, flags);
  fit->add_option("traces", trace_files, "trace CSV files (freq_ghz,re_t,im_t)")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) error_json("usage", e.what());
    return app.exit(e);
  }

  try {
    const auto config = resolve(flags);
    if (solve->parsed()) fluxline::cli::cmd_solve(config);
    if (sweep->parsed()) fluxline::cli::cmd_sweep(config);
    if (symmetry->parsed()) fluxline::cli::cmd_symmetry(config);
    if (coupling->parsed()) fluxline::cli::cmd_coupling(config);
    if (spectrum->parsed()) fluxline::cli::cmd_spectrum(config);
    if (fit->parsed()) fluxline::cli::cmd_fit(config, trace_files);
    if (report->parsed()) fluxline::cli::cmd_report(config);
    return 0;
  } catch (const fluxline::io::ConfigError& e) {
    std::cerr << "[fluxq] config error: " << e.what() << "\n";
    error_json("config", e.what());
    return 2;
  } catch (const fluxline::io::IoError& e) {
    std::cerr << "[fluxq] io error: " << e.what() << "\n";
    error_json("io", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "[fluxq] error: " << e.what() << "\n";
    error_json("internal", e.what());
    return 4;
  }
}
