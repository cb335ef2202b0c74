#include "fluxline/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "fluxline/table_io.hpp"

namespace fluxline::io {

namespace {

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  size_t line;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<IniEntry> parse_ini(const std::string& text) {
  std::vector<IniEntry> entries;
  std::istringstream is(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // strip comments: # or ; at line start or after whitespace
    for (size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') &&
          (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    IniEntry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = lineno;
    if (e.key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

[[noreturn]] void bad_value(const IniEntry& e, const char* want) {
  throw ConfigError("config line " + std::to_string(e.line) + ": " + e.section +
                    "." + e.key + ": expected " + want + ", got '" + e.value + "'");
}

double to_double(const IniEntry& e) {
  try {
    size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) bad_value(e, "a number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(e, "a number");
  }
}

long long to_int(const IniEntry& e) {
  try {
    size_t used = 0;
    const long long v = std::stoll(e.value, &used);
    if (used != e.value.size()) bad_value(e, "an integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(e, "an integer");
  }
}

std::uint64_t to_u64(const IniEntry& e) {
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(e.value, &used);
    if (used != e.value.size()) bad_value(e, "an unsigned integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(e, "an unsigned integer");
  }
}

void apply_entry(RunConfig& c, const IniEntry& e) {
  const std::string path = e.section + "." + e.key;
  auto& d = c.device;
  if (path == "device.preset") return;  // resolved before layering
  if (path == "device.r1") { d.r1 = to_double(e); return; }
  if (path == "device.r2") { d.r2 = to_double(e); return; }
  if (path == "device.r3") { d.r3 = to_double(e); return; }
  if (path == "device.r4") { d.r4 = to_double(e); return; }
  if (path == "device.r5") { d.r5 = to_double(e); return; }
  if (path == "device.ej_ghz") { d.ej_ghz = to_double(e); return; }
  if (path == "device.ec_ghz") { d.ec_ghz = to_double(e); return; }
  if (path == "device.area_ratio") { d.area_ratio = to_double(e); return; }
  if (path == "device.n_trunc") { d.n_trunc = static_cast<int>(to_int(e)); return; }
  if (path == "environment.z0_ohm") { c.environment.z0_ohm = to_double(e); return; }
  if (path == "environment.cutoff_ghz") { c.environment.cutoff_ghz = to_double(e); return; }
  if (path == "environment.p_const") { c.environment.p_const = to_double(e); return; }
  if (path == "sweep.f_eps_start") { c.sweep.f_eps_start = to_double(e); return; }
  if (path == "sweep.f_eps_stop") { c.sweep.f_eps_stop = to_double(e); return; }
  if (path == "sweep.count") { c.sweep.count = static_cast<int>(to_int(e)); return; }
  if (path == "sweep.slaving") {
    if (e.value == "area") c.sweep.slaved = true;
    else if (e.value == "none") c.sweep.slaved = false;
    else bad_value(e, "'area' or 'none'");
    return;
  }
  if (path == "sweep.f_beta_offset") { c.sweep.f_beta_offset = to_double(e); return; }
  if (path == "sweep.f_beta") { c.sweep.f_beta = to_double(e); return; }
  if (path == "drive.rabi_ghz") { c.drive.rabi_ghz = to_double(e); return; }
  if (path == "drive.freq_start_ghz") { c.drive.freq_start_ghz = to_double(e); return; }
  if (path == "drive.freq_stop_ghz") { c.drive.freq_stop_ghz = to_double(e); return; }
  if (path == "drive.freq_count") { c.drive.freq_count = static_cast<int>(to_int(e)); return; }
  if (path == "drive.noise_sigma") { c.drive.noise_sigma = to_double(e); return; }
  if (path == "rates.gamma_phi_ghz") { c.rates.gamma_phi_ghz = to_double(e); return; }
  if (path == "rates.temp_mk") { c.rates.temp_mk = to_double(e); return; }
  if (path == "rates.n_th") { c.rates.n_th = to_double(e); return; }
  if (path == "fit.mask_lo_ghz") {
    if (e.value == "none") c.fit.mask_lo_ghz.reset();
    else c.fit.mask_lo_ghz = to_double(e);
    return;
  }
  if (path == "fit.mask_hi_ghz") {
    if (e.value == "none") c.fit.mask_hi_ghz.reset();
    else c.fit.mask_hi_ghz = to_double(e);
    return;
  }
  if (path == "run.seed") { c.seed = to_u64(e); return; }
  if (path == "run.threads") { c.threads = static_cast<int>(to_int(e)); return; }
  if (path == "run.eig_k") { c.eig_k = static_cast<int>(to_int(e)); return; }
  if (path == "output.dir") { c.output_dir = e.value; return; }
  throw ConfigError("config line " + std::to_string(e.line) +
                    ": unknown key: " + path);
}

// Shortest representation that parses back to the same double, so a dumped
// config reloads bit-exact and the hash is representation independent.
std::string fmt_exact(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<circuit::FluxPoint> RunConfig::flux_grid() const {
  std::vector<circuit::FluxPoint> grid;
  grid.reserve(sweep.count);
  for (int i = 0; i < sweep.count; ++i) {
    const double u = sweep.count == 1 ? 0.0 : double(i) / double(sweep.count - 1);
    const double fe = sweep.f_eps_start + u * (sweep.f_eps_stop - sweep.f_eps_start);
    const double fb = sweep.slaved
                          ? fe / device.area_ratio + sweep.f_beta_offset
                          : sweep.f_beta;
    grid.push_back({fe, fb});
  }
  return grid;
}

void RunConfig::validate() const {
  try {
    device.validate();
    environment.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(ex.what());
  }
  if (sweep.count < 1) throw ConfigError("sweep.count: must be >= 1");
  if (!std::isfinite(sweep.f_eps_start) || !std::isfinite(sweep.f_eps_stop))
    throw ConfigError("sweep: flux bounds must be finite");
  if (drive.freq_count < 2) throw ConfigError("drive.freq_count: must be >= 2");
  if (!(drive.freq_stop_ghz > drive.freq_start_ghz))
    throw ConfigError("drive: freq_stop_ghz must exceed freq_start_ghz");
  if (drive.rabi_ghz < 0) throw ConfigError("drive.rabi_ghz: must be >= 0");
  if (drive.noise_sigma < 0) throw ConfigError("drive.noise_sigma: must be >= 0");
  if (rates.gamma_phi_ghz < 0) throw ConfigError("rates.gamma_phi_ghz: must be >= 0");
  if (rates.n_th < 0) throw ConfigError("rates.n_th: must be >= 0");
  if (fit.mask_lo_ghz && fit.mask_hi_ghz && !(*fit.mask_lo_ghz < *fit.mask_hi_ghz))
    throw ConfigError("fit: mask_lo_ghz must be below mask_hi_ghz");
  if (threads < 1) throw ConfigError("run.threads: must be >= 1");
  if (eig_k < 2) throw ConfigError("run.eig_k: must be >= 2");
  if (output_dir.empty()) throw ConfigError("output.dir: must not be empty");
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;  // defaults are the tunable device
  c.preset = name;
  if (name == "tunable") return c;
  if (name == "tunable-caption") {
    // alternate junction labeling with the caption-level Josephson energy
    c.device.r4 = 2.6;
    c.device.r5 = 1.0;
    c.device.ej_ghz = 350.0;
    return c;
  }
  if (name == "fixed-beta3.5" || name == "fixed-beta1.8") {
    // single effective beta junction: the pair is pinned at f_beta = 0 where
    // it acts as one junction of size r4 + r5
    c.device.r4 = name == "fixed-beta3.5" ? 2.5 : 0.8;
    c.device.r5 = 1.0;
    c.sweep.slaved = false;
    c.sweep.f_beta = 0.0;
    return c;
  }
  throw ConfigError("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
  return {"tunable", "tunable-caption", "fixed-beta3.5", "fixed-beta1.8"};
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  RunConfig c = base;
  for (const auto& e : parse_ini(text)) apply_entry(c, e);
  return c;
}

RunConfig load_config_file(const std::string& path, const RunConfig& base) {
  try {
    return parse_config(read_text_file(path), base);
  } catch (const ConfigError& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
}

std::optional<std::string> preset_in_config(const std::string& text) {
  for (const auto& e : parse_ini(text))
    if (e.section == "device" && e.key == "preset") return e.value;
  return std::nullopt;
}

std::string dump_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[device]\n";
  os << "r1 = " << fmt_exact(c.device.r1) << "\n";
  os << "r2 = " << fmt_exact(c.device.r2) << "\n";
  os << "r3 = " << fmt_exact(c.device.r3) << "\n";
  os << "r4 = " << fmt_exact(c.device.r4) << "\n";
  os << "r5 = " << fmt_exact(c.device.r5) << "\n";
  os << "ej_ghz = " << fmt_exact(c.device.ej_ghz) << "\n";
  os << "ec_ghz = " << fmt_exact(c.device.ec_ghz) << "\n";
  os << "area_ratio = " << fmt_exact(c.device.area_ratio) << "\n";
  os << "n_trunc = " << c.device.n_trunc << "\n";
  os << "\n[environment]\n";
  os << "z0_ohm = " << fmt_exact(c.environment.z0_ohm) << "\n";
  os << "cutoff_ghz = " << fmt_exact(c.environment.cutoff_ghz) << "\n";
  os << "p_const = " << fmt_exact(c.environment.p_const) << "\n";
  os << "\n[sweep]\n";
  os << "f_eps_start = " << fmt_exact(c.sweep.f_eps_start) << "\n";
  os << "f_eps_stop = " << fmt_exact(c.sweep.f_eps_stop) << "\n";
  os << "count = " << c.sweep.count << "\n";
  os << "slaving = " << (c.sweep.slaved ? "area" : "none") << "\n";
  os << "f_beta_offset = " << fmt_exact(c.sweep.f_beta_offset) << "\n";
  os << "f_beta = " << fmt_exact(c.sweep.f_beta) << "\n";
  os << "\n[drive]\n";
  os << "rabi_ghz = " << fmt_exact(c.drive.rabi_ghz) << "\n";
  os << "freq_start_ghz = " << fmt_exact(c.drive.freq_start_ghz) << "\n";
  os << "freq_stop_ghz = " << fmt_exact(c.drive.freq_stop_ghz) << "\n";
  os << "freq_count = " << c.drive.freq_count << "\n";
  os << "noise_sigma = " << fmt_exact(c.drive.noise_sigma) << "\n";
  os << "\n[rates]\n";
  os << "gamma_phi_ghz = " << fmt_exact(c.rates.gamma_phi_ghz) << "\n";
  os << "temp_mk = " << fmt_exact(c.rates.temp_mk) << "\n";
  os << "n_th = " << fmt_exact(c.rates.n_th) << "\n";
  os << "\n[fit]\n";
  os << "mask_lo_ghz = "
     << (c.fit.mask_lo_ghz ? fmt_exact(*c.fit.mask_lo_ghz) : "none") << "\n";
  os << "mask_hi_ghz = "
     << (c.fit.mask_hi_ghz ? fmt_exact(*c.fit.mask_hi_ghz) : "none") << "\n";
  os << "\n[run]\n";
  os << "seed = " << c.seed << "\n";
  os << "threads = " << c.threads << "\n";
  os << "eig_k = " << c.eig_k << "\n";
  os << "\n[output]\n";
  os << "dir = " << c.output_dir << "\n";
  return os.str();
}

std::uint64_t config_hash(const RunConfig& config) {
  const std::string text = dump_config(config);
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& config) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

}  // namespace fluxline::io
