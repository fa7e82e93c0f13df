#include "cips/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cips/errors.hpp"
#include "cips/io.hpp"

namespace cips {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t");
  std::size_t end = s.find_last_not_of(" \t");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
  return from_string(io::read_text(path));
}

ConfigFile ConfigFile::from_string(const std::string& text) {
  ConfigFile file;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("malformed section header at line " + std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(line_no));
    file.values_[section.empty() ? key : section + "." + key] = value;
  }
  return file;
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string ConfigFile::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key) const {
  try {
    return std::stod(get_string(key));
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("config key " + key + " is not a number");
  }
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t ConfigFile::get_int(const std::string& key) const {
  try {
    return std::stoll(get_string(key));
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("config key " + key + " is not an integer");
  }
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t ConfigFile::get_uint(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  try {
    return std::stoull(get_string(key));
  } catch (...) {
    throw ConfigError("config key " + key + " is not an unsigned integer");
  }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + " is not a boolean");
}

std::vector<double> ConfigFile::get_double_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get_string(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw ConfigError("config key " + key + " has a non-numeric entry: " + item);
    }
  }
  if (out.empty()) throw ConfigError("config key " + key + " is an empty list");
  return out;
}

std::vector<std::int64_t> ConfigFile::get_int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (double v : get_double_list(key)) out.push_back(static_cast<std::int64_t>(v));
  return out;
}

std::int64_t ExperimentConfig::particles_for(std::int64_t sites) const {
  std::int64_t n = std::llround(rho * static_cast<double>(sites));
  if (static_cast<double>(n) > rho * static_cast<double>(sites) + 1e-9) n -= 1;
  return std::max<std::int64_t>(n, 1);
}

std::vector<double> ExperimentConfig::initial_profile() const {
  if (f0_mode == "poisson") return poisson_profile(rho);
  // CSV with rows "k,f_k".
  std::string header;
  std::vector<double> f;
  for (const auto& row : io::read_csv(f0_mode, &header)) {
    if (row.size() != 2) throw ConfigError("f0 CSV must have rows k,f_k");
    const std::size_t k = static_cast<std::size_t>(std::stoll(row[0]));
    if (k >= f.size()) f.resize(k + 1, 0.0);
    f[k] = std::stod(row[1]);
  }
  if (f.size() < 3) f.resize(3, 0.0);
  return f;
}

RateKernel parse_kernel(const ConfigFile& file) {
  const std::string family = file.get_string("model.family", "independent");
  if (family == "independent") return RateKernel::independent_walkers();
  if (family == "zero-range") return RateKernel::zero_range(file.get_double("model.b"));
  if (family == "inclusion") return RateKernel::inclusion(file.get_double("model.d"));
  if (family == "table") {
    const std::string path = file.get_string("model.table");
    std::string header;
    std::vector<std::vector<double>> matrix;
    for (const auto& row : io::read_csv(path, nullptr)) {
      std::vector<double> values;
      for (const auto& cell : row) values.push_back(std::stod(cell));
      matrix.push_back(std::move(values));
    }
    return RateKernel::table(std::move(matrix));
  }
  throw ConfigError("unknown model.family: " + family);
}

ExperimentConfig parse_experiment_config(const ConfigFile& file) {
  static const std::set<std::string> known_keys = {
      "model.family",        "model.b",
      "model.d",             "model.table",
      "system.rho",          "system.L",
      "system.L_list",       "system.t_max",
      "system.obs_times",    "system.tagged_init",
      "ensemble.n_paths",    "ensemble.seed",
      "ensemble.jobs",       "meanfield.tol",
      "meanfield.epsilon_tail", "meanfield.hmax",
      "meanfield.node_dt",   "meanfield.f0",
      "limit.envelope",      "oracle.tagged",
      "oracle.t_list"};
  for (const auto& [key, value] : file.entries()) {
    if (known_keys.find(key) == known_keys.end()) {
      throw ConfigError("unknown config key: " + key);
    }
  }

  ExperimentConfig cfg;
  cfg.kernel = parse_kernel(file);
  cfg.model_name = file.get_string("model.family", "independent");
  cfg.rho = file.get_double("system.rho", 1.0);
  if (cfg.rho <= 0.0) throw ConfigError("system.rho must be positive");

  if (file.has("system.L_list")) {
    cfg.l_values = file.get_int_list("system.L_list");
  } else {
    cfg.l_values = {file.get_int("system.L", 100)};
  }
  if (!std::is_sorted(cfg.l_values.begin(), cfg.l_values.end())) {
    throw ConfigError("system.L_list must be sorted ascending");
  }
  for (std::int64_t l : cfg.l_values) {
    if (l < 2) throw ConfigError("lattice sizes must be >= 2");
  }

  cfg.t_max = file.get_double("system.t_max", 1.0);
  if (cfg.t_max < 0.0) throw ConfigError("system.t_max must be nonnegative");
  if (file.has("system.obs_times")) {
    cfg.obs_times = file.get_double_list("system.obs_times");
    if (!std::is_sorted(cfg.obs_times.begin(), cfg.obs_times.end())) {
      throw ConfigError("system.obs_times must be sorted");
    }
  } else {
    cfg.obs_times = {cfg.t_max};
  }

  const std::string tagged = file.get_string("system.tagged_init", "uniform");
  if (tagged == "uniform") {
    cfg.init.tagged = TaggedSiteScheme::UniformSite;
  } else if (tagged == "fixed") {
    cfg.init.tagged = TaggedSiteScheme::FixedSite;
  } else if (tagged == "max") {
    cfg.init.tagged = TaggedSiteScheme::MaxSite;
  } else {
    throw ConfigError("system.tagged_init must be fixed, uniform or max");
  }

  cfg.n_paths = static_cast<std::size_t>(file.get_int("ensemble.n_paths", 1000));
  cfg.master_seed = file.get_uint("ensemble.seed", 1);
  cfg.jobs = static_cast<unsigned>(file.get_int("ensemble.jobs", 0));

  cfg.meanfield.tol = file.get_double("meanfield.tol", 1e-9);
  cfg.meanfield.epsilon_tail = file.get_double("meanfield.epsilon_tail", 1e-12);
  cfg.meanfield.h_max = file.get_double("meanfield.hmax", 0.1);
  cfg.meanfield.node_dt = file.get_double("meanfield.node_dt", 0.02);
  cfg.f0_mode = file.get_string("meanfield.f0", "poisson");

  const std::string envelope = file.get_string("limit.envelope", "grid");
  if (envelope == "grid") {
    cfg.envelope = EnvelopeMode::Grid;
  } else if (envelope == "lip") {
    cfg.envelope = EnvelopeMode::Lip;
  } else {
    throw ConfigError("limit.envelope must be grid or lip");
  }

  cfg.oracle_tagged = file.get_bool("oracle.tagged", false);
  if (file.has("oracle.t_list")) {
    cfg.oracle_times = file.get_double_list("oracle.t_list");
  } else {
    cfg.oracle_times = cfg.obs_times;
  }
  return cfg;
}

}  // namespace cips
