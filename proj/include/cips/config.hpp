#ifndef CIPS_CONFIG_HPP
#define CIPS_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cips/limit_chain.hpp"
#include "cips/meanfield.hpp"
#include "cips/rate_kernel.hpp"
#include "cips/state.hpp"

namespace cips {

// Flat key-value configuration file with [section] headers; '#' starts a
// comment. Keys are addressed as "section.key". The schema is documented
// in the README.
class ConfigFile {
 public:
  static ConfigFile load(const std::string& path);
  static ConfigFile from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
  RateKernel kernel = RateKernel::independent_walkers();
  std::string model_name = "independent";
  double rho = 1.0;
  std::vector<std::int64_t> l_values;  // sorted ascending
  double t_max = 1.0;
  std::vector<double> obs_times;
  std::size_t n_paths = 1000;
  std::uint64_t master_seed = 1;
  unsigned jobs = 0;
  InitScheme init;

  MeanFieldOptions meanfield;
  std::string f0_mode = "poisson";  // "poisson" or a CSV path
  EnvelopeMode envelope = EnvelopeMode::Grid;

  bool oracle_tagged = false;
  std::vector<double> oracle_times;

  // Particle count for a lattice size under the density convention
  // N/L <= rho: round(rho*L), rounded down when rounding up would
  // overshoot the density.
  std::int64_t particles_for(std::int64_t sites) const;

  std::vector<double> initial_profile() const;
};

ExperimentConfig parse_experiment_config(const ConfigFile& file);
RateKernel parse_kernel(const ConfigFile& file);

}  // namespace cips

#endif  // CIPS_CONFIG_HPP
