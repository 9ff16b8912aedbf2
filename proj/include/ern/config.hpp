#ifndef ERN_CONFIG_HPP
#define ERN_CONFIG_HPP

/* Run configuration: strict JSON schema (unknown keys rejected), physical
 * range validation, and the run identity hash.
 */

#include <cstdint>
#include <string>
#include <vector>

#include "ern/evolution.hpp"

namespace ern {

struct MonitorSchedule {
  std::vector<double> taus;    // checkpoint times for energies/series
  std::vector<double> p_list;  // weight exponents
  std::vector<int> k_list;     // commutation orders
  std::vector<double> q_list;  // weighted-sup exponents
  double fit_lo = 20, fit_hi = 200;
};

struct RunConfig {
  BackgroundParams par;
  GridSpec grid;
  int L = 0, ncomp = 1;
  std::vector<InitialPulse> pulses;
  NonlinearitySpec spec;
  Thresholds thr;
  MonitorSchedule monitors;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int correctors = 2;

  std::string raw;     // exact config bytes (hash input)
  std::string run_id;  // hex of the config hash
};

// FNV-1a 64-bit.
std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t h = 1469598103934665603ULL);
std::string hash_hex(std::uint64_t h);

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

} // namespace ern

#endif
