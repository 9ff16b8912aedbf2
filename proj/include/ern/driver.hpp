#ifndef ERN_DRIVER_HPP
#define ERN_DRIVER_HPP

/* Subcommand orchestration: each command evolves / analyzes per the config
 * and writes CSV artifacts plus a manifest into out_dir/run_id/.
 * Exit codes: 0 success, 2 expected blowup, 1 error.
 */

#include <string>

#include "ern/checks.hpp"
#include "ern/config.hpp"
#include "ern/csvio.hpp"
#include "ern/series.hpp"

namespace ern {

// Evolve per config with all pulse amplitudes scaled by amp_scale.
Trajectory run_evolution(const RunConfig& cfg, double amp_scale = 1.0);

// config-bytes + trajectory-bytes identity (timestamps excluded).
std::uint64_t trajectory_hash(const Trajectory& tr);
std::string manifest_hash(const RunConfig& cfg, const Trajectory& tr);

// Writes manifest.json atomically; tr may be null (no evolution ran).
void write_manifest(const RunConfig& cfg, const std::string& dir,
                    const std::string& status, double wall_seconds,
                    const Trajectory* tr);

std::string run_directory(const RunConfig& cfg); // out_dir/run_id, created

int cmd_background(const RunConfig& cfg);
int cmd_evolve(const RunConfig& cfg);
int cmd_diagnose(const RunConfig& cfg);
int cmd_rates(const RunConfig& cfg);
int cmd_check_identities(const RunConfig& cfg);
int cmd_check_hardy(const RunConfig& cfg, int nseeds = 100);
int cmd_blowup_scan(const RunConfig& cfg, double lo, double hi);
int cmd_convergence(const RunConfig& cfg, int levels);

} // namespace ern

#endif
