// Experiment runner and serializer: CSV trajectories, convergence tables,
// JSON fits and manifests. The only module with file I/O.
#pragma once

#include <string>

#include "nlch/config.hpp"
#include "nlch/oracle.hpp"

namespace nlch::io {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kPrng = "mt19937_64 raw-bits/v1";

// Exit codes: 0 pass, 1 semantic failure, 2 bad input, 3 numerical abort.
int run_simulate(const std::string& config_path, const std::string& out_dir);
int run_sweep(const std::string& verb, const std::string& config_path, const std::string& out_dir,
              const std::string& grid_override, int threads);
int run_validate(const std::string& config_path);
int run_oracle_selftest(const std::string& out_dir, const oracle::OracleBudget& budget,
                        const std::string& inject_fault);

// serialization helpers (exposed for tests)
std::string format_g17(double v);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_convergence_csv(const std::string& path, const ConvergenceReport& rep, bool cauchy);

} // namespace nlch::io
