#pragma once

#include "dbsync/config.hpp"

#include <cstdint>
#include <string>

namespace dbsync::cli {

// Exit-code taxonomy: 0 ok, 2 data, 3 io, 4 design, 5 simulation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDesign = 4;
inline constexpr int kExitSimulation = 5;

/// Run the excitation experiments; writes per-agent trajectory CSVs (and the
/// leader trajectory in heterogeneous mode) plus manifest.json into run_dir.
int cmd_collect(const ScenarioConfig& cfg, const std::string& run_dir);

/// Read collected data back from run_dir, synthesize controllers, and write
/// certificates plus design_report.json.
int cmd_design(const ScenarioConfig& cfg, const std::string& run_dir);

/// Simulate the closed loop from seeded random initial conditions using the
/// design artifacts in run_dir; writes run.csv, metrics.json, plot_run.py.
int cmd_simulate(const ScenarioConfig& cfg, const std::string& run_dir);

/// Full pipeline on the bundled demo scenario for num_seeds consecutive
/// seeds; writes per-seed run directories and a pass/fail summary against
/// the 1e-2 tail-error threshold.
int cmd_demo(const std::string& out_dir, std::uint64_t base_seed, int num_seeds);

/// $DBSYNC_OUT if set, else "runs".
std::string default_output_root();

}  // namespace dbsync::cli
