#pragma once

#include "dbsync/hetero.hpp"
#include "dbsync/lti.hpp"
#include "dbsync/topology.hpp"
#include "dbsync/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace dbsync::closedloop {

struct Metrics {
    double initial_error_norm = 0.0;
    double final_error_norm = 0.0;
    double settling_time = 0.0;       // first time the error stays in the 1% band; NaN if never
    bool converged = false;           // settled within the run
    double tail_start = 0.0;
    double max_error_tail = 0.0;      // max error norm over [tail_start, duration]
    double consistency_residual = 0.0;  // homogeneous runs: finite-difference check of the
                                        // stacked error dynamics
    double max_boundary_jump = 0.0;     // heterogeneous runs: worst zeta reconstruction gap
};

/// One closed-loop network simulation on the inclusive grid [0, duration].
struct NetworkRun {
    double h = 0.0;
    std::vector<double> time;
    int node_output_dim = 0;
    Matrix outputs;            // (N+1) * node_output_dim x samples; leader block first
    Matrix errors;             // homogeneous: stacked delta; heterogeneous: stacked y_i - y0
    Matrix agent_error_norms;  // N x samples
    Vector global_error_norm;  // samples; homogeneous ||delta||, heterogeneous max_i ||y_i - y0||
    Metrics metrics;

    int samples() const { return static_cast<int>(time.size()); }
};

/// Identical agents with distributed static feedback u_i = -K_i delta_i,
/// where delta_i is the weighted disagreement with neighbors and leader. The
/// leader runs open loop. Records delta and checks its recorded derivative
/// against the stacked error dynamics by central differences.
NetworkRun run_homogeneous(const LtiSystem& sys, const Topology& top,
                           const std::vector<Matrix>& gains, const Matrix& agent_init,
                           const Vector& leader_init, double duration, double h);

/// Same loop with an unstructured global feedback u = -K delta (mN x nN);
/// distributed gains correspond to the block-diagonal case.
NetworkRun run_homogeneous_global(const LtiSystem& sys, const Topology& top,
                                  const Matrix& K_global, const Matrix& agent_init,
                                  const Vector& leader_init, double duration, double h);

/// Heterogeneous agents with the data-driven dynamic controllers. Plant
/// states, controller states and the leader are co-integrated as one ODE;
/// controller alpha vectors are recomputed at every period boundary.
NetworkRun run_heterogeneous(const std::vector<LtiSystem>& systems, const LtiSystem& leader,
                             const Topology& top, std::vector<hetero::DynamicController>& ctrls,
                             const std::vector<Vector>& agent_init, const Vector& leader_init,
                             double duration, double h);

/// CSV: t, leader outputs, per-agent outputs, per-agent error norms, global
/// error norm.
void write_network_csv(std::ostream& os, const NetworkRun& run);

/// Self-contained matplotlib script reading the CSV written above.
std::string plot_script(const std::string& csv_name, int agents, int node_output_dim);

}  // namespace dbsync::closedloop
