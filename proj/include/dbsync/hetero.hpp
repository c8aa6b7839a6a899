#pragma once

#include "dbsync/datarep.hpp"
#include "dbsync/lti.hpp"
#include "dbsync/types.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace dbsync::hetero {

/// Sampled row-data families of an autonomous leader trajectory. The grid
/// covers the closed interval [0, T] so integrators can read the family at
/// every stage of a step ending exactly on a period boundary; grid_step may
/// be finer than the network simulation step for the same reason.
struct LeaderData {
    double T = 0.0;
    int M0 = 0;
    double grid_step = 0.0;
    std::vector<Matrix> Hx0, Hdx0, Hy0;

    int n0() const { return Hx0.empty() ? 0 : static_cast<int>(Hx0.front().rows()); }
    int p() const { return Hy0.empty() ? 0 : static_cast<int>(Hy0.front().rows()); }
    int grid_size() const { return static_cast<int>(Hx0.size()); }

    const Matrix& Hx0_at(double tau) const;
    const Matrix& Hdx0_at(double tau) const;
};

/// Build the families from a recorded leader trajectory, which must cover
/// [0, M0*T] inclusive (at least M0*T/h + 1 samples).
LeaderData build_leader_data(const Trajectory& traj, double T, int M0);

/// Record a leader trajectory from x0 over [0, M0*T] and build the families.
LeaderData collect_leader_data(const LtiSystem& leader, const Vector& x0, double T, int M0,
                               double grid_step);

/// The raw trajectory backing collect_leader_data, for archival.
Trajectory record_leader_trajectory(const LtiSystem& leader, const Vector& x0, double T, int M0,
                                    double grid_step);

/// rank(Hx0(t)) == n0 at t = 0 and 9 further sampled grid times.
bool leader_rank_check(const LeaderData& leader);

/// Keep drawing the leader initial condition until the rank condition holds.
LeaderData collect_leader_data_excited(const LtiSystem& leader, double T, int M0,
                                       double grid_step, Rng& rng, int max_draws = 16);

struct RegulatorSolution {
    Matrix S;      // M_i x n0
    Matrix Pi;     // n_i x n0
    Matrix Gamma;  // m_i x n0
    double residual_dynamics = 0.0;
    double residual_output = 0.0;
};

/// Solve the data-based regulator equations
///   Hdx_i(0) S Hx0(0) = Hx_i(0) S Hdx0(0),   Hy_i(0) S Hx0(0) = Hy0(0)
/// for S by minimum-norm least squares; (Gamma, Pi) = [Hu_i; Hx_i(0)] S.
/// Residuals above 1e-8 relative raise RepresentationError: this controller
/// family cannot synchronize the agent.
RegulatorSolution solve_regulator(const AgentData& agent, const LeaderData& leader);

/// Test oracle: residual norms of A_i Pi + B_i Gamma - Pi A0 and C_i Pi - C0.
std::pair<double, double> verify_regulator_model(const RegulatorSolution& sol,
                                                 const LtiSystem& agent,
                                                 const LtiSystem& leader);

/// Per-agent dynamic tracking controller. zeta follows the leader dynamics
/// through the recorded data: within period k the drift term is
/// Hdx0(t - kT) * alpha_bar, and alpha_bar is recomputed at every boundary so
/// that Hx0(0) * alpha_bar = zeta(kT).
struct DynamicController {
    Matrix K;      // m_i x n_i
    Matrix Pi;     // n_i x n0
    Matrix Gamma;  // m_i x n0
    std::shared_ptr<const LeaderData> leader;
    Vector zeta;
    Vector alpha_bar;
    int period_index = 0;
};

DynamicController init_controller(const RegulatorSolution& sol, const Matrix& K,
                                  const Vector& zeta0,
                                  std::shared_ptr<const LeaderData> leader);

/// d/dt zeta at absolute time t inside the current period window:
///   Hdx0(t - kT) alpha_bar - sum_j a_ij (zeta_i - zeta_j) - g_i (zeta_i - x0).
/// weighted_neighbors pairs (a_ij, zeta_j); t outside [kT, (k+1)T) throws.
Vector zeta_derivative(const DynamicController& ctrl, double t,
                       const std::vector<std::pair<double, Vector>>& weighted_neighbors,
                       double pin_gain, const Vector& leader_state);

/// Same derivative for an explicit zeta value at local time tau in [0, T];
/// used by integrators whose stages perturb zeta.
Vector zeta_derivative_at(const DynamicController& ctrl, double tau, const Vector& zeta,
                          const std::vector<std::pair<double, Vector>>& weighted_neighbors,
                          double pin_gain, const Vector& leader_state);

/// Period-boundary update: recompute alpha_bar from zeta(kT), advance the
/// period index. zeta itself is unchanged; the reconstruction residual must
/// stay within 1e-9 relative.
void on_period_boundary(DynamicController& ctrl, const Vector& zeta_at_boundary);

/// u_i = -K (x_i - Pi zeta_i) + Gamma zeta_i.
Vector control_input(const DynamicController& ctrl, const Vector& x);

/// Test oracle: all eigenvalues of A0 on the imaginary axis (|Re| <= 1e-9).
bool check_leader_assumption(const Matrix& A0);

}  // namespace dbsync::hetero
