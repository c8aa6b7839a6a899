#include "dbsync/hetero.hpp"

#include "dbsync/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace dbsync::hetero {

namespace {

const Matrix& family_at(const std::vector<Matrix>& fam, double tau, double step,
                        const std::string& what) {
    const long i = grid_index(tau, step, what);
    if (i < 0 || i >= static_cast<long>(fam.size()))
        throw ContractViolation(what + ": time outside the recorded window");
    return fam[static_cast<std::size_t>(i)];
}

Vector reconstruct_alpha(const LeaderData& leader, const Vector& zeta, const std::string& who) {
    if (zeta.size() != leader.n0()) throw DimensionError(who + ": zeta dimension mismatch");
    const Matrix& hx0 = leader.Hx0.front();
    if (rank_svd(hx0) != leader.n0())
        throw NumericalError(who + ": leader data matrix is rank deficient");
    const Vector alpha = min_norm_solve(hx0, zeta);
    const double residual = (hx0 * alpha - zeta).norm();
    if (residual > 1e-9 * (1.0 + zeta.norm()))
        throw RepresentationError(who + ": zeta reconstruction residual " +
                                  std::to_string(residual) + " above tolerance");
    return alpha;
}

}  // namespace

const Matrix& LeaderData::Hx0_at(double tau) const {
    return family_at(Hx0, tau, grid_step, "LeaderData::Hx0");
}

const Matrix& LeaderData::Hdx0_at(double tau) const {
    return family_at(Hdx0, tau, grid_step, "LeaderData::Hdx0");
}

LeaderData build_leader_data(const Trajectory& traj, double T, int M0) {
    if (M0 < 2) throw DimensionError("build_leader_data: need M0 >= 2 columns");
    const double grid_step = traj.h;
    const long kt = grid_index(T, grid_step, "build_leader_data: T");
    if (kt < 1) throw DimensionError("build_leader_data: T shorter than one grid step");
    if (traj.samples() < static_cast<long>(M0) * kt + 1)
        throw DimensionError("build_leader_data: trajectory does not cover [0, M0*T]");

    LeaderData data;
    data.T = T;
    data.M0 = M0;
    data.grid_step = grid_step;
    const int grid = static_cast<int>(kt) + 1;  // closed interval [0, T]
    data.Hx0.reserve(grid);
    data.Hdx0.reserve(grid);
    data.Hy0.reserve(grid);
    const Eigen::Index n0 = traj.x.rows();
    const Eigen::Index p0 = traj.y.rows();
    for (int s = 0; s < grid; ++s) {
        Matrix hx(n0, M0), hdx(n0, M0), hy(p0, M0);
        for (int j = 0; j < M0; ++j) {
            const long col = s + static_cast<long>(j) * kt;
            hx.col(j) = traj.x.col(col);
            hdx.col(j) = traj.dx.col(col);
            hy.col(j) = traj.y.col(col);
        }
        data.Hx0.push_back(std::move(hx));
        data.Hdx0.push_back(std::move(hdx));
        data.Hy0.push_back(std::move(hy));
    }
    return data;
}

Trajectory record_leader_trajectory(const LtiSystem& leader, const Vector& x0, double T, int M0,
                                    double grid_step) {
    if (leader.m() != 0)
        throw DimensionError("record_leader_trajectory: the leader must be autonomous (m = 0)");
    const long kt = grid_index(T, grid_step, "record_leader_trajectory: T");
    // One extra step so samples exist up to and including t = M0*T.
    const double duration = (static_cast<double>(M0) * kt + 1) * grid_step;
    const ZeroSignal no_input(0);
    return simulate(leader, x0, no_input, duration, grid_step);
}

LeaderData collect_leader_data(const LtiSystem& leader, const Vector& x0, double T, int M0,
                               double grid_step) {
    return build_leader_data(record_leader_trajectory(leader, x0, T, M0, grid_step), T, M0);
}

bool leader_rank_check(const LeaderData& leader) {
    const int n0 = leader.n0();
    if (leader.M0 < n0) return false;
    const int grid = leader.grid_size();
    for (int q = 0; q < 10; ++q) {
        const int i = static_cast<int>((static_cast<long>(q) * (grid - 1)) / 10);
        if (rank_svd(leader.Hx0[static_cast<std::size_t>(i)]) != n0) return false;
    }
    return true;
}

LeaderData collect_leader_data_excited(const LtiSystem& leader, double T, int M0,
                                       double grid_step, Rng& rng, int max_draws) {
    for (int attempt = 0; attempt < max_draws; ++attempt) {
        LeaderData data =
            collect_leader_data(leader, rng.uniform_vector(leader.n()), T, M0, grid_step);
        if (leader_rank_check(data)) return data;
    }
    throw NumericalError("collect_leader_data_excited: leader rank condition failed repeatedly");
}

RegulatorSolution solve_regulator(const AgentData& agent, const LeaderData& leader) {
    if (!pe_rank_check(agent))
        throw RepresentationError("solve_regulator: agent excitation rank condition fails");
    if (!leader_rank_check(leader))
        throw RepresentationError("solve_regulator: leader rank condition fails");
    if (agent.p != leader.p())
        throw DimensionError("solve_regulator: output dimensions of agent and leader differ");

    const Matrix& hx0_lead = leader.Hx0.front();
    const Matrix& hdx0_lead = leader.Hdx0.front();
    const Matrix& hy0_lead = leader.Hy0.front();
    const int n0 = leader.n0();
    const int M = agent.M();

    // Vectorized stack of both equations in the entries of S (column-major):
    //   (Hx0(0)^T (x) Hdx_i(0) - Hdx0(0)^T (x) Hx_i(0)) vec(S) = 0
    //   (Hx0(0)^T (x) Hy_i(0)) vec(S) = vec(Hy0(0))
    const Matrix dyn_coef =
        kron(hx0_lead.transpose(), agent.Hdx0()) - kron(hdx0_lead.transpose(), agent.Hx0());
    const Matrix out_coef = kron(hx0_lead.transpose(), agent.Hy0());

    Matrix coef(dyn_coef.rows() + out_coef.rows(), M * n0);
    coef.topRows(dyn_coef.rows()) = dyn_coef;
    coef.bottomRows(out_coef.rows()) = out_coef;
    Vector rhs = Vector::Zero(coef.rows());
    rhs.tail(out_coef.rows()) = Eigen::Map<const Vector>(hy0_lead.data(), hy0_lead.size());

    const Vector s_vec = min_norm_solve(coef, rhs);

    RegulatorSolution sol;
    sol.S = Eigen::Map<const Matrix>(s_vec.data(), M, n0);
    const Matrix dyn_lhs = agent.Hdx0() * sol.S * hx0_lead;
    const Matrix dyn_rhs = agent.Hx0() * sol.S * hdx0_lead;
    const Matrix out_lhs = agent.Hy0() * sol.S * hx0_lead;
    sol.residual_dynamics =
        (dyn_lhs - dyn_rhs).norm() / (1.0 + dyn_lhs.norm() + dyn_rhs.norm());
    sol.residual_output = (out_lhs - hy0_lead).norm() / (1.0 + hy0_lead.norm());
    if (sol.residual_dynamics > 1e-8 || sol.residual_output > 1e-8)
        throw RepresentationError(
            "solve_regulator: data equations are unsolvable (residuals " +
            std::to_string(sol.residual_dynamics) + ", " + std::to_string(sol.residual_output) +
            "); output synchronization is not achievable with this controller family");

    sol.Gamma = agent.Hu() * sol.S;
    sol.Pi = agent.Hx0() * sol.S;
    return sol;
}

std::pair<double, double> verify_regulator_model(const RegulatorSolution& sol,
                                                 const LtiSystem& agent,
                                                 const LtiSystem& leader) {
    const double dyn =
        (agent.A * sol.Pi + agent.B * sol.Gamma - sol.Pi * leader.A).norm();
    const double out = (agent.C * sol.Pi - leader.C).norm();
    return {dyn, out};
}

DynamicController init_controller(const RegulatorSolution& sol, const Matrix& K,
                                  const Vector& zeta0,
                                  std::shared_ptr<const LeaderData> leader) {
    if (!leader) throw DimensionError("init_controller: leader data required");
    DynamicController ctrl;
    ctrl.K = K;
    ctrl.Pi = sol.Pi;
    ctrl.Gamma = sol.Gamma;
    ctrl.leader = std::move(leader);
    ctrl.zeta = zeta0;
    ctrl.alpha_bar = reconstruct_alpha(*ctrl.leader, zeta0, "init_controller");
    ctrl.period_index = 0;
    return ctrl;
}

Vector zeta_derivative_at(const DynamicController& ctrl, double tau, const Vector& zeta,
                          const std::vector<std::pair<double, Vector>>& weighted_neighbors,
                          double pin_gain, const Vector& leader_state) {
    Vector dzeta = ctrl.leader->Hdx0_at(tau) * ctrl.alpha_bar;
    for (const auto& [weight, neighbor] : weighted_neighbors)
        dzeta -= weight * (zeta - neighbor);
    if (pin_gain != 0.0) {
        if (leader_state.size() != zeta.size())
            throw DimensionError("zeta_derivative: leader state dimension mismatch");
        dzeta -= pin_gain * (zeta - leader_state);
    }
    return dzeta;
}

Vector zeta_derivative(const DynamicController& ctrl, double t,
                       const std::vector<std::pair<double, Vector>>& weighted_neighbors,
                       double pin_gain, const Vector& leader_state) {
    const double tau = t - static_cast<double>(ctrl.period_index) * ctrl.leader->T;
    if (tau < -1e-9 || tau >= ctrl.leader->T - 1e-9)
        throw ContractViolation("zeta_derivative: t is outside the current period window");
    return zeta_derivative_at(ctrl, std::max(tau, 0.0), ctrl.zeta, weighted_neighbors, pin_gain,
                              leader_state);
}

void on_period_boundary(DynamicController& ctrl, const Vector& zeta_at_boundary) {
    ctrl.alpha_bar = reconstruct_alpha(*ctrl.leader, zeta_at_boundary, "on_period_boundary");
    ctrl.zeta = zeta_at_boundary;
    ++ctrl.period_index;
}

Vector control_input(const DynamicController& ctrl, const Vector& x) {
    if (x.size() != ctrl.Pi.rows()) throw DimensionError("control_input: state dimension mismatch");
    return -ctrl.K * (x - ctrl.Pi * ctrl.zeta) + ctrl.Gamma * ctrl.zeta;
}

bool check_leader_assumption(const Matrix& A0) {
    if (A0.rows() != A0.cols()) throw DimensionError("check_leader_assumption: A0 must be square");
    Eigen::EigenSolver<Matrix> es(A0, /*computeEigenvectors=*/false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i).real()) > 1e-9) return false;
    return true;
}

}  // namespace dbsync::hetero
