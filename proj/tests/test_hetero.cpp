#include "dbsync/hetero.hpp"

#include "dbsync/linalg.hpp"
#include "dbsync/lmi.hpp"
#include "helpers.hpp"

#include "doctest.h"

#include <cmath>
#include <memory>

using namespace dbsync;
using namespace dbsync::hetero;

namespace {

std::shared_ptr<const LeaderData> demo_leader_data(std::uint64_t seed = 211) {
    Rng rng(seed);
    return std::make_shared<const LeaderData>(
        collect_leader_data_excited(testutil::ramp_leader(), 0.37, 4, 5e-4, rng));
}

// Data-driven and model-based integration of the tracking-state subsystem
// [zeta_1..zeta_N, x0] with the same fourth-order stepper.
struct ZetaRun {
    Matrix zeta;  // (N * n0) x samples
    double max_boundary_gap = 0.0;
};

ZetaRun integrate_zeta(std::vector<DynamicController>& ctrls, const Topology& top,
                       const LtiSystem& leader, const std::vector<Vector>& zeta0,
                       const Vector& x0_init, double duration, double h, bool data_driven) {
    const int N = top.N;
    const int n0 = leader.n();
    const double T = ctrls.front().leader->T;
    const long spp = grid_index(T, h, "period");
    const long steps = grid_index(duration, h, "duration");

    Vector state((N + 1) * n0);
    for (int i = 0; i < N; ++i) state.segment(i * n0, n0) = zeta0[static_cast<std::size_t>(i)];
    state.tail(n0) = x0_init;

    auto field = [&](double tau, const Vector& s) {
        Vector ds((N + 1) * n0);
        const Vector x0 = s.tail(n0);
        for (int i = 0; i < N; ++i) {
            const Vector zi = s.segment(i * n0, n0);
            std::vector<std::pair<double, Vector>> neighbors;
            for (int j = 0; j < N; ++j)
                if (top.adjacency(i, j) != 0.0)
                    neighbors.emplace_back(top.adjacency(i, j), s.segment(j * n0, n0));
            if (data_driven) {
                ds.segment(i * n0, n0) = zeta_derivative_at(
                    ctrls[static_cast<std::size_t>(i)], tau, zi, neighbors, top.pinning(i), x0);
            } else {
                Vector dz = leader.A * zi;
                for (const auto& [w, zj] : neighbors) dz -= w * (zi - zj);
                if (top.pinning(i) != 0.0) dz -= top.pinning(i) * (zi - x0);
                ds.segment(i * n0, n0) = dz;
            }
        }
        ds.tail(n0) = leader.A * x0;
        return ds;
    };

    ZetaRun run;
    run.zeta.resize(N * n0, steps + 1);
    for (long k = 0; k <= steps; ++k) {
        if (data_driven && k > 0 && k % spp == 0 && k < steps) {
            for (int i = 0; i < N; ++i) {
                auto& ctrl = ctrls[static_cast<std::size_t>(i)];
                const Vector zi = state.segment(i * n0, n0);
                on_period_boundary(ctrl, zi);
                run.max_boundary_gap =
                    std::max(run.max_boundary_gap,
                             (ctrl.leader->Hx0.front() * ctrl.alpha_bar - zi).norm());
            }
        }
        run.zeta.col(k) = state.head(N * n0);
        if (k == steps) break;
        const double tau = static_cast<double>(k % spp) * h;
        const Vector k1 = field(tau, state);
        const Vector k2 = field(tau + 0.5 * h, state + 0.5 * h * k1);
        const Vector k3 = field(tau + 0.5 * h, state + 0.5 * h * k2);
        const Vector k4 = field(tau + h, state + h * k3);
        state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return run;
}

}  // namespace

TEST_SUITE("hetero") {

TEST_CASE("regulator solutions of the vehicle agents match the closed forms") {
    const auto leader = demo_leader_data();
    struct Case {
        double a, b, c, d;
    };
    const Case cases[] = {{1, 10, 2, 1}, {1, 1, 2, 1}};
    int idx = 0;
    for (const auto& cs : cases) {
        const LtiSystem agent = testutil::vehicle_agent(cs.a, cs.b, cs.c, cs.d);
        const AgentData data = testutil::collect(agent, 300 + static_cast<std::uint64_t>(idx++));
        const RegulatorSolution sol = solve_regulator(data, *leader);
        CHECK(sol.residual_dynamics <= 1e-8);
        CHECK(sol.residual_output <= 1e-8);

        Matrix pi_expected(3, 2);
        pi_expected << 1, 0, 0, 1, 0, 0;
        Matrix gamma_expected(1, 2);
        gamma_expected << 0, cs.b / cs.d;
        CHECK((sol.Pi - pi_expected).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK((sol.Gamma - gamma_expected).cwiseAbs().maxCoeff() <= 1e-6);

        const auto [dyn, out] = verify_regulator_model(sol, agent, testutil::ramp_leader());
        CHECK(dyn <= 1e-6);
        CHECK(out <= 1e-6);
    }
}

TEST_CASE("a wrong candidate solution shows a nonzero model residual") {
    RegulatorSolution sol;
    sol.Pi = Matrix::Zero(3, 2);
    sol.Pi(0, 0) = 1.0;
    sol.Pi(1, 1) = 1.0;
    sol.Gamma = Matrix::Zero(1, 2);
    const auto [dyn, out] =
        verify_regulator_model(sol, testutil::vehicle_agent(1, 10, 2, 1), testutil::ramp_leader());
    CHECK(dyn > 0.1);
    CHECK(out <= 1e-12);
}

TEST_CASE("identical agent and leader dynamics admit the identity solution") {
    const LtiSystem leader = testutil::ramp_leader();
    const LtiSystem agent(leader.A, Matrix::Identity(2, 2).col(1), leader.C);
    RegulatorSolution sol;
    sol.Pi = Matrix::Identity(2, 2);
    sol.Gamma = Matrix::Zero(1, 2);
    const auto [dyn, out] = verify_regulator_model(sol, agent, leader);
    CHECK(dyn == 0.0);
    CHECK(out == 0.0);
}

TEST_CASE("a zero output map makes the data equations unsolvable") {
    const auto leader = demo_leader_data();
    LtiSystem agent = testutil::vehicle_agent(1, 0, 1, 1);
    const LtiSystem blind(agent.A, agent.B, Matrix::Zero(1, 3));
    const AgentData data = testutil::collect(blind, 311);
    CHECK_THROWS_AS(solve_regulator(data, *leader), RepresentationError);
}

TEST_CASE("model solutions map back to data solutions") {
    const auto leader = demo_leader_data();
    const LtiSystem agent = testutil::vehicle_agent(1, 10, 2, 1);
    const AgentData data = testutil::collect(agent, 313);

    Matrix pi(3, 2), gamma(1, 2);
    pi << 1, 0, 0, 1, 0, 0;
    gamma << 0, 10;
    Matrix stacked(4, data.M());
    stacked.topRows(1) = data.Hu();
    stacked.bottomRows(3) = data.Hx0();
    Matrix rhs(4, 2);
    rhs.topRows(1) = gamma;
    rhs.bottomRows(3) = pi;
    const Matrix S = min_norm_solve(stacked, rhs);

    const Matrix& hx0 = leader->Hx0.front();
    const Matrix& hdx0 = leader->Hdx0.front();
    CHECK((data.Hdx0() * S * hx0 - data.Hx0() * S * hdx0).norm() <= 1e-8);
    CHECK((data.Hy0() * S * hx0 - leader->Hy0.front()).norm() <= 1e-8);
}

TEST_CASE("controller initialization reconstructs its tracking state from data") {
    const auto leader = demo_leader_data();
    const LtiSystem agent = testutil::vehicle_agent(1, 0, 1, 1);
    const AgentData data = testutil::collect(agent, 317);
    const RegulatorSolution sol = solve_regulator(data, *leader);
    const Matrix K = Matrix::Zero(1, 3);

    SUBCASE("a recorded data column replays exactly") {
        const Vector zeta0 = leader->Hx0.front().col(0);
        const DynamicController ctrl = init_controller(sol, K, zeta0, leader);
        CHECK((leader->Hx0.front() * ctrl.alpha_bar - zeta0).norm() <= 1e-9 * (1.0 + zeta0.norm()));
        CHECK(ctrl.period_index == 0);
    }
    SUBCASE("zero state gives the zero coefficient vector") {
        const DynamicController ctrl = init_controller(sol, K, Vector::Zero(2), leader);
        CHECK(ctrl.alpha_bar.norm() <= 1e-12);
    }
    SUBCASE("random states stay within the reconstruction tolerance") {
        Rng rng(331);
        for (int trial = 0; trial < 5; ++trial) {
            const Vector zeta0 = rng.uniform_vector(2);
            const DynamicController ctrl = init_controller(sol, K, zeta0, leader);
            CHECK((leader->Hx0.front() * ctrl.alpha_bar - zeta0).norm() <=
                  1e-9 * (1.0 + zeta0.norm()));
        }
    }
}

TEST_CASE("tracking-state derivative follows the recorded leader flow") {
    const auto leader = demo_leader_data();
    const LtiSystem agent = testutil::vehicle_agent(1, 0, 1, 1);
    const AgentData data = testutil::collect(agent, 337);
    const RegulatorSolution sol = solve_regulator(data, *leader);
    Rng rng(347);
    const Vector zeta0 = rng.uniform_vector(2);
    const DynamicController ctrl = init_controller(sol, Matrix::Zero(1, 3), zeta0, leader);

    SUBCASE("isolated node: derivative equals the data term") {
        const Vector dz = zeta_derivative(ctrl, 0.1, {}, 0.0, Vector());
        CHECK((dz - leader->Hdx0_at(0.1) * ctrl.alpha_bar).norm() == 0.0);
    }
    SUBCASE("consensus fixed point: coupling vanishes") {
        const Vector x0 = leader->Hx0.front() * ctrl.alpha_bar;
        const Vector dz =
            zeta_derivative(ctrl, 0.2, {{1.0, ctrl.zeta}, {2.5, ctrl.zeta}}, 1.5, ctrl.zeta);
        // zeta equals every neighbor and the pin reference, so only the data
        // term remains
        CHECK((dz - leader->Hdx0_at(0.2) * ctrl.alpha_bar).norm() <= 1e-12);
        (void)x0;
    }
    SUBCASE("times outside the period window are rejected") {
        CHECK_THROWS_AS(zeta_derivative(ctrl, 0.37, {}, 0.0, Vector()), ContractViolation);
        CHECK_THROWS_AS(zeta_derivative(ctrl, -0.1, {}, 0.0, Vector()), ContractViolation);
    }
}

TEST_CASE("an isolated node replays the leader dynamics over one period") {
    const auto leader = demo_leader_data();
    const LtiSystem agent = testutil::vehicle_agent(1, 0, 1, 1);
    const AgentData data = testutil::collect(agent, 349);
    const RegulatorSolution sol = solve_regulator(data, *leader);
    Rng rng(353);

    const Topology isolated(Matrix::Zero(1, 1), Vector::Zero(1));
    const std::vector<Vector> zeta0{rng.uniform_vector(2)};
    std::vector<DynamicController> ctrls{
        init_controller(sol, Matrix::Zero(1, 3), zeta0[0], leader)};
    std::vector<DynamicController> ctrls_model = ctrls;

    const ZetaRun data_run = integrate_zeta(ctrls, isolated, testutil::ramp_leader(), zeta0,
                                            rng.uniform_vector(2), 0.37, 1e-3, true);
    const ZetaRun model_run = integrate_zeta(ctrls_model, isolated, testutil::ramp_leader(), zeta0,
                                             rng.uniform_vector(2), 0.37, 1e-3, false);
    CHECK((data_run.zeta - model_run.zeta).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("replay matches the model across three periods and two boundaries") {
    const auto leader = demo_leader_data();
    const LtiSystem leader_model = testutil::ramp_leader();
    const LtiSystem agent = testutil::vehicle_agent(1, 0, 1, 1);
    const AgentData data = testutil::collect(agent, 359);
    const RegulatorSolution sol = solve_regulator(data, *leader);
    Rng rng(367);

    // two coupled nodes starting on the synchronized manifold plus one
    // isolated node with a free initial state
    Matrix a = Matrix::Zero(3, 3);
    a(1, 0) = 1.0;
    Vector g = Vector::Zero(3);
    g(0) = 1.0;
    const Topology top(a, g);

    const Vector x0_init = rng.uniform_vector(2);
    const std::vector<Vector> zeta0{x0_init, x0_init, rng.uniform_vector(2)};
    std::vector<DynamicController> ctrls;
    for (const auto& z : zeta0) ctrls.push_back(init_controller(sol, Matrix::Zero(1, 3), z, leader));
    std::vector<DynamicController> ctrls_model = ctrls;

    const double duration = 3 * 0.37;
    const ZetaRun data_run =
        integrate_zeta(ctrls, top, leader_model, zeta0, x0_init, duration, 1e-3, true);
    const ZetaRun model_run =
        integrate_zeta(ctrls_model, top, leader_model, zeta0, x0_init, duration, 1e-3, false);

    CHECK((data_run.zeta - model_run.zeta).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(data_run.max_boundary_gap <= 1e-8);
    CHECK(ctrls.front().period_index == 2);
}

TEST_CASE("boundary updates keep zeta and reset the replay coefficients") {
    const auto leader = demo_leader_data();
    const LtiSystem agent = testutil::vehicle_agent(1, 0, 1, 1);
    const AgentData data = testutil::collect(agent, 373);
    const RegulatorSolution sol = solve_regulator(data, *leader);
    DynamicController ctrl = init_controller(sol, Matrix::Zero(1, 3), Vector::Zero(2), leader);

    on_period_boundary(ctrl, Vector::Zero(2));
    CHECK(ctrl.alpha_bar.norm() <= 1e-12);
    CHECK(ctrl.period_index == 1);

    Rng rng(379);
    const Vector z = rng.uniform_vector(2);
    on_period_boundary(ctrl, z);
    CHECK((leader->Hx0.front() * ctrl.alpha_bar - z).norm() <= 1e-9 * (1.0 + z.norm()));
    CHECK(ctrl.period_index == 2);
}

TEST_CASE("control inputs combine tracking error and feedforward") {
    const auto leader = demo_leader_data();
    const LtiSystem agent = testutil::vehicle_agent(1, 10, 2, 1);
    const AgentData data = testutil::collect(agent, 383);
    const RegulatorSolution sol = solve_regulator(data, *leader);
    const AgentData stab_data = testutil::collect(agent, 389);
    const Matrix K = lmi::design_single_stabilizer(stab_data).K;

    Vector zeta(2);
    zeta << 0, 1;
    DynamicController ctrl = init_controller(sol, K, zeta, leader);

    SUBCASE("on the tracking manifold only the feedforward acts") {
        const Vector u = control_input(ctrl, ctrl.Pi * zeta);
        CHECK(std::abs(u(0) - (ctrl.Gamma * zeta)(0)) <= 1e-12);
        CHECK(std::abs(u(0) - 10.0) <= 1e-5);
    }
    SUBCASE("zero tracking state reduces to plain state feedback") {
        ctrl.zeta.setZero();
        Rng rng(397);
        const Vector x = rng.uniform_vector(3);
        const Vector u = control_input(ctrl, x);
        CHECK((u + K * x).norm() <= 1e-12);
    }
}

TEST_CASE("leader spectrum gate") {
    Matrix chain(2, 2);
    chain << 0, 1, 0, 0;
    CHECK(check_leader_assumption(chain));
    CHECK_FALSE(check_leader_assumption(-Matrix::Ones(1, 1)));
    Matrix rotation(2, 2);
    rotation << 0, 1, -1, 0;
    CHECK(check_leader_assumption(rotation));
}

}  // TEST_SUITE
