#include "dbsync/lmi.hpp"

#include "dbsync/io.hpp"
#include "dbsync/linalg.hpp"
#include "dbsync/oracle.hpp"
#include "helpers.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>

using namespace dbsync;
using namespace dbsync::lmi;

namespace {

MatrixExpr scalar_times(int unknown, double factor) {
    MatrixExpr expr(1, 1);
    expr.add_term(factor * Matrix::Ones(1, 1), unknown, Matrix::Ones(1, 1));
    return expr;
}

}  // namespace

TEST_SUITE("lmi") {

TEST_CASE("pinned scalar maximizes its own margin") {
    FeasibilityProblem prob;
    const int x = prob.add_unknown("x", 1, 1);
    prob.require_positive_definite(scalar_times(x, 1.0));
    MatrixExpr pin = scalar_times(x, 1.0);
    pin.add_constant(-Matrix::Ones(1, 1));
    prob.require_zero(pin);  // x = 1

    const FeasibilityResult res = solve_feasibility(prob);
    CHECK(res.feasible);
    CHECK(std::abs(res.values[0](0, 0) - 1.0) <= 1e-9);
    CHECK(std::abs(res.margin - 1.0) <= 1e-6);
}

TEST_CASE("contradictory definiteness is reported as infeasible with the margin") {
    FeasibilityProblem prob;
    const int x = prob.add_unknown("x", 1, 1);
    prob.require_positive_definite(scalar_times(x, 1.0));
    prob.require_positive_definite(scalar_times(x, -1.0));

    const FeasibilityResult res = solve_feasibility(prob);
    CHECK_FALSE(res.feasible);
    CHECK(res.margin <= 1e-6);
    CHECK(res.margin >= -1e-3);
}

TEST_CASE("inconsistent equalities short-circuit to an infeasibility report") {
    FeasibilityProblem prob;
    const int x = prob.add_unknown("x", 1, 1);
    prob.require_positive_definite(scalar_times(x, 1.0));
    MatrixExpr one = scalar_times(x, 1.0);
    one.add_constant(-Matrix::Ones(1, 1));
    prob.require_zero(one);
    MatrixExpr two = scalar_times(x, 1.0);
    two.add_constant(-2.0 * Matrix::Ones(1, 1));
    prob.require_zero(two);

    const FeasibilityResult res = solve_feasibility(prob);
    CHECK_FALSE(res.feasible);
    CHECK(std::isinf(res.margin));
    CHECK(res.margin < 0.0);
}

TEST_CASE("a pinned symmetric block reports its smallest eigenvalue as margin") {
    FeasibilityProblem prob;
    const int p = prob.add_symmetric_unknown("P", 2);
    MatrixExpr expr(2, 2);
    expr.add_term(Matrix::Identity(2, 2), p, Matrix::Identity(2, 2));
    prob.require_positive_definite(expr);
    Matrix target(2, 2);
    target << 2, 0, 0, 3;
    MatrixExpr pin(2, 2);
    pin.add_term(Matrix::Identity(2, 2), p, Matrix::Identity(2, 2));
    pin.add_constant(-target);
    prob.require_zero(pin);

    const FeasibilityResult res = solve_feasibility(prob);
    CHECK(res.feasible);
    CHECK((res.values[0] - target).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(res.margin - 2.0) <= 1e-6);
}

TEST_CASE("asymmetric definite constraints are rejected") {
    FeasibilityProblem prob;
    const int x = prob.add_unknown("X", 2, 2);
    MatrixExpr expr(2, 2);
    Matrix left(2, 2);
    left << 1, 1, 0, 1;  // makes the map non-symmetric
    expr.add_term(left, x, Matrix::Identity(2, 2));
    prob.require_positive_definite(expr);
    CHECK_THROWS_AS(solve_feasibility(prob), DimensionError);
}

TEST_CASE("stabilizer for the unstable scalar plant needs gain above one") {
    const LtiSystem sys = LtiSystem::state_output(Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    const AgentData data = testutil::collect(sys, 101, 0.37, 1e-3, 6);
    const StabilizerDesign design = design_single_stabilizer(data);
    CHECK(design.K(0, 0) > 1.0);
    CHECK(design.margin >= 1e-6);
    CHECK(1.0 - design.K(0, 0) < 0.0);
}

TEST_CASE("stabilizer keeps the stable scalar plant stable") {
    const LtiSystem sys = LtiSystem::state_output(-Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    const AgentData data = testutil::collect(sys, 103, 0.37, 1e-3, 6);
    const StabilizerDesign design = design_single_stabilizer(data);
    CHECK(-1.0 - design.K(0, 0) < 0.0);
    CHECK(spectral_abscissa(sys.A - sys.B * design.K) < 0.0);
}

TEST_CASE("stabilizer handles the double integrator") {
    Matrix A(2, 2);
    A << 0, 1, 0, 0;
    Matrix B(2, 1);
    B << 0, 1;
    const LtiSystem sys = LtiSystem::state_output(A, B);
    const AgentData data = testutil::collect(sys, 107);
    const StabilizerDesign design = design_single_stabilizer(data);
    CHECK(spectral_abscissa(sys.A - sys.B * design.K) < 0.0);
    // retained certificate: P symmetric positive definite, loop certified in
    // the dual Lyapunov form
    CHECK(min_symmetric_eigenvalue(design.P) > 0.0);
    const Matrix acl = sys.A - sys.B * design.K;
    CHECK(max_symmetric_eigenvalue(sym(acl * design.P)) < 0.0);
}

TEST_CASE("global design reduces to single-agent stabilization for one pinned node") {
    Rng rng(109);
    const LtiSystem sys = testutil::random_controllable(rng, 2, 1);
    const AgentData data = testutil::collect(sys, 113);
    const Topology top(Matrix::Zero(1, 1), Vector::Ones(1));
    const GlobalSyncDesign design = design_global_sync(data, top);
    CHECK(design.margin >= 1e-6);
    CHECK(spectral_abscissa(sys.A - 1.0 * sys.B * design.K) < 0.0);
}

TEST_CASE("global design stabilizes the demo network") {
    Rng rng(127);
    const LtiSystem sys = testutil::random_controllable(rng, 3, 1);
    const AgentData data = testutil::collect(sys, 131);
    const Topology top = testutil::demo_topology();
    const GlobalSyncDesign design = design_global_sync(data, top);
    CHECK(design.margin >= 1e-6);

    const Matrix lg = laplacian(top) + Matrix(top.pinning.asDiagonal());
    const Matrix ac = kron(Matrix::Identity(4, 4), sys.A) - kron(lg, sys.B) * design.K;
    CHECK(spectral_abscissa(ac) < 0.0);
}

TEST_CASE("unexcited data are rejected before any solve") {
    const LtiSystem sys = LtiSystem::state_output(-Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    const Trajectory traj = simulate(sys, Vector::Ones(1), ZeroSignal(1), 6 * 0.37, 1e-3);
    const AgentData dead(build_data_matrices(traj, 0.37, 6));
    CHECK_THROWS_AS(design_global_sync(dead, testutil::demo_topology()), InfeasibleError);
    CHECK_THROWS_AS(design_distributed_sync(dead, testutil::demo_topology()), InfeasibleError);
}

TEST_CASE("distributed design on a single agent matches the global contract") {
    Rng rng(137);
    const LtiSystem sys = testutil::random_controllable(rng, 2, 1);
    const AgentData data = testutil::collect(sys, 139);
    const Topology top(Matrix::Zero(1, 1), Vector::Ones(1));
    const SyncCertificate cert = design_distributed_sync(data, top);
    REQUIRE(cert.K.size() == 1);
    CHECK(cert.margin >= 1e-6);
    CHECK(spectral_abscissa(sys.A - sys.B * cert.K[0]) < 0.0);
}

TEST_CASE("distributed design certifies the vehicle network") {
    const LtiSystem sys = testutil::vehicle_agent(1, 0, 1, 1);
    const AgentData data = testutil::collect(sys, 149);
    const Topology top = testutil::demo_topology();
    const SyncCertificate cert = design_distributed_sync(data, top);
    CHECK(cert.margin >= 1e-6);

    const Matrix ac = oracle::closed_loop_matrix(sys, top, cert.K);
    CHECK(spectral_abscissa(ac) < 0.0);

    SUBCASE("the global gain is exactly block diagonal") {
        const Matrix gain = cert.global_gain();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                if (i == j) continue;
                CHECK(gain.block(i, 3 * j, 1, 3).cwiseAbs().maxCoeff() <= 1e-10);
            }
    }

    SUBCASE("the returned blocks form a Lyapunov certificate for the true loop") {
        const Matrix p = cert.P_block();
        CHECK(min_symmetric_eigenvalue(p) > 0.0);
        CHECK(max_symmetric_eigenvalue(sym(ac * p)) < 0.0);
    }

    SUBCASE("the structured solution satisfies the unstructured constraints") {
        const ErrorDataMatrices em = build_error_data(data, top);
        const Matrix dx_lambda = em.Dx * cert.Lambda;
        CHECK((dx_lambda - dx_lambda.transpose()).cwiseAbs().maxCoeff() <= 1e-7);
        CHECK(min_symmetric_eigenvalue(sym(dx_lambda)) >= cert.margin - 1e-7);
        const Matrix lyap = em.Ddx * cert.Lambda + (em.Ddx * cert.Lambda).transpose();
        CHECK(max_symmetric_eigenvalue(lyap) <= -cert.margin + 1e-7);
        CHECK((em.U0 * cert.Lambda).cwiseAbs().maxCoeff() <= 1e-7);
        CHECK((em.Dx * cert.Lambda - cert.P_block()).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("hurwitz verdicts") {
    const auto stable = verify_hurwitz(-Matrix::Ones(1, 1));
    CHECK(stable.hurwitz);
    CHECK(std::abs(stable.abscissa + 1.0) <= 1e-12);

    Matrix chain(2, 2);
    chain << 0, 1, 0, 0;
    const auto marginal = verify_hurwitz(chain);
    CHECK_FALSE(marginal.hurwitz);
    CHECK(std::abs(marginal.abscissa) <= 1e-9);
}

TEST_CASE("certificates round-trip through the audit format") {
    const LtiSystem sys = testutil::vehicle_agent(1, 1, 2, 1);
    const AgentData data = testutil::collect(sys, 151);
    const Topology top(Matrix::Zero(1, 1), Vector::Ones(1));
    const SyncCertificate cert = design_distributed_sync(data, top);

    std::stringstream ss;
    io::write_archive(ss, io::to_archive(cert));
    const SyncCertificate back = io::certificate_from_archive(io::read_archive(ss));
    CHECK(back.margin == cert.margin);
    CHECK((back.Lambda - cert.Lambda).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.K[0] - cert.K[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.P[0] - cert.P[0]).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
