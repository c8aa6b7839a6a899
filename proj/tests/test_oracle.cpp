#include "dbsync/oracle.hpp"

#include "dbsync/linalg.hpp"
#include "helpers.hpp"

#include "doctest.h"

#include <cmath>

using namespace dbsync;
using namespace dbsync::oracle;

TEST_SUITE("oracle") {

TEST_CASE("scalar Riccati solutions match the quadratic formula") {
    SUBCASE("integrator") {
        const AreSolution sol =
            solve_are(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                      Matrix::Ones(1, 1));
        CHECK(std::abs(sol.P(0, 0) - 1.0) <= 1e-9);
        CHECK(std::abs(sol.K(0, 0) - 1.0) <= 1e-9);
    }
    SUBCASE("unstable scalar") {
        const AreSolution sol =
            solve_are(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                      Matrix::Ones(1, 1));
        CHECK(std::abs(sol.P(0, 0) - (1.0 + std::sqrt(2.0))) <= 1e-9);
    }
}

TEST_CASE("double integrator Riccati solve stays within the residual bound") {
    Matrix A(2, 2);
    A << 0, 1, 0, 0;
    Matrix B(2, 1);
    B << 0, 1;
    const AreSolution sol = solve_are(A, B, Matrix::Identity(2, 2), Matrix::Ones(1, 1));
    CHECK(sol.residual <= 1e-8 * (1.0 + sol.P.norm()));
    CHECK(min_symmetric_eigenvalue(sol.P) > 0.0);
    CHECK(spectral_abscissa(A - B * sol.K) < 0.0);
}

TEST_CASE("random Riccati instances satisfy the residual and definiteness bounds") {
    Rng rng(157);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform(0.0, 3.0));
        const int m = 1 + static_cast<int>(rng.uniform(0.0, 2.0));
        const LtiSystem sys = testutil::random_controllable(rng, n, m);
        const AreSolution sol =
            solve_are(sys.A, sys.B, Matrix::Identity(n, n), Matrix::Identity(m, m));
        CHECK(sol.residual <= 1e-8 * (1.0 + sol.P.norm()));
        CHECK(min_symmetric_eigenvalue(sol.P) > 0.0);
    }
}

TEST_CASE("uncontrollable pairs are refused") {
    Matrix A(2, 2);
    A << 1, 0, 0, 2;
    Matrix B(2, 1);
    B << 1, 0;
    CHECK_THROWS_AS(solve_are(A, B, Matrix::Identity(2, 2), Matrix::Ones(1, 1)), NumericalError);
}

TEST_CASE("diagonal scaling of a single pinned node") {
    const Topology top(Matrix::Zero(1, 1), Vector::Ones(1));
    const DiagonalScaling scaling = find_diagonal_S(top);
    CHECK(std::abs(scaling.s(0) - 1.0) <= 1e-9);
    CHECK(std::abs(scaling.Qbar(0, 0) - 2.0) <= 1e-9);
    CHECK(std::abs(scaling.min_eig - 2.0) <= 1e-9);
}

TEST_CASE("diagonal scaling exists on the demo graph") {
    const DiagonalScaling scaling = find_diagonal_S(testutil::demo_topology());
    CHECK(scaling.s.minCoeff() > 0.0);
    CHECK(scaling.min_eig > 0.0);
}

TEST_CASE("diagonal scaling fails without leader access") {
    const Topology top(Matrix::Zero(2, 2), Vector::Zero(2));
    CHECK_THROWS_AS(find_diagonal_S(top), InfeasibleError);
}

TEST_CASE("coupling-gain search on the pinned scalar integrator") {
    const LtiSystem sys = LtiSystem::state_output(Matrix::Zero(1, 1), Matrix::Ones(1, 1));
    const Topology top(Matrix::Zero(1, 1), Vector::Ones(1));
    const ModelSyncGain gain =
        model_sync_gain(sys, top, Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    CHECK(gain.c <= 2.0);
    CHECK(gain.lyap_max_eig <= -1e-9);
    CHECK(std::abs(gain.K(0, 0) - gain.c * gain.are.K(0, 0)) <= 1e-12);
}

TEST_CASE("coupling-gain search certifies the vehicle network") {
    const LtiSystem sys = testutil::vehicle_agent(1, 0, 1, 1);
    const Topology top = testutil::demo_topology();
    const ModelSyncGain gain =
        model_sync_gain(sys, top, Matrix::Identity(3, 3), Matrix::Ones(1, 1));
    CHECK(gain.c >= 1.0);
    CHECK(gain.lyap_max_eig <= -1e-9);

    const Matrix ac = closed_loop_matrix(sys, top, gain.K);
    CHECK(spectral_abscissa(ac) < 0.0);
    const Matrix lyap = gain.P * ac + ac.transpose() * gain.P;
    CHECK(max_symmetric_eigenvalue(sym(lyap)) <= -1e-9);
}

TEST_CASE("block-diagonal certificates exist on random networks") {
    Rng rng(163);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform(0.0, 3.0));
        const int N = 2 + static_cast<int>(rng.uniform(0.0, 4.0));
        const LtiSystem sys = testutil::random_controllable(rng, n, 1);
        const Topology top = testutil::random_spanning_topology(rng, N);
        const ModelSyncGain gain =
            model_sync_gain(sys, top, Matrix::Identity(n, n), Matrix::Ones(1, 1));
        CHECK(gain.lyap_max_eig <= -1e-9);
        CHECK(min_symmetric_eigenvalue(gain.P) > 0.0);
        CHECK(spectral_abscissa(closed_loop_matrix(sys, top, gain.K)) < 0.0);
    }
}

TEST_CASE("the scaling gate fires before the gain search on bad graphs") {
    const LtiSystem sys = LtiSystem::state_output(Matrix::Zero(1, 1), Matrix::Ones(1, 1));
    const Topology top(Matrix::Zero(1, 1), Vector::Zero(1));
    CHECK_THROWS_AS(model_sync_gain(sys, top, Matrix::Ones(1, 1), Matrix::Ones(1, 1)),
                    InfeasibleError);
}

}  // TEST_SUITE
