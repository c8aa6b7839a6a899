#include "dbsync/datarep.hpp"

#include "dbsync/linalg.hpp"
#include "helpers.hpp"

#include "doctest.h"

#include <cmath>

using namespace dbsync;

namespace {

AgentData scalar_decay_data(std::uint64_t seed = 5) {
    const LtiSystem sys = LtiSystem::state_output(-Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    return testutil::collect(sys, seed, 0.37, 1e-3, 6);
}

AgentData zero_input_data(const LtiSystem& sys, int M) {
    const Trajectory traj = simulate(sys, Vector::Ones(sys.n()), ZeroSignal(sys.m()),
                                     M * 0.37, 1e-3);
    return AgentData(build_data_matrices(traj, 0.37, M));
}

}  // namespace

TEST_SUITE("datarep") {

TEST_CASE("excited data pass the rank check, unexcited data do not") {
    CHECK(pe_rank_check(scalar_decay_data()));

    const LtiSystem sys = LtiSystem::state_output(-Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    CHECK_FALSE(pe_rank_check(zero_input_data(sys, 6)));

    // fewer columns than m + n can never reach the rank
    const Trajectory traj = simulate(sys, Vector::Ones(1), ZeroSignal(1), 0.37, 1e-3);
    CHECK_FALSE(pe_rank_check(AgentData(build_data_matrices(traj, 0.37, 1))));
}

TEST_CASE("representation reproduces a recorded data column") {
    const AgentData data = scalar_decay_data();
    const Vector u0 = data.Hu().col(1);
    const Vector x0 = data.Hx0().col(1);
    const Vector alpha = represent_initial(data, u0, x0);
    CHECK(std::abs(data.Hu().row(0).dot(alpha) - u0(0)) <= 1e-9);
    CHECK(std::abs(data.Hx0().row(0).dot(alpha) - x0(0)) <= 1e-9);
}

TEST_CASE("the zero request admits the zero coefficient vector") {
    const AgentData data = scalar_decay_data();
    const Vector alpha = represent_initial(data, Vector::Zero(1), Vector::Zero(1));
    CHECK(alpha.norm() <= 1e-12);
}

TEST_CASE("random initial pairs are matched within tolerance") {
    Rng rng(31);
    const LtiSystem sys = testutil::random_controllable(rng, 3, 1);
    const AgentData data = testutil::collect(sys, 41);
    REQUIRE(pe_rank_check(data));
    for (int trial = 0; trial < 5; ++trial) {
        const Vector u0 = rng.uniform_vector(1);
        const Vector x0 = rng.uniform_vector(3);
        const Vector alpha = represent_initial(data, u0, x0);
        Vector rhs(4);
        rhs << u0, x0;
        Matrix lhs(4, data.M());
        lhs.topRows(1) = data.Hu();
        lhs.bottomRows(3) = data.Hx0();
        CHECK((lhs * alpha - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }
}

TEST_CASE("unforced data-based path matches the scalar exponential") {
    const AgentData data = scalar_decay_data();
    const UnforcedPath path = unforced_trajectory(data, 2.0 * Vector::Ones(1));
    double worst = 0.0;
    for (int s = 0; s < path.x.cols(); ++s) {
        const double t = s * path.step;
        worst = std::max(worst, std::abs(path.x(0, s) - 2.0 * std::exp(-t)));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("zero initial state replays the zero trajectory") {
    const AgentData data = scalar_decay_data();
    const UnforcedPath path = unforced_trajectory(data, Vector::Zero(1));
    CHECK(path.x.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("unforced rotation matches the closed form") {
    Matrix A(2, 2);
    A << 0, 1, -1, 0;
    Matrix B(2, 1);
    B << 0, 1;
    const LtiSystem sys = LtiSystem::state_output(A, B);
    const AgentData data = testutil::collect(sys, 13);
    REQUIRE(pe_rank_check(data));
    Vector x0(2);
    x0 << 1, 0;
    const UnforcedPath path = unforced_trajectory(data, x0);
    double worst = 0.0;
    for (int s = 0; s < path.x.cols(); ++s) {
        const double t = s * path.step;
        Vector expected(2);
        expected << std::cos(t), -std::sin(t);
        worst = std::max(worst, (path.x.col(s) - expected).norm());
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("derivative family differentiates the state family") {
    Rng rng(59);
    const LtiSystem sys = testutil::random_controllable(rng, 2, 1);
    const AgentData data = testutil::collect(sys, 61);
    // any alpha in the kernel of Hu generates an unforced path
    const Vector alpha = represent_initial(data, Vector::Zero(1), rng.uniform_vector(2));
    const int grid = data.data.Hx.grid_size();
    double worst = 0.0;
    for (int s = 1; s + 1 < grid; ++s) {
        const Vector numeric = (data.data.Hx.at_index(s + 1) * alpha -
                                data.data.Hx.at_index(s - 1) * alpha) /
                               (2.0 * data.step());
        const Vector analytic = data.data.Hdx.at_index(s) * alpha;
        worst = std::max(worst, (numeric - analytic).norm());
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("error data factors for a single pinned agent") {
    const AgentData data = scalar_decay_data();
    const Topology top(Matrix::Zero(1, 1), Vector::Ones(1));
    const ErrorDataMatrices em = build_error_data(data, top);
    const int M = data.M();
    CHECK((em.Dx.leftCols(M) + data.Hx0()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((em.Dx.rightCols(M) - data.Hx0()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((em.U0.leftCols(M) - data.Hu()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(em.U0.rightCols(M).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("error data dimensions follow the network size") {
    Rng rng(67);
    const LtiSystem sys = testutil::random_controllable(rng, 3, 1);
    const AgentData data = testutil::collect(sys, 71, 0.37, 1e-3, 10);
    const Topology top = testutil::demo_topology();
    const ErrorDataMatrices em = build_error_data(data, top);
    CHECK(em.Dx.rows() == 12);
    CHECK(em.Dx.cols() == 50);
    CHECK(em.Ddx.rows() == 12);
    CHECK(em.Du.rows() == 4);
    CHECK(em.Du.cols() == 50);
    CHECK(em.U0.rows() == 1);
    CHECK(em.U0.cols() == 50);
}

TEST_CASE("an empty graph zeroes the error factors") {
    const AgentData data = scalar_decay_data();
    const Topology top(Matrix::Zero(2, 2), Vector::Zero(2));
    const ErrorDataMatrices em = build_error_data(data, top);
    CHECK(em.Dx.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stacked disagreement equals the per-agent formula") {
    Rng rng(73);
    const LtiSystem sys = testutil::random_controllable(rng, 2, 1);
    const AgentData data = testutil::collect(sys, 79);
    const Topology top = testutil::demo_topology();
    const ErrorDataMatrices em = build_error_data(data, top);
    const int N = top.N;
    const int M = data.M();

    // leader coefficients must satisfy Hu alpha0 = 0
    const Vector alpha0 = represent_initial(data, Vector::Zero(1), rng.uniform_vector(2));
    Vector stacked((N + 1) * M);
    stacked.head(M) = alpha0;
    std::vector<Vector> alphas;
    for (int i = 0; i < N; ++i) {
        alphas.push_back(rng.uniform_vector(M));
        stacked.segment((i + 1) * M, M) = alphas.back();
    }

    const Vector delta_data = em.Dx * stacked;
    const Vector x0 = data.Hx0() * alpha0;
    std::vector<Vector> x;
    for (int i = 0; i < N; ++i) x.push_back(data.Hx0() * alphas[static_cast<std::size_t>(i)]);
    for (int i = 0; i < N; ++i) {
        Vector delta_i = Vector::Zero(2);
        for (int j = 0; j < N; ++j)
            if (top.adjacency(i, j) != 0.0)
                delta_i += top.adjacency(i, j) * (x[static_cast<std::size_t>(i)] -
                                                  x[static_cast<std::size_t>(j)]);
        delta_i += top.pinning(i) * (x[static_cast<std::size_t>(i)] - x0);
        CHECK((delta_data.segment(2 * i, 2) - delta_i).norm() <= 1e-9);
    }
}

TEST_CASE("Kronecker factors multiply ranks") {
    Rng rng(83);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix a = rng.uniform_matrix(3, 4);
        const Matrix b = rng.uniform_matrix(2, 5);
        CHECK(rank_svd(kron(a, b)) == rank_svd(a) * rank_svd(b));
    }
}

TEST_CASE("stacked rank holds on the demo graph and fails degenerate inputs") {
    Rng rng(89);
    const LtiSystem sys = testutil::random_controllable(rng, 2, 1);
    const AgentData data = testutil::collect(sys, 97);
    const Topology top = testutil::demo_topology();
    CHECK(stacked_rank_check(data, top));

    // leaderless empty graph: Lg loses row rank
    const Topology loose(Matrix::Zero(4, 4), Vector::Zero(4));
    CHECK_FALSE(stacked_rank_check(data, loose));

    // unexcited data
    CHECK_FALSE(stacked_rank_check(zero_input_data(sys, data.M()), top));
}

}  // TEST_SUITE
