#pragma once

#include "dbsync/datarep.hpp"
#include "dbsync/lti.hpp"
#include "dbsync/oracle.hpp"
#include "dbsync/topology.hpp"
#include "dbsync/types.hpp"

namespace testutil {

using namespace dbsync;

// Vehicle-like chain: position, velocity, actuator lag with constants
// {a, b, c, d} entering the third row and the input column.
inline LtiSystem vehicle_agent(double a, double b, double c, double d) {
    Matrix A(3, 3);
    A << 0, 1, 0,
         0, 0, a,
         0, -b, -c;
    Matrix B(3, 1);
    B << 0, 0, d;
    Matrix C(1, 3);
    C << 1, 0, 0;
    return LtiSystem(A, B, C);
}

// Constant-velocity leader with position output.
inline LtiSystem ramp_leader() {
    Matrix A(2, 2);
    A << 0, 1,
         0, 0;
    Matrix C(1, 2);
    C << 1, 0;
    return LtiSystem(A, Matrix(2, 0), C);
}

// Four agents, edges 1->2, 1->3, 2->3, 3->4 with unit weights, leader pinned
// at agent 1.
inline Topology demo_topology() {
    Matrix a = Matrix::Zero(4, 4);
    a(1, 0) = 1.0;  // 1 -> 2
    a(2, 0) = 1.0;  // 1 -> 3
    a(2, 1) = 1.0;  // 2 -> 3
    a(3, 2) = 1.0;  // 3 -> 4
    Vector g = Vector::Zero(4);
    g(0) = 1.0;
    return Topology(a, g);
}

inline AgentData collect(const LtiSystem& sys, std::uint64_t seed, double T = 0.37,
                         double h = 1e-3, int columns = 0) {
    const int order = sys.n() + 1;
    const int M = columns > 0 ? columns : (sys.n() + 1) * (sys.m() + 1) + 2;
    const PcpeInput pcpe = generate_pcpe(sys.m(), order, T, M, seed);
    return collect_agent_data(sys, pcpe, Vector::Zero(sys.n()), h);
}

// Controllable draw with bounded instability so excitation data stay well
// scaled over [0, M*T).
inline LtiSystem random_controllable(Rng& rng, int n, int m) {
    for (;;) {
        Matrix A = rng.uniform_matrix(n, n);
        Matrix B = rng.uniform_matrix(n, m);
        if (!oracle::is_controllable(A, B, 1e-3)) continue;
        if (spectral_abscissa(A) > 1.0) continue;
        return LtiSystem::state_output(std::move(A), std::move(B));
    }
}

// Random directed graph whose leader reaches every agent: a rooted chain plus
// extra random edges and a pinned root.
inline Topology random_spanning_topology(Rng& rng, int N) {
    Matrix a = Matrix::Zero(N, N);
    for (int i = 1; i < N; ++i) {
        const int parent = static_cast<int>(rng.uniform(0.0, static_cast<double>(i) - 1e-12));
        a(i, parent) = rng.uniform(0.5, 1.5);
    }
    for (int extra = 0; extra < N; ++extra) {
        const int i = static_cast<int>(rng.uniform(0.0, static_cast<double>(N) - 1e-12));
        const int j = static_cast<int>(rng.uniform(0.0, static_cast<double>(N) - 1e-12));
        if (i != j) a(i, j) = rng.uniform(0.5, 1.5);
    }
    Vector g = Vector::Zero(N);
    g(0) = rng.uniform(0.5, 1.5);
    return Topology(a, g);
}

}  // namespace testutil
