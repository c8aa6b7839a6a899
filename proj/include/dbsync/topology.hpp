#pragma once

#include "dbsync/types.hpp"

namespace dbsync {

/// Directed weighted communication graph over N agents plus leader pinning
/// gains. adjacency(i, j) > 0 means agent i receives information from agent j.
struct Topology {
    int N = 0;
    Matrix adjacency;  // N x N, zero diagonal, nonnegative
    Vector pinning;    // N, nonnegative leader gains g_i

    Topology(Matrix a, Vector g);
};

/// L = D - A with D = diag of row sums; every row of L sums to zero.
Matrix laplacian(const Topology& top);

struct PinningMatrices {
    Matrix G;   // diag(g), N x N
    Matrix Lg;  // [-g  L+G], N x (N+1)
    Matrix Ig;  // [0   I_N], N x (N+1)
};

PinningMatrices pinning_matrices(const Topology& top);

struct SpanningTreeReport {
    bool leader_reaches_all = false;
    bool lg_nonsingular = false;
    double lg_min_singular_value = 0.0;

    explicit operator bool() const { return leader_reaches_all; }
};

/// Reachability of every agent from the leader on the augmented graph
/// (leader edges to agents with g_i > 0), plus a numerical nonsingularity
/// report for L + G (smallest singular value against 1e-12).
SpanningTreeReport check_spanning_tree_with_leader(const Topology& top);

}  // namespace dbsync
