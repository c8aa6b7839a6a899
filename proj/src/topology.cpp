#include "dbsync/topology.hpp"

#include "dbsync/linalg.hpp"

#include <queue>
#include <vector>

namespace dbsync {

Topology::Topology(Matrix a, Vector g) : adjacency(std::move(a)), pinning(std::move(g)) {
    if (adjacency.rows() != adjacency.cols())
        throw DimensionError("Topology: adjacency matrix must be square");
    if (pinning.size() != adjacency.rows())
        throw DimensionError("Topology: pinning vector length must equal agent count");
    N = static_cast<int>(adjacency.rows());
    if (N < 1) throw DimensionError("Topology: need at least one agent");
    if (!all_finite(adjacency) || !all_finite(pinning))
        throw DimensionError("Topology: weights must be finite");
    for (int i = 0; i < N; ++i) {
        if (adjacency(i, i) != 0.0) throw DimensionError("Topology: self-loops are not allowed");
        if (pinning(i) < 0.0) throw DimensionError("Topology: pinning gains must be >= 0");
        for (int j = 0; j < N; ++j)
            if (adjacency(i, j) < 0.0) throw DimensionError("Topology: weights must be >= 0");
    }
}

Matrix laplacian(const Topology& top) {
    const Vector in_degree = top.adjacency.rowwise().sum();
    Matrix L = -top.adjacency;
    L.diagonal() += in_degree;
    return L;
}

PinningMatrices pinning_matrices(const Topology& top) {
    PinningMatrices pm;
    pm.G = top.pinning.asDiagonal();
    const Matrix lg_right = laplacian(top) + pm.G;
    pm.Lg.resize(top.N, top.N + 1);
    pm.Lg.col(0) = -top.pinning;
    pm.Lg.rightCols(top.N) = lg_right;
    pm.Ig.resize(top.N, top.N + 1);
    pm.Ig.col(0).setZero();
    pm.Ig.rightCols(top.N) = Matrix::Identity(top.N, top.N);
    return pm;
}

SpanningTreeReport check_spanning_tree_with_leader(const Topology& top) {
    SpanningTreeReport report;

    std::vector<bool> visited(static_cast<std::size_t>(top.N), false);
    std::queue<int> frontier;
    for (int i = 0; i < top.N; ++i) {
        if (top.pinning(i) > 0.0) {
            visited[static_cast<std::size_t>(i)] = true;
            frontier.push(i);
        }
    }
    while (!frontier.empty()) {
        const int j = frontier.front();
        frontier.pop();
        for (int i = 0; i < top.N; ++i) {
            // information flows j -> i when a_ij > 0
            if (!visited[static_cast<std::size_t>(i)] && top.adjacency(i, j) > 0.0) {
                visited[static_cast<std::size_t>(i)] = true;
                frontier.push(i);
            }
        }
    }
    report.leader_reaches_all = true;
    for (bool v : visited) report.leader_reaches_all = report.leader_reaches_all && v;

    const Matrix lg = laplacian(top) + Matrix(top.pinning.asDiagonal());
    report.lg_min_singular_value = min_singular_value(lg);
    report.lg_nonsingular = report.lg_min_singular_value > 1e-12;
    return report;
}

}  // namespace dbsync
