#include "dbsync/datarep.hpp"

#include "dbsync/linalg.hpp"

#include <string>

namespace dbsync {

AgentData::AgentData(DataMatrixSet set) : data(std::move(set)) {
    if (data.Hx.grid_size() < 1) throw DimensionError("AgentData: empty state family");
    if (data.Hdx.grid_size() != data.Hx.grid_size() || data.Hy.grid_size() != data.Hx.grid_size())
        throw DimensionError("AgentData: family grids differ across channels");
    n = static_cast<int>(Hx0().rows());
    m = static_cast<int>(Hu().rows());
    p = static_cast<int>(Hy0().rows());
    if (Hu().cols() != data.M || Hx0().cols() != data.M || Hdx0().cols() != data.M ||
        Hy0().cols() != data.M)
        throw DimensionError("AgentData: column counts must all equal M");
    if (Hdx0().rows() != n) throw DimensionError("AgentData: state/derivative row mismatch");
}

AgentData collect_agent_data(const LtiSystem& sys, const PcpeInput& input, const Vector& x0,
                             double h) {
    if (input.dim() != sys.m()) throw DimensionError("collect_agent_data: input dimension mismatch");
    const double duration = input.hold_period * input.holds();
    const PcpeSignal signal(input);
    const Trajectory traj = simulate(sys, x0, signal, duration, h);
    return AgentData(build_data_matrices(traj, input.hold_period, input.holds()));
}

namespace {

// t = 0 plus 9 further equispaced grid indices in [0, T).
std::vector<int> sampled_indices(int grid_size) {
    std::vector<int> idx;
    for (int q = 0; q < 10; ++q) {
        const int i = static_cast<int>((static_cast<long>(q) * grid_size) / 10);
        if (idx.empty() || idx.back() != i) idx.push_back(i);
    }
    return idx;
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

}  // namespace

bool pe_rank_check(const AgentData& data) {
    const int want = data.m + data.n;
    if (data.M() < want) return false;
    for (int i : sampled_indices(data.data.Hx.grid_size())) {
        if (rank_svd(stack_rows(data.Hu(), data.data.Hx.at_index(i))) != want) return false;
    }
    return true;
}

Vector represent_initial(const AgentData& data, const Vector& u0, const Vector& x0) {
    if (u0.size() != data.m || x0.size() != data.n)
        throw DimensionError("represent_initial: target dimensions mismatch");
    const Matrix lhs = stack_rows(data.Hu(), data.Hx0());
    Vector rhs(data.m + data.n);
    rhs.head(data.m) = u0;
    rhs.tail(data.n) = x0;
    const Vector alpha = min_norm_solve(lhs, rhs);
    const double residual = (lhs * alpha - rhs).norm();
    if (residual > 1e-9 * (1.0 + rhs.norm()))
        throw RepresentationError("represent_initial: residual " + std::to_string(residual) +
                                  " exceeds tolerance; data do not span the request");
    return alpha;
}

UnforcedPath unforced_trajectory(const AgentData& data, const Vector& x0) {
    UnforcedPath path;
    path.alpha = represent_initial(data, Vector::Zero(data.m), x0);
    path.step = data.step();
    const int grid = data.data.Hx.grid_size();
    path.x.resize(data.n, grid);
    path.dx.resize(data.n, grid);
    for (int i = 0; i < grid; ++i) {
        path.x.col(i) = data.data.Hx.at_index(i) * path.alpha;
        path.dx.col(i) = data.data.Hdx.at_index(i) * path.alpha;
    }
    return path;
}

ErrorDataMatrices build_error_data(const AgentData& data, const Topology& top) {
    const PinningMatrices pm = pinning_matrices(top);
    ErrorDataMatrices em;
    em.N = top.N;
    em.n = data.n;
    em.m = data.m;
    em.M = data.M();
    em.Dx = kron(pm.Lg, data.Hx0());
    em.Ddx = kron(pm.Lg, data.Hdx0());
    em.Du = kron(pm.Ig, data.Hu());
    em.U0 = Matrix::Zero(data.m, static_cast<long>(data.M()) * (top.N + 1));
    em.U0.leftCols(data.M()) = data.Hu();
    return em;
}

bool stacked_rank_check(const AgentData& data, const Topology& top) {
    const PinningMatrices pm = pinning_matrices(top);
    const Matrix upper = kron(Matrix::Identity(top.N + 1, top.N + 1), data.Hu());
    const Matrix lower = kron(pm.Lg, data.Hx0());
    const int want = data.m * (top.N + 1) + data.n * top.N;
    return rank_svd(stack_rows(upper, lower)) == want;
}

}  // namespace dbsync
