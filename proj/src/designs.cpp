#include "dbsync/linalg.hpp"
#include "dbsync/lmi.hpp"

#include <string>
#include <vector>

namespace dbsync::lmi {

namespace {

// Column selector embedding block i of size rows into a stack of N blocks.
Matrix block_selector(int N, int rows, int i) {
    Matrix sel = Matrix::Zero(N * rows, rows);
    sel.block(i * rows, 0, rows, rows) = Matrix::Identity(rows, rows);
    return sel;
}

void require_network_preconditions(const AgentData& data, const Topology& top,
                                   const std::string& who) {
    if (!check_spanning_tree_with_leader(top))
        throw InfeasibleError(who + ": the leader does not reach every agent", 0.0);
    if (!stacked_rank_check(data, top))
        throw InfeasibleError(who + ": stacked excitation rank condition fails", 0.0);
}

}  // namespace

StabilizerDesign design_single_stabilizer(const AgentData& data, SolverOptions opts) {
    if (data.m < 1)
        throw DimensionError("design_single_stabilizer: the system has no inputs");
    if (!pe_rank_check(data))
        throw InfeasibleError("design_single_stabilizer: excitation rank condition fails", 0.0);

    const int n = data.n;
    const Matrix& hx = data.Hx0();
    const Matrix& hdx = data.Hdx0();
    const Matrix& hu = data.Hu();
    const Matrix id_n = Matrix::Identity(n, n);

    FeasibilityProblem prob;
    const int lam = prob.add_unknown("Lambda", data.M(), n);

    MatrixExpr p_expr(n, n);
    p_expr.add_term(hx, lam, id_n);
    MatrixExpr p_skew(n, n);
    p_skew.add_term(hx, lam, id_n);
    p_skew.add_term(-id_n, lam, hx.transpose(), /*transpose_unknown=*/true);
    prob.require_zero(p_skew);  // Hx(0) Lambda symmetric
    prob.require_positive_definite(p_expr.symmetrized());

    MatrixExpr lyap(n, n);
    lyap.add_term(hdx, lam, id_n);
    prob.require_negative_definite(lyap.symmetrized());

    const FeasibilityResult res = solve_feasibility(prob, opts);
    if (!res.feasible)
        throw InfeasibleError("design_single_stabilizer: infeasible, " + res.detail, res.margin);

    StabilizerDesign design;
    design.Lambda = res.values[static_cast<std::size_t>(lam)];
    design.P = sym(hx * design.Lambda);
    design.K = -hu * design.Lambda * guarded_inverse(design.P, "design_single_stabilizer: P");
    design.margin = res.margin;
    return design;
}

GlobalSyncDesign design_global_sync(const AgentData& data, const Topology& top,
                                    SolverOptions opts) {
    require_network_preconditions(data, top, "design_global_sync");
    const ErrorDataMatrices em = build_error_data(data, top);
    const int nn = em.n * em.N;
    const Matrix id = Matrix::Identity(nn, nn);

    FeasibilityProblem prob;
    const int lam = prob.add_unknown("Lambda", static_cast<int>(em.Dx.cols()), nn);

    MatrixExpr leader_unforced(em.m, nn);
    leader_unforced.add_term(em.U0, lam, id);
    prob.require_zero(leader_unforced);

    MatrixExpr p_skew(nn, nn);
    p_skew.add_term(em.Dx, lam, id);
    p_skew.add_term(-id, lam, em.Dx.transpose(), /*transpose_unknown=*/true);
    prob.require_zero(p_skew);

    MatrixExpr p_expr(nn, nn);
    p_expr.add_term(em.Dx, lam, id);
    prob.require_positive_definite(p_expr.symmetrized());

    MatrixExpr lyap(nn, nn);
    lyap.add_term(em.Ddx, lam, id);
    prob.require_negative_definite(lyap.symmetrized());

    const FeasibilityResult res = solve_feasibility(prob, opts);
    if (!res.feasible)
        throw InfeasibleError("design_global_sync: infeasible, " + res.detail, res.margin);

    GlobalSyncDesign design;
    design.Lambda = res.values[static_cast<std::size_t>(lam)];
    design.P = sym(em.Dx * design.Lambda);
    design.K = -(em.Du * design.Lambda) * guarded_inverse(design.P, "design_global_sync: P");
    design.margin = res.margin;
    return design;
}

Matrix SyncCertificate::global_gain() const { return blkdiag(K); }

Matrix SyncCertificate::P_block() const { return blkdiag(P); }

SyncCertificate design_distributed_sync(const AgentData& data, const Topology& top,
                                        SolverOptions opts) {
    require_network_preconditions(data, top, "design_distributed_sync");
    const ErrorDataMatrices em = build_error_data(data, top);
    const int N = em.N;
    const int n = em.n;
    const int m = em.m;
    const int nn = n * N;
    const Matrix id = Matrix::Identity(nn, nn);

    FeasibilityProblem prob;
    const int lam = prob.add_unknown("Lambda", static_cast<int>(em.Dx.cols()), nn);
    std::vector<int> p_blocks, f_blocks;
    for (int i = 0; i < N; ++i) {
        p_blocks.push_back(prob.add_symmetric_unknown("P_" + std::to_string(i + 1), n));
        f_blocks.push_back(prob.add_unknown("F_" + std::to_string(i + 1), m, n));
    }

    // Dx Lambda = blkdiag{P_i}
    MatrixExpr structure_p(nn, nn);
    structure_p.add_term(em.Dx, lam, id);
    for (int i = 0; i < N; ++i) {
        const Matrix sel = block_selector(N, n, i);
        structure_p.add_term(-sel, p_blocks[static_cast<std::size_t>(i)], sel.transpose());
    }
    prob.require_zero(structure_p);

    // Du Lambda = -blkdiag{F_i}; the sign makes K_i = F_i P_i^{-1} the gain of
    // the certified loop u = -K delta.
    MatrixExpr structure_f(m * N, nn);
    structure_f.add_term(em.Du, lam, id);
    for (int i = 0; i < N; ++i) {
        structure_f.add_term(block_selector(N, m, i), f_blocks[static_cast<std::size_t>(i)],
                             block_selector(N, n, i).transpose());
    }
    prob.require_zero(structure_f);

    MatrixExpr leader_unforced(m, nn);
    leader_unforced.add_term(em.U0, lam, id);
    prob.require_zero(leader_unforced);

    for (int i = 0; i < N; ++i) {
        MatrixExpr positive(n, n);
        positive.add_term(Matrix::Identity(n, n), p_blocks[static_cast<std::size_t>(i)],
                          Matrix::Identity(n, n));
        prob.require_positive_definite(std::move(positive));
    }

    MatrixExpr lyap(nn, nn);
    lyap.add_term(em.Ddx, lam, id);
    prob.require_negative_definite(lyap.symmetrized());

    const FeasibilityResult res = solve_feasibility(prob, opts);
    if (!res.feasible)
        throw InfeasibleError("design_distributed_sync: infeasible, " + res.detail, res.margin);

    SyncCertificate cert;
    cert.Lambda = res.values[static_cast<std::size_t>(lam)];
    cert.margin = res.margin;
    for (int i = 0; i < N; ++i) {
        cert.P.push_back(sym(res.values[static_cast<std::size_t>(p_blocks[static_cast<std::size_t>(i)])]));
        cert.F.push_back(res.values[static_cast<std::size_t>(f_blocks[static_cast<std::size_t>(i)])]);
        cert.K.push_back(cert.F.back() *
                         guarded_inverse(cert.P.back(),
                                         "design_distributed_sync: P_" + std::to_string(i + 1)));
    }
    return cert;
}

}  // namespace dbsync::lmi
