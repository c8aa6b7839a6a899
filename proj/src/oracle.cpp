#include "dbsync/oracle.hpp"

#include "dbsync/linalg.hpp"
#include "dbsync/lmi.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace dbsync::oracle {

namespace {

double are_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& Rinv,
                    const Matrix& P) {
    return (Q + P * A + A.transpose() * P - P * B * Rinv * B.transpose() * P).norm();
}

// A^T P + P A + Q = 0 by Kronecker vectorization; small n only.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
    const int n = static_cast<int>(A.rows());
    const Matrix id = Matrix::Identity(n, n);
    const Matrix lhs = kron(id, A.transpose()) + kron(A.transpose(), id);
    const Vector rhs = -Eigen::Map<const Vector>(Q.data(), n * n);
    const Vector p = lhs.partialPivLu().solve(rhs);
    return sym(Eigen::Map<const Matrix>(p.data(), n, n));
}

}  // namespace

AreSolution solve_are(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    if (A.rows() != A.cols() || B.rows() != n || Q.rows() != n || Q.cols() != n ||
        R.rows() != m || R.cols() != m)
        throw DimensionError("solve_are: inconsistent dimensions");
    if (min_symmetric_eigenvalue(sym(Q)) <= 0.0 || min_symmetric_eigenvalue(sym(R)) <= 0.0)
        throw NumericalError("solve_are: Q and R must be positive definite");
    if (!is_controllable(A, B))
        throw NumericalError("solve_are: (A, B) is not controllable");

    const Matrix Rinv = guarded_inverse(sym(R), "solve_are: R");
    Matrix hamiltonian(2 * n, 2 * n);
    hamiltonian.topLeftCorner(n, n) = A;
    hamiltonian.topRightCorner(n, n) = -B * Rinv * B.transpose();
    hamiltonian.bottomLeftCorner(n, n) = -Q;
    hamiltonian.bottomRightCorner(n, n) = -A.transpose();

    Eigen::ComplexEigenSolver<Matrix> es(hamiltonian);
    if (es.info() != Eigen::Success) throw NumericalError("solve_are: eigen decomposition failed");

    Eigen::MatrixXcd stable(2 * n, n);
    int found = 0;
    for (int i = 0; i < 2 * n && found < n; ++i) {
        if (es.eigenvalues()(i).real() < 0.0) stable.col(found++) = es.eigenvectors().col(i);
    }
    if (found != n) throw NumericalError("solve_are: Hamiltonian stable subspace has wrong size");

    const Eigen::MatrixXcd x1 = stable.topRows(n);
    const Eigen::MatrixXcd x2 = stable.bottomRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(x1);
    if (!lu.isInvertible()) throw NumericalError("solve_are: singular subspace basis");
    Matrix P = sym((x2 * lu.inverse()).real());

    // Kleinman polish: quadratically convergent refinement from the subspace
    // estimate; keeps the stated residual bound comfortably.
    for (int it = 0; it < 25; ++it) {
        const double res = are_residual(A, B, Q, Rinv, P);
        if (res <= 1e-12 * (1.0 + P.norm())) break;
        const Matrix K = Rinv * B.transpose() * P;
        const Matrix acl = A - B * K;
        const Matrix next = solve_lyapunov(acl, Q + K.transpose() * R * K);
        if (!all_finite(next)) break;
        if ((next - P).norm() <= 1e-14 * (1.0 + P.norm())) {
            P = next;
            break;
        }
        P = next;
    }

    AreSolution sol;
    sol.P = P;
    sol.K = Rinv * B.transpose() * P;
    sol.Q = Q;
    sol.R = R;
    sol.residual = are_residual(A, B, Q, Rinv, P);
    if (sol.residual > 1e-8 * (1.0 + P.norm()))
        throw NumericalError("solve_are: residual " + std::to_string(sol.residual) +
                             " above tolerance");
    if (min_symmetric_eigenvalue(sol.P) <= 0.0)
        throw NumericalError("solve_are: solution is not positive definite");
    return sol;
}

DiagonalScaling find_diagonal_S(const Topology& top) {
    const Matrix lg = laplacian(top) + Matrix(top.pinning.asDiagonal());
    const int N = top.N;
    const Matrix id = Matrix::Identity(N, N);

    lmi::FeasibilityProblem prob;
    const int s_block = prob.add_diagonal_unknown("S", N);
    {
        lmi::MatrixExpr positive(N, N);
        positive.add_term(id, s_block, id);
        prob.require_positive_definite(std::move(positive));
    }
    {
        lmi::MatrixExpr qbar(N, N);
        qbar.add_term(id, s_block, lg);
        qbar.add_term(lg.transpose(), s_block, id);
        prob.require_positive_definite(std::move(qbar));
    }

    const lmi::FeasibilityResult res = lmi::solve_feasibility(prob);
    if (!res.feasible)
        throw InfeasibleError("find_diagonal_S: no positive diagonal scaling exists; "
                              "the leader-rooted spanning tree assumption fails",
                              res.margin);

    DiagonalScaling scaling;
    Matrix s_mat = res.values[static_cast<std::size_t>(s_block)];
    // The program is a cone; normalize to max entry 1.
    s_mat /= s_mat.diagonal().maxCoeff();
    scaling.s = s_mat.diagonal();
    scaling.Qbar = s_mat * lg + lg.transpose() * s_mat;
    scaling.min_eig = min_symmetric_eigenvalue(sym(scaling.Qbar));
    return scaling;
}

ModelSyncGain model_sync_gain(const LtiSystem& sys, const Topology& top, const Matrix& Q,
                              const Matrix& R) {
    ModelSyncGain result;
    result.are = solve_are(sys.A, sys.B, Q, R);
    result.scaling = find_diagonal_S(top);

    std::vector<Matrix> p_blocks;
    for (int i = 0; i < top.N; ++i) p_blocks.push_back(result.scaling.s(i) * result.are.P);
    result.P = blkdiag(p_blocks);

    for (double c = 1.0; c <= static_cast<double>(1 << 20); c *= 2.0) {
        const Matrix K = c * result.are.K;
        const Matrix ac = closed_loop_matrix(sys, top, K);
        const Matrix lyap = result.P * ac + ac.transpose() * result.P;
        const double max_eig = max_symmetric_eigenvalue(sym(lyap));
        if (max_eig <= -1e-9) {
            result.c = c;
            result.K = K;
            result.lyap_max_eig = max_eig;
            return result;
        }
    }
    throw NumericalError("model_sync_gain: no coupling gain up to 2^20 was certified");
}

Matrix closed_loop_matrix(const LtiSystem& sys, const Topology& top,
                          const std::vector<Matrix>& gains) {
    if (static_cast<int>(gains.size()) != top.N)
        throw DimensionError("closed_loop_matrix: one gain per agent required");
    const Matrix lg = laplacian(top) + Matrix(top.pinning.asDiagonal());
    const Matrix id = Matrix::Identity(top.N, top.N);
    return kron(id, sys.A) - kron(lg, sys.B) * blkdiag(gains);
}

Matrix closed_loop_matrix(const LtiSystem& sys, const Topology& top, const Matrix& gain) {
    return closed_loop_matrix(sys, top, std::vector<Matrix>(static_cast<std::size_t>(top.N), gain));
}

bool is_controllable(const Matrix& A, const Matrix& B, double rel_tol) {
    const int n = static_cast<int>(A.rows());
    if (B.rows() != n) throw DimensionError("is_controllable: B row count must equal n");
    if (B.cols() == 0) return n == 0;
    Matrix ctrb(n, n * B.cols());
    Matrix power = B;
    for (int k = 0; k < n; ++k) {
        ctrb.middleCols(k * B.cols(), B.cols()) = power;
        power = A * power;
    }
    return rank_svd(ctrb, rel_tol) == n;
}

}  // namespace dbsync::oracle
