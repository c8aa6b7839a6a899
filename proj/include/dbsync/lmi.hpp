#pragma once

#include "dbsync/datarep.hpp"
#include "dbsync/topology.hpp"
#include "dbsync/types.hpp"

#include <string>
#include <vector>

namespace dbsync::lmi {

enum class BlockKind { Dense, Symmetric, Diagonal };

struct UnknownBlock {
    std::string name;
    BlockKind kind = BlockKind::Dense;
    int rows = 0;
    int cols = 0;
};

/// Affine matrix-valued expression in the unknown blocks:
///   constant + sum of terms  left * X_u * right   (optionally X_u transposed).
class MatrixExpr {
public:
    MatrixExpr(int rows, int cols) : constant_(Matrix::Zero(rows, cols)) {}
    explicit MatrixExpr(Matrix constant) : constant_(std::move(constant)) {}

    int rows() const { return static_cast<int>(constant_.rows()); }
    int cols() const { return static_cast<int>(constant_.cols()); }

    MatrixExpr& add_term(const Matrix& left, int unknown, const Matrix& right,
                         bool transpose_unknown = false);
    MatrixExpr& add_constant(const Matrix& c);

    // expr + expr^T of this expression.
    MatrixExpr symmetrized() const;

    Matrix eval(const std::vector<Matrix>& values) const;

    struct Term {
        Matrix left;
        int unknown;
        Matrix right;
        bool transpose_unknown;
    };
    const std::vector<Term>& terms() const { return terms_; }
    const Matrix& constant() const { return constant_; }

private:
    Matrix constant_;
    std::vector<Term> terms_;
};

enum class Sense { PositiveDefinite, NegativeDefinite };

/// Unknown matrix blocks, affine equality constraints (expr == 0) and affine
/// symmetric-matrix inequality constraints (expr > 0 or expr < 0 in the
/// definite order).
class FeasibilityProblem {
public:
    int add_unknown(const std::string& name, int rows, int cols);
    int add_symmetric_unknown(const std::string& name, int n);
    int add_diagonal_unknown(const std::string& name, int n);

    void require_zero(MatrixExpr expr);
    void require_positive_definite(MatrixExpr expr);
    void require_negative_definite(MatrixExpr expr);

    const std::vector<UnknownBlock>& unknowns() const { return unknowns_; }
    const std::vector<MatrixExpr>& equalities() const { return equalities_; }
    const std::vector<std::pair<MatrixExpr, Sense>>& inequalities() const { return inequalities_; }

    const UnknownBlock& block(int u) const { return unknowns_.at(static_cast<std::size_t>(u)); }

private:
    std::vector<UnknownBlock> unknowns_;
    std::vector<MatrixExpr> equalities_;
    std::vector<std::pair<MatrixExpr, Sense>> inequalities_;
};

struct SolverOptions {
    double margin_tol = 1e-6;    // feasibility decision threshold on t*
    double radius = 1e3;         // trust-region radius; margin maximization of
                                 // homogeneous LMIs is unbounded without it
    double gap_tol = 1e-8;       // relative duality-gap target
    int max_outer = 80;
    int max_newton_per_center = 120;
};

struct FeasibilityResult {
    bool feasible = false;
    double margin = 0.0;  // achieved t*: min over constraints of the definite margin
    std::vector<Matrix> values;
    int newton_iterations = 0;
    std::string detail;
};

/// Margin maximization: maximize t subject to every positive-definite
/// constraint shifted to >= t*I, every negative-definite one to <= -t*I, the
/// equalities, and a trust-region ball. Interior-point (log-barrier path
/// following); deterministic. Non-convergence throws SolverFailure.
FeasibilityResult solve_feasibility(const FeasibilityProblem& prob, SolverOptions opts = {});

// ---------------------------------------------------------------------------
// Control synthesis on collected data.

struct StabilizerDesign {
    Matrix K;       // m x n
    Matrix Lambda;  // M x n
    Matrix P;       // Hx(0) * Lambda, symmetric positive definite
    double margin = 0.0;
};

/// Single-agent state feedback from data: find Lambda with Hx(0) Lambda
/// symmetric positive definite and Hdx(0) Lambda + (Hdx(0) Lambda)^T negative
/// definite; K = -Hu Lambda (Hx(0) Lambda)^{-1}.
StabilizerDesign design_single_stabilizer(const AgentData& data, SolverOptions opts = {});

struct GlobalSyncDesign {
    Matrix K;       // mN x nN
    Matrix Lambda;  // M(N+1) x nN
    Matrix P;       // Dx * Lambda
    double margin = 0.0;
};

/// Stabilization of the stacked error dynamics without structure constraints:
/// Dx Lambda > 0 (symmetric), sym(Ddx Lambda) < 0, U0 Lambda = 0;
/// K = -(Du Lambda)(Dx Lambda)^{-1}.
GlobalSyncDesign design_global_sync(const AgentData& data, const Topology& top,
                                    SolverOptions opts = {});

/// Feasible distributed design: Lambda, blocks P_i > 0 and F_i with
/// Dx Lambda = blkdiag{P_i}, Du Lambda = -blkdiag{F_i}, U0 Lambda = 0 and the
/// error-dynamics Lyapunov inequality. Gains K_i = F_i P_i^{-1}.
struct SyncCertificate {
    Matrix Lambda;          // M(N+1) x nN
    std::vector<Matrix> P;  // n x n symmetric blocks
    std::vector<Matrix> F;  // m x n blocks
    std::vector<Matrix> K;  // m x n gains, K_i = F_i P_i^{-1}
    double margin = 0.0;

    Matrix global_gain() const;  // blkdiag{K_i}
    Matrix P_block() const;      // blkdiag{P_i}
};

SyncCertificate design_distributed_sync(const AgentData& data, const Topology& top,
                                        SolverOptions opts = {});

struct HurwitzReport {
    bool hurwitz = false;
    double abscissa = 0.0;
};

HurwitzReport verify_hurwitz(const Matrix& ac);

}  // namespace dbsync::lmi
