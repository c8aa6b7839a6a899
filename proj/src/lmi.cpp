#include "dbsync/lmi.hpp"

#include "dbsync/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace dbsync::lmi {

MatrixExpr& MatrixExpr::add_term(const Matrix& left, int unknown, const Matrix& right,
                                 bool transpose_unknown) {
    if (left.rows() != rows() || right.cols() != cols())
        throw DimensionError("MatrixExpr: term shape does not match the expression");
    terms_.push_back(Term{left, unknown, right, transpose_unknown});
    return *this;
}

MatrixExpr& MatrixExpr::add_constant(const Matrix& c) {
    if (c.rows() != rows() || c.cols() != cols())
        throw DimensionError("MatrixExpr: constant shape does not match the expression");
    constant_ += c;
    return *this;
}

MatrixExpr MatrixExpr::symmetrized() const {
    if (rows() != cols()) throw DimensionError("MatrixExpr: symmetrization needs a square expression");
    MatrixExpr out(rows(), cols());
    out.constant_ = constant_ + constant_.transpose();
    for (const auto& t : terms_) {
        out.terms_.push_back(t);
        out.terms_.push_back(Term{t.right.transpose(), t.unknown, t.left.transpose(),
                                  !t.transpose_unknown});
    }
    return out;
}

Matrix MatrixExpr::eval(const std::vector<Matrix>& values) const {
    Matrix out = constant_;
    for (const auto& t : terms_) {
        const Matrix& x = values.at(static_cast<std::size_t>(t.unknown));
        out += t.transpose_unknown ? Matrix(t.left * x.transpose() * t.right)
                                   : Matrix(t.left * x * t.right);
    }
    return out;
}

int FeasibilityProblem::add_unknown(const std::string& name, int rows, int cols) {
    if (rows < 1 || cols < 1) throw DimensionError("FeasibilityProblem: empty unknown block");
    unknowns_.push_back(UnknownBlock{name, BlockKind::Dense, rows, cols});
    return static_cast<int>(unknowns_.size()) - 1;
}

int FeasibilityProblem::add_symmetric_unknown(const std::string& name, int n) {
    if (n < 1) throw DimensionError("FeasibilityProblem: empty unknown block");
    unknowns_.push_back(UnknownBlock{name, BlockKind::Symmetric, n, n});
    return static_cast<int>(unknowns_.size()) - 1;
}

int FeasibilityProblem::add_diagonal_unknown(const std::string& name, int n) {
    if (n < 1) throw DimensionError("FeasibilityProblem: empty unknown block");
    unknowns_.push_back(UnknownBlock{name, BlockKind::Diagonal, n, n});
    return static_cast<int>(unknowns_.size()) - 1;
}

void FeasibilityProblem::require_zero(MatrixExpr expr) { equalities_.push_back(std::move(expr)); }

void FeasibilityProblem::require_positive_definite(MatrixExpr expr) {
    if (expr.rows() != expr.cols())
        throw DimensionError("FeasibilityProblem: definite constraints must be square");
    inequalities_.emplace_back(std::move(expr), Sense::PositiveDefinite);
}

void FeasibilityProblem::require_negative_definite(MatrixExpr expr) {
    if (expr.rows() != expr.cols())
        throw DimensionError("FeasibilityProblem: definite constraints must be square");
    inequalities_.emplace_back(std::move(expr), Sense::NegativeDefinite);
}

namespace {

// One scalar decision variable: a basis matrix of its block, stored as
// weighted entries.
struct ScalarVar {
    int block;
    struct Entry {
        int row, col;
        double weight;
    };
    std::vector<Entry> entries;
};

struct Scalarization {
    std::vector<ScalarVar> vars;
    std::vector<int> block_first_var;
    std::vector<std::vector<int>> block_vars;
};

Scalarization scalarize(const FeasibilityProblem& prob) {
    Scalarization sc;
    const auto& blocks = prob.unknowns();
    sc.block_vars.resize(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        sc.block_first_var.push_back(static_cast<int>(sc.vars.size()));
        const auto& blk = blocks[b];
        auto push = [&](std::vector<ScalarVar::Entry> entries) {
            sc.block_vars[b].push_back(static_cast<int>(sc.vars.size()));
            sc.vars.push_back(ScalarVar{static_cast<int>(b), std::move(entries)});
        };
        switch (blk.kind) {
            case BlockKind::Dense:
                for (int j = 0; j < blk.cols; ++j)
                    for (int i = 0; i < blk.rows; ++i) push({{i, j, 1.0}});
                break;
            case BlockKind::Symmetric:
                for (int j = 0; j < blk.cols; ++j) {
                    for (int i = 0; i <= j; ++i) {
                        if (i == j) push({{i, i, 1.0}});
                        else push({{i, j, 1.0}, {j, i, 1.0}});
                    }
                }
                break;
            case BlockKind::Diagonal:
                for (int i = 0; i < blk.rows; ++i) push({{i, i, 1.0}});
                break;
        }
    }
    return sc;
}

// Dense coefficient matrix of one affine expression: column v is
// vec(expr(e_v) - expr(0)), column-major.
Matrix expression_coefficients(const MatrixExpr& expr, const Scalarization& sc) {
    const int d2 = expr.rows() * expr.cols();
    Matrix coef = Matrix::Zero(d2, static_cast<int>(sc.vars.size()));
    for (const auto& term : expr.terms()) {
        for (int v : sc.block_vars[static_cast<std::size_t>(term.unknown)]) {
            Eigen::Map<Matrix> slot(coef.col(v).data(), expr.rows(), expr.cols());
            for (const auto& e : sc.vars[static_cast<std::size_t>(v)].entries) {
                const int a = term.transpose_unknown ? e.col : e.row;
                const int b = term.transpose_unknown ? e.row : e.col;
                slot.noalias() += e.weight * term.left.col(a) * term.right.row(b);
            }
        }
    }
    return coef;
}

struct CompiledInequality {
    int dim = 0;
    Matrix coef;      // d^2 x (n_y + 1) after reduction; last column is vec(-I)
    Vector constant;  // d^2
};

class BarrierSolver {
public:
    BarrierSolver(std::vector<CompiledInequality> cons, double radius, SolverOptions opts)
        : cons_(std::move(cons)), radius_(radius), opts_(opts) {
        nw_ = cons_.empty() ? 1 : static_cast<int>(cons_[0].coef.cols());
        nu_ = 2.0;
        for (const auto& c : cons_) nu_ += static_cast<double>(c.dim);
    }

    // Maximizes t = w(last). Returns the final iterate; throws SolverFailure
    // on non-convergence.
    Vector run(double t0, int* newton_iterations) {
        Vector w = Vector::Zero(nw_);
        w(nw_ - 1) = t0;
        if (!strictly_feasible(w))
            throw SolverFailure("interior-point: initial point is not strictly feasible");

        double mu = std::max(1.0, std::abs(t0));
        int total_newton = 0;
        for (int outer = 0; outer < opts_.max_outer; ++outer) {
            center(w, mu, total_newton);
            const double t_cur = w(nw_ - 1);
            if (nu_ * mu <= opts_.gap_tol * std::max(1.0, std::abs(t_cur))) {
                if (newton_iterations) *newton_iterations = total_newton;
                return w;
            }
            mu *= 0.1;
        }
        throw SolverFailure("interior-point: outer iteration limit reached");
    }

private:
    bool strictly_feasible(const Vector& w) const {
        if (radius_ * radius_ - w.squaredNorm() <= 0.0) return false;
        for (const auto& c : cons_) {
            const Vector s = c.constant + c.coef * w;
            Eigen::Map<const Matrix> S(s.data(), c.dim, c.dim);
            Eigen::LLT<Matrix> llt(S);
            if (llt.info() != Eigen::Success) return false;
        }
        return true;
    }

    void center(Vector& w, double mu, int& total_newton) {
        Vector grad(nw_);
        Matrix hess(nw_, nw_);
        for (int it = 0; it < opts_.max_newton_per_center; ++it) {
            derivatives(w, mu, grad, hess);
            const Vector step = newton_step(grad, hess);
            // Quadratic form instead of -g.step: the objective part of the
            // gradient is O(1/mu) and the inner product cancels badly.
            const double lambda_sq = std::max(0.0, step.dot(hess * step));
            if (lambda_sq <= 1e-8) return;
            if (step.norm() <= 1e-12 * (1.0 + w.norm())) return;
            const double lambda = std::sqrt(lambda_sq);
            double alpha = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
            int backtracks = 0;
            while (!strictly_feasible(w + alpha * step)) {
                alpha *= 0.5;
                if (++backtracks > 60)
                    throw SolverFailure("interior-point: line search collapsed");
            }
            w += alpha * step;
            ++total_newton;
        }
        throw SolverFailure("interior-point: centering did not converge");
    }

    void derivatives(const Vector& w, double mu, Vector& grad, Matrix& hess) const {
        grad.setZero();
        hess.setZero();
        grad(nw_ - 1) = -1.0 / mu;  // objective -t/mu

        for (const auto& c : cons_) {
            const int d = c.dim;
            const Vector s = c.constant + c.coef * w;
            Eigen::Map<const Matrix> S(s.data(), d, d);
            Eigen::LLT<Matrix> llt(S);
            if (llt.info() != Eigen::Success)
                throw SolverFailure("interior-point: iterate left the cone");
            const Matrix winv = llt.solve(Matrix::Identity(d, d));
            grad.noalias() -= c.coef.transpose() * Eigen::Map<const Vector>(winv.data(), d * d);

            const Matrix lower = llt.matrixL();
            Matrix transformed(d * d, nw_);
            Matrix work(d, d);
            for (int v = 0; v < nw_; ++v) {
                work = Eigen::Map<const Matrix>(c.coef.col(v).data(), d, d);
                lower.triangularView<Eigen::Lower>().solveInPlace(work);
                work.transposeInPlace();
                lower.triangularView<Eigen::Lower>().solveInPlace(work);
                transformed.col(v) = Eigen::Map<const Vector>(work.data(), d * d);
            }
            hess.noalias() += transformed.transpose() * transformed;
        }

        const double b = radius_ * radius_ - w.squaredNorm();
        grad.noalias() += (2.0 / b) * w;
        hess.noalias() += (2.0 / b) * Matrix::Identity(nw_, nw_);
        hess.noalias() += (4.0 / (b * b)) * w * w.transpose();
    }

    Vector newton_step(const Vector& grad, const Matrix& hess) const {
        const double scale = std::max(1.0, hess.diagonal().maxCoeff());
        for (double ridge : {0.0, 1e-13, 1e-11, 1e-9, 1e-7, 1e-5}) {
            Matrix h = hess;
            h.diagonal().array() += ridge * scale;
            Eigen::LDLT<Matrix> ldlt(h);
            if (ldlt.info() != Eigen::Success) continue;
            const Vector step = -ldlt.solve(grad);
            if (step.allFinite()) return step;
        }
        throw SolverFailure("interior-point: Newton system could not be solved");
    }

    std::vector<CompiledInequality> cons_;
    double radius_;
    SolverOptions opts_;
    int nw_ = 0;
    double nu_ = 0.0;
};

std::vector<Matrix> unscalarize(const FeasibilityProblem& prob, const Scalarization& sc,
                                const Vector& x) {
    std::vector<Matrix> values;
    for (const auto& blk : prob.unknowns()) values.push_back(Matrix::Zero(blk.rows, blk.cols));
    for (std::size_t v = 0; v < sc.vars.size(); ++v) {
        const auto& var = sc.vars[v];
        for (const auto& e : var.entries)
            values[static_cast<std::size_t>(var.block)](e.row, e.col) +=
                e.weight * x(static_cast<Eigen::Index>(v));
    }
    return values;
}

}  // namespace

FeasibilityResult solve_feasibility(const FeasibilityProblem& prob, SolverOptions opts) {
    const Scalarization sc = scalarize(prob);
    const int nx = static_cast<int>(sc.vars.size());
    if (nx == 0) throw DimensionError("solve_feasibility: problem has no unknowns");

    // Equality constraints, stacked as E x = rhs.
    long eq_rows = 0;
    for (const auto& eq : prob.equalities()) eq_rows += eq.rows() * eq.cols();
    Matrix eq_coef(eq_rows, nx);
    Vector eq_rhs(eq_rows);
    {
        long r = 0;
        for (const auto& eq : prob.equalities()) {
            const long d2 = eq.rows() * eq.cols();
            eq_coef.middleRows(r, d2) = expression_coefficients(eq, sc);
            eq_rhs.segment(r, d2) =
                -Eigen::Map<const Vector>(eq.constant().data(), d2);
            r += d2;
        }
    }

    // Particular solution and null-space basis.
    Vector x_particular = Vector::Zero(nx);
    Matrix null_basis = Matrix::Identity(nx, nx);
    if (eq_rows > 0) {
        Eigen::BDCSVD<Matrix> svd(eq_coef, Eigen::ComputeThinU | Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() > 0 ? sv(0) : 0.0;
        int rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > 1e-12 * std::max(1.0, smax)) ++rank;
        if (rank > 0) {
            const Vector z = svd.matrixU().leftCols(rank).transpose() * eq_rhs;
            x_particular =
                svd.matrixV().leftCols(rank) * z.cwiseQuotient(sv.head(rank));
        }
        const double eq_residual = (eq_coef * x_particular - eq_rhs).norm();
        if (eq_residual > 1e-9 * (1.0 + eq_rhs.norm())) {
            FeasibilityResult res;
            res.feasible = false;
            res.margin = -std::numeric_limits<double>::infinity();
            res.values = unscalarize(prob, sc, x_particular);
            res.detail = "equality constraints are inconsistent (residual " +
                         std::to_string(eq_residual) + ")";
            return res;
        }
        null_basis = svd.matrixV().rightCols(nx - rank);
    }
    const int ny = static_cast<int>(null_basis.cols());

    // No definite constraints: any equality solution is feasible.
    if (prob.inequalities().empty()) {
        FeasibilityResult res;
        res.feasible = true;
        res.margin = std::numeric_limits<double>::infinity();
        res.values = unscalarize(prob, sc, x_particular);
        return res;
    }

    // Compile inequalities into the reduced coordinates w = [y; t].
    std::vector<CompiledInequality> cons;
    double t_floor = std::numeric_limits<double>::infinity();
    for (const auto& [expr, sense] : prob.inequalities()) {
        const int d = expr.rows();
        const double sign = sense == Sense::PositiveDefinite ? 1.0 : -1.0;
        Matrix coef = expression_coefficients(expr, sc);
        Vector c0 = Eigen::Map<const Vector>(expr.constant().data(), d * d);

        // A definite constraint must be a symmetric-matrix expression.
        auto check_symmetric = [&](const Vector& v, const std::string& what) {
            Eigen::Map<const Matrix> mat(v.data(), d, d);
            const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
            if ((mat - mat.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
                throw DimensionError("solve_feasibility: " + what +
                                     " of a definite constraint is not symmetric");
        };
        check_symmetric(c0, "constant part");
        for (int v = 0; v < nx; ++v) {
            if (coef.col(v).isZero(0.0)) continue;
            check_symmetric(coef.col(v), "coefficient");
        }

        CompiledInequality ci;
        ci.dim = d;
        ci.coef.resize(d * d, ny + 1);
        ci.coef.leftCols(ny).noalias() = sign * (coef * null_basis);
        Matrix neg_id = -Matrix::Identity(d, d);
        ci.coef.col(ny) = Eigen::Map<const Vector>(neg_id.data(), d * d);
        ci.constant = sign * (c0 + coef * x_particular);

        // Exact symmetrization guards the Cholesky-based barrier.
        for (int col = 0; col <= ny; ++col) {
            Eigen::Map<Matrix> g(ci.coef.col(col).data(), d, d);
            g = 0.5 * (g + g.transpose()).eval();
        }
        Eigen::Map<Matrix> cmat(ci.constant.data(), d, d);
        cmat = 0.5 * (cmat + cmat.transpose()).eval();
        t_floor = std::min(t_floor, min_symmetric_eigenvalue(cmat));
        cons.push_back(std::move(ci));
    }

    const double t0 = std::min(t_floor, 0.0) - 1.0;
    const double radius = std::max(opts.radius, 2.0 * (std::abs(t0) + 1.0));

    BarrierSolver solver(std::move(cons), radius, opts);
    int newton_iterations = 0;
    const Vector w = solver.run(t0, &newton_iterations);

    FeasibilityResult res;
    res.newton_iterations = newton_iterations;
    const Vector x_hat = x_particular + null_basis * w.head(ny);
    res.values = unscalarize(prob, sc, x_hat);

    // Achieved margin, recomputed from eigenvalues of the returned assignment.
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& [expr, sense] : prob.inequalities()) {
        const Matrix value = sym(expr.eval(res.values));
        const double m = sense == Sense::PositiveDefinite ? min_symmetric_eigenvalue(value)
                                                          : -max_symmetric_eigenvalue(value);
        margin = std::min(margin, m);
    }
    res.margin = margin;
    res.feasible = margin >= opts.margin_tol;
    if (!res.feasible)
        res.detail = "margin maximization reached t* = " + std::to_string(margin) +
                     " below the feasibility threshold";
    return res;
}

HurwitzReport verify_hurwitz(const Matrix& ac) {
    if (ac.rows() != ac.cols()) throw DimensionError("verify_hurwitz: matrix must be square");
    HurwitzReport report;
    report.abscissa = spectral_abscissa(ac);
    report.hurwitz = report.abscissa < -1e-9;
    return report;
}

}  // namespace dbsync::lmi
