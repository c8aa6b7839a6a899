#include "dbsync/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace dbsync {

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix blkdiag(const std::vector<Matrix>& blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& blk : blocks) {
        rows += blk.rows();
        cols += blk.cols();
    }
    Matrix out = Matrix::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& blk : blocks) {
        out.block(r, c, blk.rows(), blk.cols()) = blk;
        r += blk.rows();
        c += blk.cols();
    }
    return out;
}

int rank_svd(const Matrix& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * sv(0)) ++rank;
    return rank;
}

double min_singular_value(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1);
}

Matrix min_norm_solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("min_norm_solve: row counts differ");
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(b);
}

Matrix guarded_inverse(const Matrix& m, const std::string& label, double cond_limit) {
    if (m.rows() != m.cols()) throw DimensionError(label + ": inverse of a non-square matrix");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || smax / smin > cond_limit)
        throw NumericalError(label + ": condition number exceeds " + std::to_string(cond_limit));
    return svd.solve(Matrix::Identity(m.rows(), m.rows()));
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

double spectral_abscissa(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().real().maxCoeff();
}

double max_symmetric_eigenvalue(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double min_symmetric_eigenvalue(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

long grid_index(double t, double step, const std::string& what) {
    const double q = t / step;
    const long k = std::lround(q);
    if (std::abs(q - static_cast<double>(k)) > 1e-6)
        throw DimensionError(what + " = " + std::to_string(t) +
                             " is not an integer multiple of the step " + std::to_string(step));
    return k;
}

}  // namespace dbsync
