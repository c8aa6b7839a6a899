#pragma once

#include "dbsync/types.hpp"

#include <vector>

namespace dbsync {

Matrix kron(const Matrix& a, const Matrix& b);

Matrix blkdiag(const std::vector<Matrix>& blocks);

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Rank by singular values above rel_tol * sigma_max.
int rank_svd(const Matrix& m, double rel_tol = 1e-8);

double min_singular_value(const Matrix& m);

// Minimum-norm least-squares solution of A X = B.
Matrix min_norm_solve(const Matrix& a, const Matrix& b);

// Inverse through an SVD with a condition-number gate; throws NumericalError
// above cond_limit.
Matrix guarded_inverse(const Matrix& m, const std::string& label, double cond_limit = 1e12);

bool all_finite(const Matrix& m);

// Largest real part over the eigenvalues of a (generally nonsymmetric) matrix.
double spectral_abscissa(const Matrix& m);

double max_symmetric_eigenvalue(const Matrix& symmetric);
double min_symmetric_eigenvalue(const Matrix& symmetric);

// t = index * step for some integer index, within tolerance; throws otherwise.
long grid_index(double t, double step, const std::string& what);

}  // namespace dbsync
