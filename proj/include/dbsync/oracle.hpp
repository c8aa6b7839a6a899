#pragma once

#include "dbsync/lti.hpp"
#include "dbsync/topology.hpp"
#include "dbsync/types.hpp"

#include <vector>

namespace dbsync::oracle {

/// Model-based baselines for tests and audits. Nothing here is part of the
/// data-driven pipeline; every function consumes true system matrices.

struct AreSolution {
    Matrix P;  // symmetric positive definite
    Matrix K;  // R^{-1} B^T P
    Matrix Q, R;
    double residual = 0.0;  // ||Q + PA + A^T P - P B R^{-1} B^T P||
};

/// Riccati solve through the stable invariant subspace of the Hamiltonian
/// matrix, polished by a few Kleinman iterations.
AreSolution solve_are(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

struct DiagonalScaling {
    Vector s;      // positive diagonal entries, normalized to max 1
    Matrix Qbar;   // S(L+G) + (L+G)^T S
    double min_eig = 0.0;
};

/// Positive diagonal S with S(L+G) + (L+G)^T S positive definite, found by
/// the feasibility backend over a diagonal unknown.
DiagonalScaling find_diagonal_S(const Topology& top);

struct ModelSyncGain {
    double c = 0.0;
    Matrix K;              // c * Kbar
    Matrix P;              // blkdiag{s_i * Pbar}
    double lyap_max_eig = 0.0;  // max eig of P Ac + Ac^T P at the accepted c
    AreSolution are;
    DiagonalScaling scaling;
};

/// Coupling-gain search: doubling c from 1 until P = blkdiag{s_i Pbar}
/// certifies the closed loop (max eig of P Ac + Ac^T P <= -1e-9), cap 2^20.
ModelSyncGain model_sync_gain(const LtiSystem& sys, const Topology& top, const Matrix& Q,
                              const Matrix& R);

/// Closed-loop matrix of the synchronization-error dynamics,
/// I (x) A - ((L+G) (x) B) blkdiag{K_i}.
Matrix closed_loop_matrix(const LtiSystem& sys, const Topology& top,
                          const std::vector<Matrix>& gains);

/// Same loop with one shared gain for every agent.
Matrix closed_loop_matrix(const LtiSystem& sys, const Topology& top, const Matrix& gain);

bool is_controllable(const Matrix& A, const Matrix& B, double rel_tol = 1e-8);

}  // namespace dbsync::oracle
