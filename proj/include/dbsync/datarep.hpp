#pragma once

#include "dbsync/lti.hpp"
#include "dbsync/topology.hpp"
#include "dbsync/types.hpp"

namespace dbsync {

/// Row-data matrices of one agent experiment plus the dimensions they imply.
struct AgentData {
    DataMatrixSet data;
    int n = 0, m = 0, p = 0;

    explicit AgentData(DataMatrixSet set);

    int M() const { return data.M; }
    double T() const { return data.T; }
    double step() const { return data.step; }
    const Matrix& Hu() const { return data.Hu; }
    const Matrix& Hx0() const { return data.Hx.at_index(0); }
    const Matrix& Hdx0() const { return data.Hdx.at_index(0); }
    const Matrix& Hy0() const { return data.Hy.at_index(0); }
};

/// Run one PCPE experiment on [0, M*T) and assemble the row-data matrices.
AgentData collect_agent_data(const LtiSystem& sys, const PcpeInput& input, const Vector& x0,
                             double h);

/// rank([Hu; Hx(t)]) == m + n at t = 0 and 9 further equispaced grid times
/// in [0, T); singular values with relative threshold 1e-8.
bool pe_rank_check(const AgentData& data);

/// Minimum-norm alpha with [Hu; Hx(0)] alpha = [u0; x0]; relative residual
/// above 1e-9 raises RepresentationError (insufficient data).
Vector represent_initial(const AgentData& data, const Vector& u0, const Vector& x0);

/// Data-based simulation of the unforced system: x(t) = Hx(t) alpha on the
/// grid of [0, T), with alpha solving [Hu; Hx(0)] alpha = [0; x0].
struct UnforcedPath {
    double step = 0.0;
    Matrix x;   // n x grid
    Matrix dx;  // n x grid
    Vector alpha;
};

UnforcedPath unforced_trajectory(const AgentData& data, const Vector& x0);

/// Data factors of the stacked synchronization-error dynamics for a network
/// of identical agents sharing one experiment.
struct ErrorDataMatrices {
    Matrix Dx;   // Lg (x) Hx(0),   nN x M(N+1)
    Matrix Ddx;  // Lg (x) Hdx(0),  nN x M(N+1)
    Matrix Du;   // Ig (x) Hu,      mN x M(N+1)
    Matrix U0;   // [Hu 0],         m  x M(N+1)
    int N = 0, n = 0, m = 0, M = 0;
};

ErrorDataMatrices build_error_data(const AgentData& data, const Topology& top);

/// Full row rank of [I_{N+1} (x) Hu; Lg (x) Hx(0)], i.e. rank m(N+1) + nN.
bool stacked_rank_check(const AgentData& data, const Topology& top);

}  // namespace dbsync
