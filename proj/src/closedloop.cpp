#include "dbsync/closedloop.hpp"

#include "dbsync/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace dbsync::closedloop {

namespace {

void finalize_metrics(NetworkRun& run, double duration) {
    const int K = run.samples();
    run.metrics.initial_error_norm = run.global_error_norm(0);
    run.metrics.final_error_norm = run.global_error_norm(K - 1);

    const double band = 0.01 * run.metrics.initial_error_norm;
    int settle_idx = -1;
    if (run.metrics.initial_error_norm > 0.0) {
        settle_idx = K;  // index of the first sample from which the error stays in band
        for (int k = K - 1; k >= 0; --k) {
            if (run.global_error_norm(k) > band) break;
            settle_idx = k;
        }
    } else {
        settle_idx = 0;
    }
    if (settle_idx >= 0 && settle_idx < K) {
        run.metrics.settling_time = run.time[static_cast<std::size_t>(settle_idx)];
        run.metrics.converged = true;
    } else {
        run.metrics.settling_time = std::numeric_limits<double>::quiet_NaN();
        run.metrics.converged = false;
    }

    run.metrics.tail_start = std::max(0.0, duration - 10.0);
    double tail_max = 0.0;
    for (int k = 0; k < K; ++k)
        if (run.time[static_cast<std::size_t>(k)] >= run.metrics.tail_start - 1e-12)
            tail_max = std::max(tail_max, run.global_error_norm(k));
    run.metrics.max_error_tail = tail_max;
}

}  // namespace

NetworkRun run_homogeneous(const LtiSystem& sys, const Topology& top,
                           const std::vector<Matrix>& gains, const Matrix& agent_init,
                           const Vector& leader_init, double duration, double h) {
    const int m = sys.m();
    const int n = sys.n();
    if (static_cast<int>(gains.size()) != top.N)
        throw DimensionError("run_homogeneous: one gain per agent required");
    for (const auto& k : gains)
        if (k.rows() != m || k.cols() != n)
            throw DimensionError("run_homogeneous: gain dimensions must be m x n");
    return run_homogeneous_global(sys, top, blkdiag(gains), agent_init, leader_init, duration, h);
}

NetworkRun run_homogeneous_global(const LtiSystem& sys, const Topology& top,
                                  const Matrix& K_global, const Matrix& agent_init,
                                  const Vector& leader_init, double duration, double h) {
    const int N = top.N;
    const int n = sys.n();
    const int m = sys.m();
    if (K_global.rows() != m * N || K_global.cols() != n * N)
        throw DimensionError("run_homogeneous_global: gain dimensions must be mN x nN");
    if (agent_init.rows() != n || agent_init.cols() != N)
        throw DimensionError("run_homogeneous_global: agent_init must be n x N");
    if (leader_init.size() != n)
        throw DimensionError("run_homogeneous_global: leader_init mismatch");
    const long steps = grid_index(duration, h, "run_homogeneous_global: duration");

    const Matrix lg = laplacian(top) + Matrix(top.pinning.asDiagonal());

    // Global state [x_1 .. x_N, x0].
    Vector state((N + 1) * n);
    for (int i = 0; i < N; ++i) state.segment(i * n, n) = agent_init.col(i);
    state.tail(n) = leader_init;

    auto sync_errors = [&](const Vector& s) {
        Matrix delta(n, N);
        for (int i = 0; i < N; ++i) {
            Vector d = Vector::Zero(n);
            const Vector xi = s.segment(i * n, n);
            for (int j = 0; j < N; ++j)
                if (top.adjacency(i, j) != 0.0)
                    d += top.adjacency(i, j) * (xi - s.segment(j * n, n));
            if (top.pinning(i) != 0.0) d += top.pinning(i) * (xi - s.tail(n));
            delta.col(i) = d;
        }
        return delta;
    };

    auto feedback = [&](const Matrix& delta) {
        const Vector stacked = Eigen::Map<const Vector>(delta.data(), n * N);
        return Vector(-K_global * stacked);
    };

    auto field = [&](const Vector& s) {
        const Matrix delta = sync_errors(s);
        const Vector u = feedback(delta);
        Vector ds((N + 1) * n);
        for (int i = 0; i < N; ++i)
            ds.segment(i * n, n) = sys.A * s.segment(i * n, n) + sys.B * u.segment(i * m, m);
        ds.tail(n) = sys.A * s.tail(n);
        return ds;
    };

    const int K = static_cast<int>(steps) + 1;
    NetworkRun run;
    run.h = h;
    run.time.resize(static_cast<std::size_t>(K));
    run.node_output_dim = n;
    run.outputs.resize((N + 1) * n, K);
    run.errors.resize(N * n, K);
    run.agent_error_norms.resize(N, K);
    run.global_error_norm.resize(K);
    Matrix recorded_u(N * m, K);

    for (int k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * h;
        if (!state.allFinite()) throw DivergenceError(t);
        run.time[static_cast<std::size_t>(k)] = t;
        run.outputs.col(k).head(n) = state.tail(n);
        for (int i = 0; i < N; ++i)
            run.outputs.col(k).segment((i + 1) * n, n) = state.segment(i * n, n);
        const Matrix delta = sync_errors(state);
        recorded_u.col(k) = feedback(delta);
        for (int i = 0; i < N; ++i) {
            run.errors.col(k).segment(i * n, n) = delta.col(i);
            run.agent_error_norms(i, k) = delta.col(i).norm();
        }
        run.global_error_norm(k) = run.errors.col(k).norm();
        if (k == K - 1) break;

        const Vector k1 = field(state);
        const Vector k2 = field(state + 0.5 * h * k1);
        const Vector k3 = field(state + 0.5 * h * k2);
        const Vector k4 = field(state + h * k3);
        state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!state.allFinite()) throw DivergenceError(duration);

    // Central-difference check of the stacked error dynamics
    // d/dt delta = (I (x) A) delta + ((L+G) (x) B) u.
    const Matrix ia = kron(Matrix::Identity(N, N), sys.A);
    const Matrix lgb = kron(lg, sys.B);
    double worst = 0.0;
    for (int k = 1; k + 1 < K; ++k) {
        const Vector numeric = (run.errors.col(k + 1) - run.errors.col(k - 1)) / (2.0 * h);
        const Vector analytic = ia * run.errors.col(k) + lgb * recorded_u.col(k);
        worst = std::max(worst, (numeric - analytic).norm() / (1.0 + analytic.norm()));
    }
    run.metrics.consistency_residual = worst;
    run.metrics.max_boundary_jump = std::numeric_limits<double>::quiet_NaN();
    finalize_metrics(run, duration);
    return run;
}

NetworkRun run_heterogeneous(const std::vector<LtiSystem>& systems, const LtiSystem& leader,
                             const Topology& top, std::vector<hetero::DynamicController>& ctrls,
                             const std::vector<Vector>& agent_init, const Vector& leader_init,
                             double duration, double h) {
    const int N = top.N;
    if (static_cast<int>(systems.size()) != N || static_cast<int>(ctrls.size()) != N ||
        static_cast<int>(agent_init.size()) != N)
        throw DimensionError("run_heterogeneous: need one system, controller and init per agent");
    const int n0 = leader.n();
    const int p = leader.p();
    if (leader_init.size() != n0) throw DimensionError("run_heterogeneous: leader_init mismatch");
    for (int i = 0; i < N; ++i) {
        if (systems[static_cast<std::size_t>(i)].p() != p)
            throw DimensionError("run_heterogeneous: all agents must share the output dimension");
        if (agent_init[static_cast<std::size_t>(i)].size() != systems[static_cast<std::size_t>(i)].n())
            throw DimensionError("run_heterogeneous: agent initial state mismatch");
        if (ctrls[static_cast<std::size_t>(i)].zeta.size() != n0)
            throw DimensionError("run_heterogeneous: controller zeta dimension mismatch");
    }
    const long steps = grid_index(duration, h, "run_heterogeneous: duration");
    const double T = ctrls.front().leader->T;
    const long steps_per_period = grid_index(T, h, "run_heterogeneous: period");

    // State layout [x_1 .. x_N | zeta_1 .. zeta_N | x0].
    std::vector<int> x_offset(static_cast<std::size_t>(N));
    int pos = 0;
    for (int i = 0; i < N; ++i) {
        x_offset[static_cast<std::size_t>(i)] = pos;
        pos += systems[static_cast<std::size_t>(i)].n();
    }
    const int zeta_base = pos;
    const int leader_base = zeta_base + N * n0;
    const int dim = leader_base + n0;

    Vector state(dim);
    for (int i = 0; i < N; ++i)
        state.segment(x_offset[static_cast<std::size_t>(i)], systems[static_cast<std::size_t>(i)].n()) =
            agent_init[static_cast<std::size_t>(i)];
    for (int i = 0; i < N; ++i)
        state.segment(zeta_base + i * n0, n0) = ctrls[static_cast<std::size_t>(i)].zeta;
    state.tail(n0) = leader_init;

    auto field = [&](double tau, const Vector& s) {
        Vector ds(dim);
        const Vector x0 = s.tail(n0);
        for (int i = 0; i < N; ++i) {
            const auto& sys = systems[static_cast<std::size_t>(i)];
            const auto& ctrl = ctrls[static_cast<std::size_t>(i)];
            const Vector xi = s.segment(x_offset[static_cast<std::size_t>(i)], sys.n());
            const Vector zi = s.segment(zeta_base + i * n0, n0);
            const Vector u = -ctrl.K * (xi - ctrl.Pi * zi) + ctrl.Gamma * zi;
            ds.segment(x_offset[static_cast<std::size_t>(i)], sys.n()) = sys.A * xi + sys.B * u;

            std::vector<std::pair<double, Vector>> neighbors;
            for (int j = 0; j < N; ++j)
                if (top.adjacency(i, j) != 0.0)
                    neighbors.emplace_back(top.adjacency(i, j), s.segment(zeta_base + j * n0, n0));
            ds.segment(zeta_base + i * n0, n0) =
                hetero::zeta_derivative_at(ctrl, tau, zi, neighbors, top.pinning(i), x0);
        }
        ds.tail(n0) = leader.A * x0;
        return ds;
    };

    const int K = static_cast<int>(steps) + 1;
    NetworkRun run;
    run.h = h;
    run.time.resize(static_cast<std::size_t>(K));
    run.node_output_dim = p;
    run.outputs.resize((N + 1) * p, K);
    run.errors.resize(N * p, K);
    run.agent_error_norms.resize(N, K);
    run.global_error_norm.resize(K);
    run.metrics.max_boundary_jump = 0.0;

    for (int k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * h;
        if (!state.allFinite()) throw DivergenceError(t);

        if (k > 0 && k % steps_per_period == 0 && k < K - 1) {
            for (int i = 0; i < N; ++i) {
                auto& ctrl = ctrls[static_cast<std::size_t>(i)];
                const Vector zi = state.segment(zeta_base + i * n0, n0);
                hetero::on_period_boundary(ctrl, zi);
                const double jump =
                    (ctrl.leader->Hx0.front() * ctrl.alpha_bar - zi).norm();
                run.metrics.max_boundary_jump = std::max(run.metrics.max_boundary_jump, jump);
            }
        }

        run.time[static_cast<std::size_t>(k)] = t;
        const Vector y0 = leader.C * state.tail(n0);
        run.outputs.col(k).head(p) = y0;
        double worst = 0.0;
        for (int i = 0; i < N; ++i) {
            const auto& sys = systems[static_cast<std::size_t>(i)];
            const Vector yi =
                sys.C * state.segment(x_offset[static_cast<std::size_t>(i)], sys.n());
            run.outputs.col(k).segment((i + 1) * p, p) = yi;
            run.errors.col(k).segment(i * p, p) = yi - y0;
            run.agent_error_norms(i, k) = (yi - y0).norm();
            worst = std::max(worst, run.agent_error_norms(i, k));
        }
        run.global_error_norm(k) = worst;
        if (k == K - 1) break;

        const double tau = static_cast<double>(k % steps_per_period) * h;
        const Vector k1 = field(tau, state);
        const Vector k2 = field(tau + 0.5 * h, state + 0.5 * h * k1);
        const Vector k3 = field(tau + 0.5 * h, state + 0.5 * h * k2);
        const Vector k4 = field(tau + h, state + h * k3);
        state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!state.allFinite()) throw DivergenceError(duration);

    // Leave the controllers holding their final states.
    for (int i = 0; i < N; ++i)
        ctrls[static_cast<std::size_t>(i)].zeta = state.segment(zeta_base + i * n0, n0);

    run.metrics.consistency_residual = std::numeric_limits<double>::quiet_NaN();
    finalize_metrics(run, duration);
    return run;
}

namespace {

void write_value(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_network_csv(std::ostream& os, const NetworkRun& run) {
    const int q = run.node_output_dim;
    const int nodes = static_cast<int>(run.outputs.rows()) / q;
    const int N = nodes - 1;
    os << "t";
    for (int j = 1; j <= q; ++j) os << ",out0_" << j;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= q; ++j) os << ",out" << i << "_" << j;
    for (int i = 1; i <= N; ++i) os << ",err_" << i;
    os << ",err\n";
    for (int k = 0; k < run.samples(); ++k) {
        write_value(os, run.time[static_cast<std::size_t>(k)]);
        for (int r = 0; r < nodes * q; ++r) { os << ','; write_value(os, run.outputs(r, k)); }
        for (int i = 0; i < N; ++i) { os << ','; write_value(os, run.agent_error_norms(i, k)); }
        os << ',';
        write_value(os, run.global_error_norm(k));
        os << "\n";
    }
}

std::string plot_script(const std::string& csv_name, int agents, int node_output_dim) {
    std::ostringstream os;
    os << "#!/usr/bin/env python3\n"
       << "\"\"\"Plot node outputs and error norms of a network run.\"\"\"\n"
       << "import csv\n"
       << "import os\n"
       << "import matplotlib\n"
       << "matplotlib.use(\"Agg\")\n"
       << "import matplotlib.pyplot as plt\n\n"
       << "here = os.path.dirname(os.path.abspath(__file__))\n"
       << "path = os.path.join(here, \"" << csv_name << "\")\n"
       << "with open(path) as f:\n"
       << "    reader = csv.reader(f)\n"
       << "    header = next(reader)\n"
       << "    rows = [[float(v) for v in row] for row in reader]\n"
       << "cols = {name: [row[i] for row in rows] for i, name in enumerate(header)}\n"
       << "t = cols[\"t\"]\n"
       << "agents = " << agents << "\n"
       << "q = " << node_output_dim << "\n\n"
       << "fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)\n"
       << "for j in range(1, q + 1):\n"
       << "    ax1.plot(t, cols[f\"out0_{j}\"], \"k--\", lw=2,\n"
       << "             label=\"leader\" if j == 1 else None)\n"
       << "for i in range(1, agents + 1):\n"
       << "    for j in range(1, q + 1):\n"
       << "        ax1.plot(t, cols[f\"out{i}_{j}\"], lw=1,\n"
       << "                 label=f\"agent {i}\" if j == 1 else None)\n"
       << "ax1.set_ylabel(\"node outputs\")\n"
       << "ax1.legend(loc=\"best\", fontsize=8)\n"
       << "for i in range(1, agents + 1):\n"
       << "    ax2.semilogy(t, [max(v, 1e-16) for v in cols[f\"err_{i}\"]], lw=1,\n"
       << "                 label=f\"agent {i}\")\n"
       << "ax2.semilogy(t, [max(v, 1e-16) for v in cols[\"err\"]], \"k\", lw=2, label=\"network\")\n"
       << "ax2.set_xlabel(\"t [s]\")\n"
       << "ax2.set_ylabel(\"error norm\")\n"
       << "ax2.legend(loc=\"best\", fontsize=8)\n"
       << "fig.tight_layout()\n"
       << "out = os.path.splitext(path)[0] + \".png\"\n"
       << "fig.savefig(out, dpi=150)\n"
       << "print(f\"wrote {out}\")\n";
    return os.str();
}

}  // namespace dbsync::closedloop
