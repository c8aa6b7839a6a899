#include "dbsync/lti.hpp"

#include "dbsync/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace dbsync {

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    if (A.rows() != A.cols()) throw DimensionError("LtiSystem: A must be square");
    if (A.rows() < 1) throw DimensionError("LtiSystem: state dimension must be >= 1");
    if (B.rows() != A.rows()) throw DimensionError("LtiSystem: B row count must equal n");
    if (C.cols() != A.rows()) throw DimensionError("LtiSystem: C column count must equal n");
    if (C.rows() < 1) throw DimensionError("LtiSystem: output dimension must be >= 1");
    if (!all_finite(A) || !all_finite(B) || !all_finite(C))
        throw DimensionError("LtiSystem: matrices must be finite");
}

LtiSystem LtiSystem::state_output(Matrix a, Matrix b) {
    const auto n = a.rows();
    return LtiSystem(std::move(a), std::move(b), Matrix::Identity(n, n));
}

Matrix PcpeInput::block_hankel() const {
    const int m = dim();
    const int M = holds();
    if (order < 1 || M < order) throw DimensionError("PcpeInput: need at least L hold values");
    Matrix h(m * order, M - order + 1);
    for (int r = 0; r < order; ++r)
        for (int c = 0; c <= M - order; ++c)
            h.block(r * m, c, m, 1) = values.col(r + c);
    return h;
}

PcpeSignal::PcpeSignal(PcpeInput input) : input_(std::move(input)) {
    if (input_.hold_period <= 0.0) throw DimensionError("PcpeSignal: hold period must be > 0");
    if (input_.holds() < 1) throw DimensionError("PcpeSignal: empty hold sequence");
}

namespace {

int hold_index(double t, double T, int M, bool from_left) {
    const double shifted = from_left ? t / T - 1e-9 : t / T + 1e-9;
    long j = static_cast<long>(std::floor(shifted));
    if (j < 0) j = 0;
    if (j > M - 1) j = M - 1;
    return static_cast<int>(j);
}

}  // namespace

Vector PcpeSignal::value(double t) const {
    return input_.values.col(hold_index(t, input_.hold_period, input_.holds(), false));
}

Vector PcpeSignal::left_value(double t) const {
    return input_.values.col(hold_index(t, input_.hold_period, input_.holds(), true));
}

bool is_persistently_exciting(const PcpeInput& input) {
    const int m = input.dim();
    if (m < 1 || input.order < 1) return false;
    if (input.holds() < input.order) return false;
    return rank_svd(input.block_hankel()) == m * input.order;
}

PcpeInput generate_pcpe(int m, int order, double T, int M, std::uint64_t seed) {
    if (m < 1) throw DimensionError("generate_pcpe: input dimension must be >= 1");
    if (order < 1) throw DimensionError("generate_pcpe: order must be >= 1");
    if (T <= 0.0) throw DimensionError("generate_pcpe: hold period must be > 0");
    const int min_holds = order * (m + 1) - 1;
    if (M < min_holds)
        throw DimensionError("generate_pcpe: M = " + std::to_string(M) +
                             " is below the bound L(m+1)-1 = " + std::to_string(min_holds));
    Rng rng(seed);
    for (int attempt = 0; attempt < 16; ++attempt) {
        PcpeInput input{T, rng.uniform_matrix(m, M), order};
        if (is_persistently_exciting(input)) return input;
    }
    throw NumericalError("generate_pcpe: rank condition failed after repeated draws");
}

bool check_period_admissible(const LtiSystem& sys, double T, double tol) {
    if (T <= 0.0) return false;
    Eigen::EigenSolver<Matrix> es(sys.A, /*computeEigenvectors=*/false);
    const auto lambda = es.eigenvalues();
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
        for (Eigen::Index k = j + 1; k < lambda.size(); ++k) {
            const double d = std::abs(lambda(j).imag() - lambda(k).imag());
            if (d <= tol) continue;
            const double base = 2.0 * M_PI / d;
            const long kappa = std::lround(T / base);
            if (kappa >= 1 && std::abs(T - static_cast<double>(kappa) * base) <= tol) return false;
        }
    }
    return true;
}

Trajectory simulate(const LtiSystem& sys, const Vector& x0, const Signal& input,
                    double duration, double h) {
    if (h <= 0.0) throw DimensionError("simulate: step must be > 0");
    if (duration <= 0.0) throw DimensionError("simulate: duration must be > 0");
    if (x0.size() != sys.n()) throw DimensionError("simulate: x0 dimension mismatch");
    if (input.dim() != sys.m()) throw DimensionError("simulate: input dimension mismatch");
    const long steps = grid_index(duration, h, "simulate: duration");
    if (steps < 1) throw DimensionError("simulate: duration shorter than one step");

    const Matrix& A = sys.A;
    const Matrix& B = sys.B;
    const Matrix& C = sys.C;
    const int n = sys.n();
    const int m = sys.m();
    const int p = sys.p();

    Trajectory traj;
    traj.h = h;
    traj.u.resize(m, steps);
    traj.x.resize(n, steps);
    traj.dx.resize(n, steps);
    traj.y.resize(p, steps);

    Vector xk = x0;
    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        if (!xk.allFinite()) throw DivergenceError(t);
        const Vector uk = input.value(t);
        traj.u.col(k) = uk;
        traj.x.col(k) = xk;
        traj.dx.col(k) = A * xk + B * uk;
        traj.y.col(k) = C * xk;

        const Vector um = input.value(t + 0.5 * h);
        const Vector ue = input.left_value(t + h);
        const Vector k1 = traj.dx.col(k);
        const Vector k2 = A * (xk + 0.5 * h * k1) + B * um;
        const Vector k3 = A * (xk + 0.5 * h * k2) + B * um;
        const Vector k4 = A * (xk + h * k3) + B * ue;
        xk += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!xk.allFinite()) throw DivergenceError(duration);
    return traj;
}

const Matrix& HankelFamily::at_time(double tau) const {
    const long i = grid_index(tau, step, "HankelFamily: time");
    if (i < 0 || i >= grid_size())
        throw ContractViolation("HankelFamily: time outside [0, T)");
    return mats[static_cast<std::size_t>(i)];
}

HankelFamily hankel_row(const Trajectory& traj, Channel channel, double T, int M) {
    if (M < 1) throw DimensionError("hankel_row: need M >= 1 columns");
    const long kt = grid_index(T, traj.h, "hankel_row: T");
    if (kt < 1) throw DimensionError("hankel_row: T shorter than one step");
    if (traj.samples() < static_cast<long>(M) * kt)
        throw DimensionError("hankel_row: trajectory does not cover [0, M*T)");

    const Matrix& source = channel == Channel::Input        ? traj.u
                           : channel == Channel::State      ? traj.x
                           : channel == Channel::Derivative ? traj.dx
                                                            : traj.y;
    HankelFamily fam;
    fam.step = traj.h;
    fam.T = T;
    fam.M = M;
    fam.mats.reserve(static_cast<std::size_t>(kt));
    for (long s = 0; s < kt; ++s) {
        Matrix h(source.rows(), M);
        for (int j = 0; j < M; ++j) h.col(j) = source.col(s + static_cast<long>(j) * kt);
        fam.mats.push_back(std::move(h));
    }
    return fam;
}

DataMatrixSet build_data_matrices(const Trajectory& traj, double T, int M) {
    DataMatrixSet set;
    set.T = T;
    set.M = M;
    set.step = traj.h;
    set.Hx = hankel_row(traj, Channel::State, T, M);
    set.Hdx = hankel_row(traj, Channel::Derivative, T, M);
    set.Hy = hankel_row(traj, Channel::Output, T, M);
    if (traj.u.rows() > 0) {
        set.Hu = hankel_row(traj, Channel::Input, T, M).at_index(0);
    } else {
        set.Hu = Matrix(0, M);
    }
    return set;
}

namespace {

void write_value(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const int m = static_cast<int>(traj.u.rows());
    const int n = static_cast<int>(traj.x.rows());
    const int p = static_cast<int>(traj.y.rows());
    os << "t";
    for (int i = 1; i <= m; ++i) os << ",u_" << i;
    for (int i = 1; i <= n; ++i) os << ",x_" << i;
    for (int i = 1; i <= n; ++i) os << ",dx_" << i;
    for (int i = 1; i <= p; ++i) os << ",y_" << i;
    os << "\n";
    for (int k = 0; k < traj.samples(); ++k) {
        write_value(os, static_cast<double>(k) * traj.h);
        for (int i = 0; i < m; ++i) { os << ','; write_value(os, traj.u(i, k)); }
        for (int i = 0; i < n; ++i) { os << ','; write_value(os, traj.x(i, k)); }
        for (int i = 0; i < n; ++i) { os << ','; write_value(os, traj.dx(i, k)); }
        for (int i = 0; i < p; ++i) { os << ','; write_value(os, traj.y(i, k)); }
        os << "\n";
    }
}

Trajectory read_trajectory_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header))
        throw NumericalError("read_trajectory_csv: empty stream");
    int m = 0, n = 0, ndx = 0, p = 0;
    {
        std::stringstream ss(header);
        std::string field;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            if (first) {
                if (field != "t") throw NumericalError("read_trajectory_csv: header must start with t");
                first = false;
                continue;
            }
            if (field.rfind("u_", 0) == 0) ++m;
            else if (field.rfind("x_", 0) == 0) ++n;
            else if (field.rfind("dx_", 0) == 0) ++ndx;
            else if (field.rfind("y_", 0) == 0) ++p;
            else throw NumericalError("read_trajectory_csv: unknown column " + field);
        }
    }
    if (n != ndx || n < 1 || p < 1)
        throw NumericalError("read_trajectory_csv: inconsistent column groups");

    std::vector<std::vector<double>> rows;
    std::string line;
    const int cols = 1 + m + 2 * n + p;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(cols));
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
        if (static_cast<int>(row.size()) != cols)
            throw NumericalError("read_trajectory_csv: row width mismatch");
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw NumericalError("read_trajectory_csv: need at least two samples");

    Trajectory traj;
    traj.h = rows[1][0] - rows[0][0];
    if (!(traj.h > 0.0)) throw NumericalError("read_trajectory_csv: non-increasing time column");
    const int K = static_cast<int>(rows.size());
    traj.u.resize(m, K);
    traj.x.resize(n, K);
    traj.dx.resize(n, K);
    traj.y.resize(p, K);
    for (int k = 0; k < K; ++k) {
        const double expected_t = static_cast<double>(k) * traj.h;
        if (std::abs(rows[k][0] - expected_t) > 1e-9 * (1.0 + std::abs(expected_t)))
            throw NumericalError("read_trajectory_csv: non-uniform time grid");
        int c = 1;
        for (int i = 0; i < m; ++i) traj.u(i, k) = rows[k][c++];
        for (int i = 0; i < n; ++i) traj.x(i, k) = rows[k][c++];
        for (int i = 0; i < n; ++i) traj.dx(i, k) = rows[k][c++];
        for (int i = 0; i < p; ++i) traj.y(i, k) = rows[k][c++];
    }
    return traj;
}

}  // namespace dbsync
