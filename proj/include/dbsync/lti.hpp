#pragma once

#include "dbsync/types.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace dbsync {

/// Continuous-time linear system  dx/dt = A x + B u,  y = C x.
/// m = 0 is allowed for autonomous systems (leaders).
struct LtiSystem {
    Matrix A, B, C;

    LtiSystem(Matrix a, Matrix b, Matrix c);

    // C defaults to the identity (full state output).
    static LtiSystem state_output(Matrix a, Matrix b);

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(C.rows()); }
};

/// Input signal on [0, duration). value() is right-continuous; left_value()
/// is the limit from below, which integration stages landing exactly on a
/// switching instant must use.
class Signal {
public:
    virtual ~Signal() = default;
    virtual int dim() const = 0;
    virtual Vector value(double t) const = 0;
    virtual Vector left_value(double t) const { return value(t); }
};

class ZeroSignal : public Signal {
public:
    explicit ZeroSignal(int dim) : dim_(dim) {}
    int dim() const override { return dim_; }
    Vector value(double) const override { return Vector::Zero(dim_); }

private:
    int dim_;
};

class ConstantSignal : public Signal {
public:
    explicit ConstantSignal(Vector v) : v_(std::move(v)) {}
    int dim() const override { return static_cast<int>(v_.size()); }
    Vector value(double) const override { return v_; }

private:
    Vector v_;
};

class FunctionSignal : public Signal {
public:
    FunctionSignal(int dim, std::function<Vector(double)> f) : dim_(dim), f_(std::move(f)) {}
    int dim() const override { return dim_; }
    Vector value(double t) const override { return f_(t); }

private:
    int dim_;
    std::function<Vector(double)> f_;
};

/// Hold-and-switch excitation: u(t + jT) = mu_j for 0 <= t < T.
struct PcpeInput {
    double hold_period = 0.0;  // T
    Matrix values;             // m x M, column j = mu_j
    int order = 0;             // L

    int dim() const { return static_cast<int>(values.rows()); }
    int holds() const { return static_cast<int>(values.cols()); }

    // Depth-L block Hankel matrix of the hold values, (m L) x (M - L + 1).
    Matrix block_hankel() const;
};

class PcpeSignal : public Signal {
public:
    explicit PcpeSignal(PcpeInput input);
    int dim() const override { return input_.dim(); }
    Vector value(double t) const override;
    Vector left_value(double t) const override;

private:
    PcpeInput input_;
};

/// True iff the depth-L block Hankel matrix of the hold values has full row
/// rank m*L (singular values, relative threshold 1e-8).
bool is_persistently_exciting(const PcpeInput& input);

/// Draw hold values uniformly from [-1,1]^m until the rank condition holds.
/// Requires M >= L(m+1) - 1. Deterministic for a fixed seed.
PcpeInput generate_pcpe(int m, int order, double T, int M, std::uint64_t seed);

/// Test oracle: the hold period must avoid 2*pi*k / |Im(lambda_j - lambda_k)|
/// for every eigenvalue pair of A and every integer k >= 1.
bool check_period_admissible(const LtiSystem& sys, double T, double tol = 1e-9);

/// Samples of one experiment on [0, duration): column k is the value at k*h.
/// dx is recorded from the model, so dx_k = A x_k + B u_k holds exactly.
struct Trajectory {
    double h = 0.0;
    Matrix u, x, dx, y;

    int samples() const { return static_cast<int>(x.cols()); }
    double duration() const { return h * samples(); }
};

/// Classical fixed-step 4th-order integration. The final stage of each step
/// evaluates the input through Signal::left_value so hold switches aligned
/// with the step grid do not pollute the order of the method.
Trajectory simulate(const LtiSystem& sys, const Vector& x0, const Signal& input,
                    double duration, double h);

enum class Channel { Input, State, Derivative, Output };

/// Sampled family t -> [xi(t) xi(t+T) ... xi(t+(M-1)T)] on the step grid of
/// [0, T).
struct HankelFamily {
    double step = 0.0;
    double T = 0.0;
    int M = 0;
    std::vector<Matrix> mats;

    int grid_size() const { return static_cast<int>(mats.size()); }
    const Matrix& at_index(int i) const { return mats.at(static_cast<std::size_t>(i)); }
    const Matrix& at_time(double tau) const;
};

/// Row-data matrix family of one channel. T must be an integer multiple of
/// the trajectory step; columns are exact sample reads, no interpolation.
HankelFamily hankel_row(const Trajectory& traj, Channel channel, double T, int M);

/// All row-data matrices of one experiment. Hu is the t = 0 input matrix;
/// under a PCPE input the whole input family is constant and equal to it.
struct DataMatrixSet {
    double T = 0.0;
    int M = 0;
    double step = 0.0;
    Matrix Hu;
    HankelFamily Hx, Hdx, Hy;
};

DataMatrixSet build_data_matrices(const Trajectory& traj, double T, int M);

/// CSV with header t,u_1..u_m,x_1..x_n,dx_1..dx_n,y_1..y_p and 17 significant
/// digits per value (round-trips doubles exactly).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace dbsync
