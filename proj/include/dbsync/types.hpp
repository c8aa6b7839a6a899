#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dbsync {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Matrix/vector shapes do not line up.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical integration produced non-finite values.
struct DivergenceError : std::runtime_error {
    double time;
    explicit DivergenceError(double t)
        : std::runtime_error("state diverged (non-finite values) at t = " + std::to_string(t)),
          time(t) {}
};

// A data-based representation could not be matched within tolerance.
struct RepresentationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A feasibility program has no solution with the required margin.
struct InfeasibleError : std::runtime_error {
    double margin;
    InfeasibleError(const std::string& what, double achieved_margin)
        : std::runtime_error(what), margin(achieved_margin) {}
};

// The conic solver did not converge; distinct from infeasibility.
struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numeric refusal: ill-conditioned inverse, rank collapse, residual overflow.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation was invoked outside its valid window or state.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Filesystem trouble: unreadable input, unwritable output.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic RNG. Uniform doubles are derived from the raw 64-bit stream
// directly so that sequences are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ULL) {}

    std::uint64_t next() {
        // xorshift* generator
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    double uniform(double lo = -1.0, double hi = 1.0) {
        const double u01 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u01;
    }

    Vector uniform_vector(int n, double lo = -1.0, double hi = 1.0) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }

    Matrix uniform_matrix(int rows, int cols, double lo = -1.0, double hi = 1.0) {
        Matrix m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
        return m;
    }

private:
    std::uint64_t state_;
};

}  // namespace dbsync
