#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "herdsim/matrix.hpp"

namespace herdsim::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MalformedProgram : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// minimize objective . x  subject to  A x <= b,  lower <= x <= upper.
// Equality constraints are encoded by callers as paired <= rows.
struct LinearProgram {
    std::vector<double> objective;
    Matrix A;
    std::vector<double> b;
    std::vector<double> lower;  // -kInf allowed
    std::vector<double> upper;  // +kInf allowed

    static LinearProgram with_vars(int n) {
        LinearProgram p;
        p.objective.assign(n, 0.0);
        p.lower.assign(n, -kInf);
        p.upper.assign(n, kInf);
        p.A = Matrix(0, n);
        return p;
    }
    int n_vars() const { return static_cast<int>(objective.size()); }
    void add_row(const std::vector<double>& coef, double ub);
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> point;    // when Optimal
    double objective_value = 0.0; // when Optimal
};

// Two-phase primal simplex with Bland's anti-cycling rule; dense tableau.
// Deterministic for identical input. Pivot tolerance 1e-10.
LpSolution solve(const LinearProgram& p, long max_pivots = 100000);

// Phase-1 style wrapper: zero objective, returns any feasible point or Infeasible.
LpSolution solve_feasibility(const Matrix& A, const std::vector<double>& b,
                             const std::vector<double>& lower, const std::vector<double>& upper,
                             long max_pivots = 100000);

}  // namespace herdsim::lp
