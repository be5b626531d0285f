#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "herdsim/matrix.hpp"

namespace herdsim {

struct NotASimplexPoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Probability vector over the state space. Immutable after construction;
// construct through validate_belief (or the trusted factory for values that
// are normalized by construction).
class Belief {
public:
    const std::vector<double>& probs() const { return p_; }
    double operator[](int i) const { return p_[static_cast<size_t>(i)]; }
    int size() const { return static_cast<int>(p_.size()); }

    friend Belief validate_belief(const std::vector<double>& raw);
    // For values produced by internal updates that are already exactly normalized.
    static Belief unchecked(std::vector<double> p) { return Belief(std::move(p)); }

private:
    explicit Belief(std::vector<double> p) : p_(std::move(p)) {}
    std::vector<double> p_;
};

// Accepts entries >= -1e-12 (clamped to 0) whose sum is within 1e-6 of 1,
// and renormalizes exactly. Anything else is NotASimplexPoint.
Belief validate_belief(const std::vector<double>& raw);

// Row-stochastic likelihood matrix with the fixed orientation
// entry(x, y) = P(y | x). Rows must sum to 1 within 1e-9.
class ObservationModel {
public:
    ObservationModel(Matrix likelihood);

    int n_states() const { return lik_.rows; }
    int n_obs() const { return lik_.cols; }
    double p(int x, int y) const { return lik_.at(x, y); }
    const Matrix& matrix() const { return lik_; }

private:
    Matrix lik_;
};

// Dense state x action cost table. Utilities are stored as negated costs.
class CostSpec {
public:
    CostSpec(Matrix table);

    int n_states() const { return t_.rows; }
    int n_actions() const { return t_.cols; }
    double cost(int x, int u) const { return t_.at(x, u); }
    const Matrix& matrix() const { return t_; }

    static CostSpec zero_one(int n);  // c(x,u) = 1(x != u)

private:
    Matrix t_;
};

struct IncentiveCostParams {
    std::vector<double> alpha;  // misclassification coefficient per action, > 0
    std::vector<double> delta;  // effort cost per action, > 0
    std::vector<double> omega;  // incentive coefficient per action; omega[1] != omega[0]

    void validate() const;
};

// All 2x2 minors nonnegative (slack 1e-12): m(i,k)m(j,l) - m(i,l)m(j,k) >= -1e-12
// over every i<j, k<l.
bool is_tp2(const ObservationModel& m);

// p1 >= p2 in the monotone-likelihood-ratio order:
// p1(i) p2(j) <= p1(j) p2(i) + 1e-12 for all i < j.
bool mlr_dominates(const Belief& p1, const Belief& p2);

// p1 >= p2 in first-order stochastic dominance:
// sum_{i>=j} p1(i) >= sum_{i>=j} p2(i) - 1e-12 for all j.
bool fosd_dominates(const Belief& p1, const Belief& p2);

struct AssumptionResult {
    bool ok = true;
    int state = -1;   // first violating state index, when !ok
    int action = -1;  // first violating action index, when !ok
};

struct StructuralReport {
    AssumptionResult s1, s2, s3, s4;
    bool all() const { return s1.ok && s2.ok && s3.ok && s4.ok; }
};

// Evaluates the four structural assumptions behind the threshold result:
//   S1: c(e_i, u) - c(e_{i+1}, u) >= 0
//   S2: c(e_X, u) - c(e_i, u) >= (1-rho) sum_y (c(e_X,u) B(X,y) - c(e_i,u) B(i,y))
//   S3: (1-rho) sum_y (c(e_1,u) B(1,y) - c(e_i,u) B(i,y)) >= c(e_1,u) - c(e_i,u)
//   S4: B is TP2
// written here with 0-based state indices (e_1 -> state 0, e_X -> state X-1).
StructuralReport check_structural_assumptions(const CostSpec& c, const ObservationModel& m,
                                              double rho);

}  // namespace herdsim
