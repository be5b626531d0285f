#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "herdsim/core.hpp"
#include "herdsim/lp.hpp"

namespace herdsim::brp {

struct TooFewEnvironments : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyCell : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ReconstructionInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Prior plus per-environment conditional action frequencies p_m(u | x).
struct BrpDataset {
    Belief prior;
    std::vector<Matrix> action_given_state;  // one X x U row-stochastic table per environment

    BrpDataset(Belief pr, std::vector<Matrix> cond);

    int n_envs() const { return static_cast<int>(action_given_state.size()); }
    int n_states() const { return prior.size(); }
    int n_actions() const { return action_given_state.front().cols; }

    // joint p_m(x, u) = prior(x) p_m(u | x)
    Matrix joint(int m) const;
    // revealed posterior p_m(x | u); columns for unused actions are zero
    Matrix posterior(int m) const;
    // action marginal p_m(u)
    std::vector<double> action_marginal(int m) const;
};

struct Sample {
    int environment;
    int state;
    int action;
};

// p_m(u|x) = count(m,x,u) / count(m,x). Every (environment, state) cell needs
// at least one sample; EmptyCell lists the missing pairs otherwise.
BrpDataset empirical_dataset(const std::vector<Sample>& samples, const Belief& prior, int n_envs,
                             int n_states, int n_actions);

// One linear row: sum_j coef[j] * var[j] <= ub.
struct LinRow {
    std::vector<std::pair<int, double>> coef;
    double ub = 0.0;
};

// Variable layout shared by the reconstruction programs:
//   r_m(x,u)   -> m*(X*U) + x*U + u                  (M*X*U vars, bounds [0,1])
//   z_m        -> M*X*U + m                          (M vars, bounds [0,1])
//   aux w_lmu  -> after z block, one per ordered l!=m and u (bounds [0,1])
// Margin variables, when present, come after the aux block.
struct ConstraintSystem {
    int n_r = 0;
    int n_z = 0;
    int n_aux = 0;
    std::vector<LinRow> nias;           // one per (m, used u, other action)
    std::vector<LinRow> niac_epigraph;  // |U| rows per aux variable
    std::vector<LinRow> niac_pairs;     // one per ordered environment pair
    int r_index(int m, int x, int u, int X, int U) const { return m * X * U + x * U + u; }
};

// NIAS rows over {r_m(x,u)}: for each environment and action pair (u, ubar),
// sum_x p_m(x|u) (r_m(x,ubar) - r_m(x,u)) <= -eps1. Actions with p_m(u) = 0
// generate no rows. The eps1 variable slot is left to the caller (coded as
// coefficient on `margin_var` when margin_var >= 0, else margin constant).
std::vector<LinRow> nias_constraints(const BrpDataset& d, int margin_var, double margin_const);

// Pairwise NIAC rows over {r_m(x,u), z_m} with the inner max linearized through
// epigraph auxiliaries; see ConstraintSystem for the variable layout.
ConstraintSystem niac_constraints(const BrpDataset& d, int margin_var, double margin_const);

struct Margins {
    double eps1 = 0.0;
    double eps2 = 0.0;
};

struct ReconstructionResult {
    std::vector<Matrix> utilities;   // r_m(x,u), one X x U table per environment
    std::vector<double> info_costs;  // z_m
    Margins margins;
    double reconstructed_acquisition_cost = 0.0;  // K_hat
};

enum class Feasibility { Ribum, NotRibum };

struct FeasibilityVerdict {
    Feasibility verdict = Feasibility::NotRibum;
    std::optional<ReconstructionResult> witness;  // present when Ribum
};

// Strict-margin rationality test: feasible utilities with both margins at least
// epsilon_min exist iff the verdict is Ribum.
FeasibilityVerdict feasibility_check(const BrpDataset& d, double epsilon_min = 1e-4);

// Maximize eps1 + eps2 subject to NIAS/NIAC; r, z normalized to [0,1].
// ReconstructionInfeasible when the best achievable eps1 + eps2 < 1e-9.
ReconstructionResult max_margin_reconstruct(const BrpDataset& d);

// Minimize sum |r_m(x,u)| at fixed required margins (the [0,1] normalization
// makes the objective plain sum r). ReconstructionInfeasible when the margins
// are unattainable.
ReconstructionResult sparse_reconstruct(const BrpDataset& d, double eps1, double eps2);

// K_hat = max_m ( z_m + sum_u max_ubar sum_x p_m(x,u) r_m(x,ubar)
//                      - sum_u sum_x p_m(x,u) r_m(x,u) ).
double reconstruct_info_cost(const BrpDataset& d, const std::vector<Matrix>& utilities,
                             const std::vector<double>& z);

// Gross expected utility sum_y max_u sum_x r(x,u) B(x,y) prior(x); the value
// functional of an attention strategy, the strategy itself taken as given.
double gross_expected_utility(const Matrix& utility, const ObservationModel& m,
                              const Belief& prior);

// Simulates the utility-maximizing protocol per environment (state from the
// prior, observation from that environment's matrix, Bayes posterior, argmax
// action with lowest-index ties) and tabulates empirical frequencies.
BrpDataset generate_ribum_dataset(const std::vector<Matrix>& utility_per_env,
                                  const std::vector<ObservationModel>& obs_per_env,
                                  const Belief& prior, int n_samples, std::uint64_t seed,
                                  std::vector<Sample>* raw_samples = nullptr);

// Direct (non-LP) evaluation of the worst NIAS / NIAC slack of a candidate
// solution; used to re-verify witnesses. Values <= -eps mean the margin holds.
Margins evaluate_margins(const BrpDataset& d, const std::vector<Matrix>& utilities,
                         const std::vector<double>& z);

// Dataset CSV: header environment,state,action then one sample per row.
std::vector<Sample> load_samples_csv(const std::string& path);
void write_utilities_csv(const std::string& path, const std::vector<Matrix>& utilities);
void write_report_csv(const std::string& path, const Margins& m, double k_hat);

}  // namespace herdsim::brp
