#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "herdsim/core.hpp"
#include "herdsim/social.hpp"

namespace herdsim::control {

struct DegenerateParams : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Centralized optimal-stopping problem: agents reveal observations until the
// controller stops and announces the target state.
struct StoppingProblem {
    social::AgentModel agent;
    double rho;            // discount in (0,1)
    double delay_d;        // per-step cost while the target state is active
    double error_upsilon;  // misclassification penalty at the stop
    int target_state = 0;  // e_1
    int horizon;

    void validate() const;
};

// Decentralized problem: autonomous agents paid to reveal.
struct IncentiveProblem {
    social::AgentModel agent;
    IncentiveCostParams params;
    double g0;   // reveal-reward scale, g(k) = g0 / (1 + k)
    double rho;
    int horizon;
    std::optional<double> budget;

    void validate() const;
};

enum class PolicyMode { CentralStop, Incentive };
enum class Decision { Stop = 1, Continue = 2 };

struct ThresholdPolicy {
    double theta;  // in [0,1]
    PolicyMode mode = PolicyMode::CentralStop;
    std::optional<double> sigmoid_eps;  // none = hard threshold
};

// Constrained decision rule: pass the observation through while continuing
// (requires U == Y), take the myopic public action at the stop.
int constrained_decision(const Belief& prior, int y, Decision d, const CostSpec& cost);

// Hard rule: Continue iff prior(0) <= theta. With sigmoid_eps present the
// decision is Continue with probability 1 / (1 + exp((prior(0) - theta)/eps)).
Decision hard_threshold_decide(const ThresholdPolicy& p, const Belief& prior, Rng& rng);

// The smoothed continue probability itself (1 at prior(0) << theta).
double continue_probability(const ThresholdPolicy& p, const Belief& prior);

struct StoppingRun {
    int stop_time = -1;  // -1: never stopped before the horizon
    int true_state = 0;
    bool announced_correct = false;
    double cost = 0.0;
};

struct StoppingEval {
    double mean_cost = 0.0;
    double mean_stop_time = 0.0;  // censored runs count as horizon
    double accuracy = 0.0;        // fraction of runs whose final verdict matches the state
    std::vector<StoppingRun> runs;
};

// Realized discounted stopping cost, averaged over n_runs. Per run: while the
// policy continues, accrue rho^{k-1} (c(x, u_k) + d 1(x = target)) with
// u_k = y_k; at the stop add rho^{tau-1} (Upsilon 1(x != target)
// + min_u c(x,u)/(1-rho)); nothing terminal if the horizon truncates first.
// The true state is sampled uniformly; pi0 is the public prior the policy sees.
StoppingEval eval_socialistic_cost(const StoppingProblem& sp, const ThresholdPolicy& policy,
                                   const Belief& pi0, int n_runs, std::uint64_t seed);

// Indifference price that makes revealing weakly preferred, scalarized at the
// posterior probability q of the flagged state (index 1):
//   chi = max(0, ((alpha_1 - alpha_0) q + (delta_1 - delta_0)) / |omega_1 - omega_0|).
// DegenerateParams when omega_1 == omega_0. X = 2 only.
double incentive_chi(const Belief& prior, int y, const IncentiveProblem& ip);

// 0 below the threshold, chi(y, prior) above it (per the experimental form:
// incentivize when prior(0) > theta).
double incentive_policy_decide(const ThresholdPolicy& p, const Belief& prior, int y,
                               const IncentiveProblem& ip, Rng& rng);

// One incentivized episode: the controller announces p_k, the agent reveals
// u = y exactly when p_k >= chi(y, prior), otherwise herds on the myopic
// public action; the public prior moves only on reveals. Records the payment
// stream and the fusion cost f(p_k, k) = p_k - g(k) 1(revealed).
social::EpisodeTrace run_incentivized_episode(const IncentiveProblem& ip,
                                              const ThresholdPolicy& policy, int true_state,
                                              const Belief& pi0, std::uint64_t seed,
                                              bool clamp_unit_incentive = false);

struct FusionEval {
    double mean_cost = 0.0;             // sum_k f(p_k, k) per run, averaged (or discounted)
    double mean_total_incentive = 0.0;  // sum_k p_k
    double classification_rate = 0.0;   // final myopic estimate equals the state
};

// Monte-Carlo fusion objective; true state uniform. discounted=false is the
// truncated empirical form used by the policy search.
FusionEval eval_fusion_cost(const IncentiveProblem& ip, const ThresholdPolicy& policy,
                            const Belief& pi0, int n_runs, std::uint64_t seed,
                            bool discounted = false, bool clamp_unit_incentive = false);

struct SpsaIterate {
    int iter = 0;
    double theta = 0.0;
    double cost = 0.0;  // cost estimate at the updated iterate's minus-side pair mean
};

struct SpsaParams {
    double initial_theta = 0.5;
    double delta = 1.0;
    int steps = 100;
    double beta_start = 0.05;
    double beta_end = 0.005;  // linear schedule
};

// Two-sided simultaneous-perturbation descent on the scalar threshold:
//   grad_m = (J(theta + delta) - J(theta - delta)) / (2 delta),
//   theta <- clamp(theta - beta_m grad_m, 0, 1).
// cost(theta, seed) evaluates the smoothed policy; perturbed evaluations get
// fresh derived seeds each iteration.
std::vector<SpsaIterate> spsa_optimize(const std::function<double(double, std::uint64_t)>& cost,
                                       const SpsaParams& params, std::uint64_t seed);

// Smoothed-policy objectives for the two control problems.
std::function<double(double, std::uint64_t)> make_fusion_objective(const IncentiveProblem& ip,
                                                                   const Belief& pi0,
                                                                   double sigmoid_eps,
                                                                   int episode_len,
                                                                   int n_runs_per_eval);
std::function<double(double, std::uint64_t)> make_socialistic_objective(const StoppingProblem& sp,
                                                                        const Belief& pi0,
                                                                        double sigmoid_eps,
                                                                        int n_runs_per_eval);

struct BinStat {
    double lo = 0.0, hi = 0.0;
    int count = 0;
    double mean_now = 0.0;
    double mean_next = 0.0;
    double se = 0.0;
    bool ok = true;
};

struct SubmartingaleReport {
    bool pass = true;
    int steps_used = 0;
    std::vector<BinStat> bins;
};

// Binned conditional-mean test of E[p_{k+1} | bin] >= mean p_k - 3 SE, over
// prior bins of the flagged state, restricted to transitions where both steps
// pay (the incentivized regime; the absorbing zero-payment tail carries no
// information). InsufficientData below 5000 usable steps.
SubmartingaleReport submartingale_check(const std::vector<social::EpisodeTrace>& traces);

struct BudgetRow {
    double budget = 0.0;
    double empirical = 0.0;  // P(sum_k p_k >= budget)
    double bound = 0.0;      // T / budget
    bool pass = true;
};

// Doob-style budget overrun check on unit-clamped incentives:
// empirical P(sum p >= B) <= T/B + 3 SE for every budget.
std::vector<BudgetRow> budget_bound_check(const IncentiveProblem& ip,
                                          const ThresholdPolicy& policy, const Belief& pi0, int T,
                                          const std::vector<double>& budgets, int n_runs,
                                          std::uint64_t seed);

struct ValueIterationResult {
    std::vector<double> grid;       // pi(target) values
    std::vector<Decision> decision; // optimal decision per grid point
    int sweeps = 0;
    int crossings = 0;              // label sign changes along the grid
};

// Grid value iteration on the transformed stopping costs
//   C(pi,1) = min_u c_u' pi / (1 - rho)
//   C(pi,2) = sum_y c_y' B_y pi + (d + (1-rho) Upsilon) pi(target) - (1-rho) Upsilon
// with nearest-grid-point belief projection, to 1e-8 sup norm; X = 2 and
// U == Y required. NonConvergence after 10000 sweeps.
ValueIterationResult value_iteration_diagnostic(const StoppingProblem& sp, int grid_n);

}  // namespace herdsim::control
