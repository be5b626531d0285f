#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "herdsim/core.hpp"
#include "herdsim/rng.hpp"

namespace herdsim::social {

struct ZeroLikelihood : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ImpossibleAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TieBreak { LowestIndex, SeededUniform };

struct AgentModel {
    ObservationModel obs;
    CostSpec cost;
    TieBreak tie_break = TieBreak::LowestIndex;

    AgentModel(ObservationModel o, CostSpec c, TieBreak t = TieBreak::LowestIndex);

    int n_states() const { return obs.n_states(); }
    int n_obs() const { return obs.n_obs(); }
    int n_actions() const { return cost.n_actions(); }
    // Protocols that replay observations as actions need U == Y.
    void require_action_obs_consistency() const;
};

struct StepRecord {
    int step = 0;  // 1-based
    int state = 0;
    int obs = 0;
    int action = 0;
    int mode = 0;          // protocol-specific (e.g. 1 = revealed, 0 = herded)
    double incentive = 0.0;
    double step_cost = 0.0;
    std::vector<double> prior_before;
    std::vector<double> prior_after;
};

struct EpisodeTrace {
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    std::optional<int> cascade_time;  // 1-based step index
    std::optional<int> herd_time;

    // Public-prior path pi_1 = pi0, ..., pi_{n+1}.
    std::vector<std::vector<double>> prior_path() const;
    std::vector<int> actions() const;
};

// posterior(x) = B(x,y) prior(x) / sum_x' B(x',y) prior(x').
// ZeroLikelihood when the normalizer is <= 1e-300.
Belief bayes_update(const Belief& prior, int y, const ObservationModel& m);

// Windowed update: posterior proportional to prior(x) * prod_m B(x, ys[m]).
Belief bayes_update_window(const Belief& prior, const std::vector<int>& ys,
                           const ObservationModel& m);

// argmin_u sum_x c(x,u) posterior(x); exact ties resolved by tie_break.
int select_action(const Belief& posterior, const CostSpec& cost, TieBreak tie_break,
                  Rng* rng = nullptr);

// P(u | x = i, prior) for every state i: sum over observations y of
// B(i, y) * [agent acting from bayes_update(prior, y) picks u].
// With SeededUniform ties the tied weight is split evenly.
std::vector<double> action_likelihood(const Belief& prior, int u, const AgentModel& am);

// Public-prior filter T(prior, u) = normalize(R(prior, u) P prior), R from
// action_likelihood. transition rows are P(to | from); identity when absent.
// ImpossibleAction when the observed action has probability 0 under the model.
Belief public_prior_update(const Belief& prior, int u, const AgentModel& am,
                           const Matrix* transition = nullptr);

struct HerdTo {
    int action;
};
struct Learning {};
using Region = std::variant<HerdTo, Learning>;

// HerdTo(u) iff the agent would pick u after every observation y; ties are
// classified with the LowestIndex rule so the label is deterministic.
Region classify_region(const Belief& prior, const AgentModel& am);

bool is_herding(const Region& r);
std::optional<int> herd_action(const Region& r);

// Closed-form learning-region endpoints for X = 2 under c(x,u) = |u - x|,
// in the p = pi(state1) coordinate:
//   p_low  = min_y B(0,y) / (B(0,y) + B(1,y)),
//   p_high = max_y B(0,y) / (B(0,y) + B(1,y)),
// herding to 0 iff p <= p_low, learning iff p_low < p <= p_high (the upper
// endpoint stays Learning because the boundary tie breaks to action 0),
// herding to 1 iff p > p_high.
std::pair<double, double> herding_thresholds(const AgentModel& am);

// Sequential protocol: each step draws y from the true state, updates the
// (lagged, when M_shared > 0) public prior, acts myopically, and feeds the
// action back through the social-learning filter. With M_shared = M > 0 the
// agent pools the last M+1 observations and the public prior at step k
// incorporates actions only up to step k - M - 1.
EpisodeTrace run_protocol(const AgentModel& am, int true_state, const Belief& pi0, int horizon,
                          int m_shared, std::uint64_t seed);

// First 1-based index K such that all later priors match pi_K within 1e-10,
// sustained for at least 10 entries; nullopt when the trace ends first
// (censored) or never stabilizes.
std::optional<int> detect_cascade(const std::vector<std::vector<double>>& priors);

// Same rule over the action sequence.
std::optional<int> detect_herding(const std::vector<int>& actions);

// Trace CSV: step,state,obs,action,mode,incentive,prior_0..prior_{X-1}.
void write_trace_csv(const std::string& path, const EpisodeTrace& t, int n_states);

struct RunSummary {
    std::uint64_t seed = 0;
    std::optional<int> cascade_time;
    std::optional<int> herd_time;
    int final_action = -1;
    bool correct = false;
};

// Summary CSV: seed,cascade_time,herd_time,final_action,correct
// (absent detection times written as -1).
void write_summary_csv(const std::string& path, const std::vector<RunSummary>& rows);

}  // namespace herdsim::social
