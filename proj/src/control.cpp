#include "herdsim/control.hpp"

#include <algorithm>
#include <cmath>

namespace herdsim::control {

void StoppingProblem::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw DimensionMismatch("rho must lie in (0,1)");
    if (delay_d < 0.0 || error_upsilon < 0.0) throw DimensionMismatch("negative stopping costs");
    if (horizon < 1) throw DimensionMismatch("horizon must be >= 1");
    if (target_state < 0 || target_state >= agent.n_states())
        throw DimensionMismatch("target state out of range");
}

void IncentiveProblem::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw DimensionMismatch("rho must lie in (0,1)");
    if (g0 < 0.0) throw DimensionMismatch("g0 must be >= 0");
    if (horizon < 1) throw DimensionMismatch("horizon must be >= 1");
    params.validate();
}

int constrained_decision(const Belief& prior, int y, Decision d, const CostSpec& cost) {
    if (d == Decision::Continue) {
        if (cost.n_actions() != cost.n_states() || y >= cost.n_actions())
            throw DimensionMismatch("continue mode replays observations; needs U == Y");
        return y;
    }
    return social::select_action(prior, cost, social::TieBreak::LowestIndex);
}

double continue_probability(const ThresholdPolicy& p, const Belief& prior) {
    if (!p.sigmoid_eps) return prior[0] <= p.theta ? 1.0 : 0.0;
    return 1.0 / (1.0 + std::exp((prior[0] - p.theta) / *p.sigmoid_eps));
}

Decision hard_threshold_decide(const ThresholdPolicy& p, const Belief& prior, Rng& rng) {
    if (!p.sigmoid_eps) return prior[0] <= p.theta ? Decision::Continue : Decision::Stop;
    return rng.uniform01() < continue_probability(p, prior) ? Decision::Continue : Decision::Stop;
}

StoppingEval eval_socialistic_cost(const StoppingProblem& sp, const ThresholdPolicy& policy,
                                   const Belief& pi0, int n_runs, std::uint64_t seed) {
    sp.validate();
    sp.agent.require_action_obs_consistency();
    StoppingEval ev;
    ev.runs.reserve(static_cast<size_t>(n_runs));
    const CostSpec& c = sp.agent.cost;
    for (int run = 0; run < n_runs; ++run) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(run)));
        int x = rng.uniform_int(sp.agent.n_states());  // true state uniform
        Belief pi = pi0;
        StoppingRun r;
        r.true_state = x;
        double disc = 1.0;
        std::vector<double> row(static_cast<size_t>(sp.agent.n_obs()));
        for (int k = 1; k <= sp.horizon; ++k) {
            if (hard_threshold_decide(policy, pi, rng) == Decision::Stop) {
                double tail = 1e300;
                for (int u = 0; u < c.n_actions(); ++u) tail = std::min(tail, c.cost(x, u));
                r.cost += disc * (sp.error_upsilon * (x != sp.target_state ? 1.0 : 0.0) +
                                  tail / (1.0 - sp.rho));
                r.stop_time = k;
                r.announced_correct = (x == sp.target_state);
                break;
            }
            for (int y = 0; y < sp.agent.n_obs(); ++y)
                row[static_cast<size_t>(y)] = sp.agent.obs.p(x, y);
            int y = rng.categorical(row);
            int u = y;  // constrained rule while continuing
            r.cost += disc * (c.cost(x, u) + sp.delay_d * (x == sp.target_state ? 1.0 : 0.0));
            pi = social::bayes_update(pi, y, sp.agent.obs);
            disc *= sp.rho;
        }
        if (r.stop_time < 0) {
            // truncated: final verdict is the myopic estimate under the last prior
            int u = social::select_action(pi, c, social::TieBreak::LowestIndex);
            r.announced_correct = (u == x);
        }
        ev.mean_cost += r.cost;
        ev.mean_stop_time += r.stop_time < 0 ? sp.horizon : r.stop_time;
        ev.accuracy += r.announced_correct ? 1.0 : 0.0;
        ev.runs.push_back(r);
    }
    ev.mean_cost /= n_runs;
    ev.mean_stop_time /= n_runs;
    ev.accuracy /= n_runs;
    return ev;
}

double incentive_chi(const Belief& prior, int y, const IncentiveProblem& ip) {
    if (prior.size() != 2) throw DimensionMismatch("incentive_chi needs X = 2");
    const auto& p = ip.params;
    double wd = p.omega[1] - p.omega[0];
    if (wd == 0.0) throw DegenerateParams("omega entries are equal");
    const ObservationModel& B = ip.agent.obs;
    double num = B.p(1, y) * prior[1];
    double den = num + B.p(0, y) * prior[0];
    if (den <= 0.0) throw social::ZeroLikelihood("zero-probability observation");
    double q = num / den;  // posterior of the flagged state (index 1)
    double chi = ((p.alpha[1] - p.alpha[0]) * q + (p.delta[1] - p.delta[0])) / std::fabs(wd);
    return std::max(0.0, chi);
}

double incentive_policy_decide(const ThresholdPolicy& p, const Belief& prior, int y,
                               const IncentiveProblem& ip, Rng& rng) {
    bool pay;
    if (!p.sigmoid_eps) {
        pay = prior[0] > p.theta;
    } else {
        pay = rng.uniform01() < 1.0 - continue_probability(p, prior);
    }
    return pay ? incentive_chi(prior, y, ip) : 0.0;
}

namespace {
// Expected incentivized mode costs at flagged-state posterior q: revealing
// trades the flagged action's coefficients against the payment. Revealing is
// weakly preferred exactly when p >= chi.
double mode_cost_gap(const IncentiveProblem& ip, double q, double pay) {
    const auto& pr = ip.params;
    return (pr.alpha[1] - pr.alpha[0]) * q + (pr.delta[1] - pr.delta[0]) -
           std::fabs(pr.omega[1] - pr.omega[0]) * pay;
}
}  // namespace

social::EpisodeTrace run_incentivized_episode(const IncentiveProblem& ip,
                                              const ThresholdPolicy& policy, int true_state,
                                              const Belief& pi0, std::uint64_t seed,
                                              bool clamp_unit_incentive) {
    ip.validate();
    ip.agent.require_action_obs_consistency();
    if (ip.agent.n_states() != 2) throw DimensionMismatch("incentivized episodes need X = 2");
    Rng rng(seed);
    social::EpisodeTrace trace;
    trace.seed = seed;
    Belief pi = pi0;
    std::vector<double> row(static_cast<size_t>(ip.agent.n_obs()));
    for (int k = 1; k <= ip.horizon; ++k) {
        for (int y = 0; y < ip.agent.n_obs(); ++y)
            row[static_cast<size_t>(y)] = ip.agent.obs.p(true_state, y);
        int y = rng.categorical(row);
        double pay = incentive_policy_decide(policy, pi, y, ip, rng);
        if (clamp_unit_incentive) pay = std::min(pay, 1.0);
        double chi = incentive_chi(pi, y, ip);
        bool reveal = pay >= chi - 1e-12;
        int u = reveal ? y : social::select_action(pi, ip.agent.cost, social::TieBreak::LowestIndex);
        double g = ip.g0 / (1.0 + k);
        double fusion = pay - (reveal ? g : 0.0);

        social::StepRecord rec;
        rec.step = k;
        rec.state = true_state;
        rec.obs = y;
        rec.action = u;
        rec.mode = reveal ? 1 : 0;
        rec.incentive = pay;
        rec.step_cost = fusion;
        rec.prior_before = pi.probs();
        if (reveal) pi = social::bayes_update(pi, y, ip.agent.obs);
        rec.prior_after = pi.probs();
        trace.steps.push_back(std::move(rec));
    }
    trace.cascade_time = social::detect_cascade(trace.prior_path());
    trace.herd_time = social::detect_herding(trace.actions());
    return trace;
}

FusionEval eval_fusion_cost(const IncentiveProblem& ip, const ThresholdPolicy& policy,
                            const Belief& pi0, int n_runs, std::uint64_t seed, bool discounted,
                            bool clamp_unit_incentive) {
    FusionEval ev;
    for (int run = 0; run < n_runs; ++run) {
        std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(run));
        Rng pick(s);
        int x = pick.uniform_int(ip.agent.n_states());
        social::EpisodeTrace tr = run_incentivized_episode(ip, policy, x, pi0,
                                                           derive_seed(s, 1), clamp_unit_incentive);
        double cost = 0.0, total = 0.0, disc = 1.0;
        for (const auto& st : tr.steps) {
            cost += (discounted ? disc : 1.0) * st.step_cost;
            total += st.incentive;
            disc *= ip.rho;
        }
        const auto& last = tr.steps.back();
        Belief fin = validate_belief(last.prior_after);
        int est = social::select_action(fin, ip.agent.cost, social::TieBreak::LowestIndex);
        ev.mean_cost += cost;
        ev.mean_total_incentive += total;
        ev.classification_rate += est == x ? 1.0 : 0.0;
    }
    ev.mean_cost /= n_runs;
    ev.mean_total_incentive /= n_runs;
    ev.classification_rate /= n_runs;
    return ev;
}

std::vector<SpsaIterate> spsa_optimize(const std::function<double(double, std::uint64_t)>& cost,
                                       const SpsaParams& params, std::uint64_t seed) {
    if (!(params.delta > 0.0)) throw DimensionMismatch("spsa delta must be > 0");
    std::vector<SpsaIterate> history;
    history.reserve(static_cast<size_t>(params.steps));
    double theta = params.initial_theta;
    for (int m = 0; m < params.steps; ++m) {
        double beta = params.steps == 1
                          ? params.beta_start
                          : params.beta_start +
                                (params.beta_end - params.beta_start) * m / (params.steps - 1);
        double jp = cost(theta + params.delta, derive_seed(seed, 2 * static_cast<std::uint64_t>(m)));
        double jm = cost(theta - params.delta, derive_seed(seed, 2 * static_cast<std::uint64_t>(m) + 1));
        double grad = (jp - jm) / (2.0 * params.delta);
        theta = std::clamp(theta - beta * grad, 0.0, 1.0);
        history.push_back({m + 1, theta, 0.5 * (jp + jm)});
    }
    return history;
}

std::function<double(double, std::uint64_t)> make_fusion_objective(const IncentiveProblem& ip,
                                                                   const Belief& pi0,
                                                                   double sigmoid_eps,
                                                                   int episode_len,
                                                                   int n_runs_per_eval) {
    IncentiveProblem p = ip;
    p.horizon = episode_len;
    return [p, pi0, sigmoid_eps, n_runs_per_eval](double theta, std::uint64_t s) {
        ThresholdPolicy pol{theta, PolicyMode::Incentive, sigmoid_eps};
        return eval_fusion_cost(p, pol, pi0, n_runs_per_eval, s).mean_cost;
    };
}

std::function<double(double, std::uint64_t)> make_socialistic_objective(const StoppingProblem& sp,
                                                                        const Belief& pi0,
                                                                        double sigmoid_eps,
                                                                        int n_runs_per_eval) {
    return [sp, pi0, sigmoid_eps, n_runs_per_eval](double theta, std::uint64_t s) {
        ThresholdPolicy pol{theta, PolicyMode::CentralStop, sigmoid_eps};
        return eval_socialistic_cost(sp, pol, pi0, n_runs_per_eval, s).mean_cost;
    };
}

SubmartingaleReport submartingale_check(const std::vector<social::EpisodeTrace>& traces) {
    // paired transitions inside the incentivized regime, binned by the prior
    // of the flagged state at the second step
    std::vector<double> now, next, prior;
    for (const auto& tr : traces) {
        for (size_t k = 0; k + 1 < tr.steps.size(); ++k) {
            double a = tr.steps[k].incentive;
            double b = tr.steps[k + 1].incentive;
            if (a > 0.0 && b > 0.0) {
                now.push_back(a);
                next.push_back(b);
                prior.push_back(tr.steps[k + 1].prior_before[1]);
            }
        }
    }
    SubmartingaleReport rep;
    rep.steps_used = static_cast<int>(now.size());
    if (rep.steps_used < 5000)
        throw InsufficientData("submartingale_check needs >= 5000 incentivized transitions, got " +
                               std::to_string(rep.steps_used));
    double lo = *std::min_element(prior.begin(), prior.end());
    double hi = *std::max_element(prior.begin(), prior.end()) + 1e-12;
    const int nb = 12;
    for (int b = 0; b < nb; ++b) {
        BinStat bin;
        bin.lo = lo + (hi - lo) * b / nb;
        bin.hi = lo + (hi - lo) * (b + 1) / nb;
        double s_now = 0, s_next = 0, s_d = 0, s_d2 = 0;
        for (size_t i = 0; i < prior.size(); ++i) {
            if (prior[i] < bin.lo || prior[i] >= bin.hi) continue;
            ++bin.count;
            s_now += now[i];
            s_next += next[i];
            double d = next[i] - now[i];
            s_d += d;
            s_d2 += d * d;
        }
        if (bin.count < 50) continue;
        bin.mean_now = s_now / bin.count;
        bin.mean_next = s_next / bin.count;
        double var = (s_d2 - s_d * s_d / bin.count) / (bin.count - 1);
        bin.se = std::sqrt(std::max(0.0, var) / bin.count);
        bin.ok = bin.mean_next >= bin.mean_now - 3.0 * bin.se;
        if (!bin.ok) rep.pass = false;
        rep.bins.push_back(bin);
    }
    return rep;
}

std::vector<BudgetRow> budget_bound_check(const IncentiveProblem& ip,
                                          const ThresholdPolicy& policy, const Belief& pi0, int T,
                                          const std::vector<double>& budgets, int n_runs,
                                          std::uint64_t seed) {
    IncentiveProblem p = ip;
    p.horizon = T;
    std::vector<double> totals;
    totals.reserve(static_cast<size_t>(n_runs));
    for (int run = 0; run < n_runs; ++run) {
        std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(run));
        Rng pick(s);
        int x = pick.uniform_int(p.agent.n_states());
        social::EpisodeTrace tr =
            run_incentivized_episode(p, policy, x, pi0, derive_seed(s, 1), /*clamp=*/true);
        double tot = 0.0;
        for (const auto& st : tr.steps) tot += st.incentive;
        totals.push_back(tot);
    }
    std::vector<BudgetRow> rows;
    for (double B : budgets) {
        BudgetRow r;
        r.budget = B;
        int exceed = 0;
        for (double t : totals)
            if (t >= B) ++exceed;
        r.empirical = static_cast<double>(exceed) / n_runs;
        r.bound = static_cast<double>(T) / B;
        double se = std::sqrt(r.empirical * (1.0 - r.empirical) / n_runs);
        r.pass = r.empirical <= r.bound + 3.0 * se;
        rows.push_back(r);
    }
    return rows;
}

ValueIterationResult value_iteration_diagnostic(const StoppingProblem& sp, int grid_n) {
    sp.validate();
    if (sp.agent.n_states() != 2) throw DimensionMismatch("diagnostic needs X = 2");
    sp.agent.require_action_obs_consistency();
    if (grid_n < 2 || grid_n > 2001) throw DimensionMismatch("grid_n out of range");
    const ObservationModel& B = sp.agent.obs;
    const CostSpec& c = sp.agent.cost;
    const int Y = B.n_obs();
    const int t = sp.target_state;

    ValueIterationResult res;
    res.grid.resize(static_cast<size_t>(grid_n));
    std::vector<double> stop_cost(static_cast<size_t>(grid_n)), cont_cost(static_cast<size_t>(grid_n));
    std::vector<std::vector<int>> nxt(static_cast<size_t>(grid_n), std::vector<int>(Y));
    std::vector<std::vector<double>> sig(static_cast<size_t>(grid_n), std::vector<double>(Y));

    auto belief = [&](double pt) {
        std::vector<double> v(2);
        v[static_cast<size_t>(t)] = pt;
        v[static_cast<size_t>(1 - t)] = 1.0 - pt;
        return v;
    };
    for (int i = 0; i < grid_n; ++i) {
        double pt = static_cast<double>(i) / (grid_n - 1);
        res.grid[static_cast<size_t>(i)] = pt;
        std::vector<double> pi = belief(pt);
        double m = 1e300;
        for (int u = 0; u < c.n_actions(); ++u) {
            double ec = 0.0;
            for (int x = 0; x < 2; ++x) ec += c.cost(x, u) * pi[static_cast<size_t>(x)];
            m = std::min(m, ec);
        }
        stop_cost[static_cast<size_t>(i)] = m / (1.0 - sp.rho);
        double one_step = 0.0;
        for (int y = 0; y < Y; ++y) {
            double s = 0.0, cy = 0.0;
            for (int x = 0; x < 2; ++x) {
                s += B.p(x, y) * pi[static_cast<size_t>(x)];
                cy += c.cost(x, y) * B.p(x, y) * pi[static_cast<size_t>(x)];
            }
            one_step += cy;
            sig[static_cast<size_t>(i)][static_cast<size_t>(y)] = s;
            if (s <= 0.0) {
                nxt[static_cast<size_t>(i)][static_cast<size_t>(y)] = i;
            } else {
                double pt_next = B.p(t, y) * pi[static_cast<size_t>(t)] / s;
                nxt[static_cast<size_t>(i)][static_cast<size_t>(y)] =
                    static_cast<int>(std::lround(pt_next * (grid_n - 1)));
            }
        }
        cont_cost[static_cast<size_t>(i)] =
            one_step + (sp.delay_d + (1.0 - sp.rho) * sp.error_upsilon) * pt -
            (1.0 - sp.rho) * sp.error_upsilon;
    }

    std::vector<double> V(static_cast<size_t>(grid_n), 0.0), Vn(static_cast<size_t>(grid_n));
    int sweeps = 0;
    for (; sweeps < 10000; ++sweeps) {
        double diff = 0.0;
        for (int i = 0; i < grid_n; ++i) {
            double cont = cont_cost[static_cast<size_t>(i)];
            for (int y = 0; y < Y; ++y)
                cont += sp.rho * sig[static_cast<size_t>(i)][static_cast<size_t>(y)] *
                        V[static_cast<size_t>(nxt[static_cast<size_t>(i)][static_cast<size_t>(y)])];
            Vn[static_cast<size_t>(i)] = std::min(stop_cost[static_cast<size_t>(i)], cont);
            diff = std::max(diff, std::fabs(Vn[static_cast<size_t>(i)] - V[static_cast<size_t>(i)]));
        }
        V.swap(Vn);
        if (diff < 1e-8) break;
    }
    if (sweeps >= 10000) throw NonConvergence("value iteration did not converge in 10000 sweeps");
    res.sweeps = sweeps + 1;

    res.decision.resize(static_cast<size_t>(grid_n));
    for (int i = 0; i < grid_n; ++i) {
        double cont = cont_cost[static_cast<size_t>(i)];
        for (int y = 0; y < Y; ++y)
            cont += sp.rho * sig[static_cast<size_t>(i)][static_cast<size_t>(y)] *
                    V[static_cast<size_t>(nxt[static_cast<size_t>(i)][static_cast<size_t>(y)])];
        res.decision[static_cast<size_t>(i)] =
            stop_cost[static_cast<size_t>(i)] <= cont ? Decision::Stop : Decision::Continue;
    }
    for (int i = 0; i + 1 < grid_n; ++i)
        if (res.decision[static_cast<size_t>(i)] != res.decision[static_cast<size_t>(i + 1)])
            ++res.crossings;
    return res;
}

}  // namespace herdsim::control
