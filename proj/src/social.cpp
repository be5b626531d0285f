#include "herdsim/social.hpp"

#include <cmath>
#include <fstream>

namespace herdsim::social {

namespace {
constexpr double kZeroMass = 1e-300;

// Expected-cost argmin over actions for an (unnormalized) posterior weight
// vector; exact ties collected for the tie-break.
int argmin_action(const std::vector<double>& weight, const CostSpec& cost, TieBreak tie_break,
                  Rng* rng) {
    const int U = cost.n_actions();
    const int X = cost.n_states();
    int best = 0;
    double best_cost = 0.0;
    std::vector<int> tied;
    for (int u = 0; u < U; ++u) {
        double ec = 0.0;
        for (int x = 0; x < X; ++x) ec += cost.cost(x, u) * weight[x];
        if (u == 0 || ec < best_cost) {
            best = u;
            best_cost = ec;
            tied.assign(1, u);
        } else if (ec == best_cost) {
            tied.push_back(u);
        }
    }
    if (tied.size() > 1 && tie_break == TieBreak::SeededUniform && rng != nullptr)
        return tied[rng->uniform_int(static_cast<int>(tied.size()))];
    return best;  // lowest index
}

std::vector<double> posterior_weights(const Belief& prior, int y, const ObservationModel& m) {
    std::vector<double> w(prior.size());
    for (int x = 0; x < prior.size(); ++x) w[static_cast<size_t>(x)] = m.p(x, y) * prior[x];
    return w;
}

// P(u | x) marginalizing a window of w iid observations (enumerates Y^w).
std::vector<double> windowed_action_likelihood(const Belief& prior, int u, const AgentModel& am,
                                               int window) {
    const int X = am.n_states();
    const int Y = am.n_obs();
    std::vector<double> out(X, 0.0);
    std::vector<int> ys(window, 0);
    for (;;) {
        std::vector<double> w(X);
        for (int x = 0; x < X; ++x) {
            double v = prior[x];
            for (int t = 0; t < window; ++t) v *= am.obs.p(x, ys[t]);
            w[x] = v;
        }
        if (argmin_action(w, am.cost, TieBreak::LowestIndex, nullptr) == u) {
            for (int x = 0; x < X; ++x) {
                double prod = 1.0;
                for (int t = 0; t < window; ++t) prod *= am.obs.p(x, ys[t]);
                out[x] += prod;
            }
        }
        int t = window - 1;
        while (t >= 0 && ++ys[t] == Y) ys[t--] = 0;
        if (t < 0) break;
    }
    return out;
}

Belief apply_filter(const Belief& prior, const std::vector<double>& r, const Matrix* transition) {
    const int X = prior.size();
    std::vector<double> pred(prior.probs());
    if (transition != nullptr) {
        if (transition->rows != X || transition->cols != X)
            throw DimensionMismatch("transition matrix dimension");
        for (int i = 0; i < X; ++i) {
            double s = 0.0;
            for (int j = 0; j < X; ++j) s += transition->at(j, i) * prior[j];
            pred[static_cast<size_t>(i)] = s;
        }
    }
    double norm = 0.0;
    std::vector<double> v(X);
    for (int i = 0; i < X; ++i) {
        v[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] * pred[static_cast<size_t>(i)];
        norm += v[static_cast<size_t>(i)];
    }
    if (norm <= kZeroMass) throw ImpossibleAction("observed action has probability 0");
    for (double& x : v) x /= norm;
    return Belief::unchecked(std::move(v));
}
}  // namespace

AgentModel::AgentModel(ObservationModel o, CostSpec c, TieBreak t)
    : obs(std::move(o)), cost(std::move(c)), tie_break(t) {
    if (obs.n_states() != cost.n_states())
        throw DimensionMismatch("agent model: observation/cost state mismatch");
}

void AgentModel::require_action_obs_consistency() const {
    if (n_actions() != n_obs())
        throw DimensionMismatch("protocol replays observations as actions; needs U == Y");
}

std::vector<std::vector<double>> EpisodeTrace::prior_path() const {
    std::vector<std::vector<double>> out;
    out.reserve(steps.size() + 1);
    if (!steps.empty()) out.push_back(steps.front().prior_before);
    for (const auto& s : steps) out.push_back(s.prior_after);
    return out;
}

std::vector<int> EpisodeTrace::actions() const {
    std::vector<int> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.action);
    return out;
}

Belief bayes_update(const Belief& prior, int y, const ObservationModel& m) {
    if (prior.size() != m.n_states()) throw DimensionMismatch("bayes_update dimensions");
    std::vector<double> w = posterior_weights(prior, y, m);
    double norm = 0.0;
    for (double v : w) norm += v;
    if (norm <= kZeroMass) throw ZeroLikelihood("zero-probability observation");
    for (double& v : w) v /= norm;
    return Belief::unchecked(std::move(w));
}

Belief bayes_update_window(const Belief& prior, const std::vector<int>& ys,
                           const ObservationModel& m) {
    if (ys.empty()) throw DimensionMismatch("empty observation window");
    std::vector<double> w(prior.probs());
    for (int x = 0; x < prior.size(); ++x)
        for (int y : ys) w[static_cast<size_t>(x)] *= m.p(x, y);
    double norm = 0.0;
    for (double v : w) norm += v;
    if (norm <= kZeroMass) throw ZeroLikelihood("zero-probability observation window");
    for (double& v : w) v /= norm;
    return Belief::unchecked(std::move(w));
}

int select_action(const Belief& posterior, const CostSpec& cost, TieBreak tie_break, Rng* rng) {
    return argmin_action(posterior.probs(), cost, tie_break, rng);
}

std::vector<double> action_likelihood(const Belief& prior, int u, const AgentModel& am) {
    const int X = am.n_states();
    const int Y = am.n_obs();
    std::vector<double> out(X, 0.0);
    for (int y = 0; y < Y; ++y) {
        std::vector<double> w = posterior_weights(prior, y, am.obs);
        if (am.tie_break == TieBreak::SeededUniform) {
            // split weight evenly across exactly tied actions
            const int U = am.cost.n_actions();
            double best = 0.0;
            std::vector<int> tied;
            for (int a = 0; a < U; ++a) {
                double ec = 0.0;
                for (int x = 0; x < X; ++x) ec += am.cost.cost(x, a) * w[static_cast<size_t>(x)];
                if (a == 0 || ec < best) {
                    best = ec;
                    tied.assign(1, a);
                } else if (ec == best) {
                    tied.push_back(a);
                }
            }
            for (int a : tied)
                if (a == u)
                    for (int x = 0; x < X; ++x)
                        out[static_cast<size_t>(x)] += am.obs.p(x, y) / static_cast<double>(tied.size());
        } else if (argmin_action(w, am.cost, TieBreak::LowestIndex, nullptr) == u) {
            for (int x = 0; x < X; ++x) out[static_cast<size_t>(x)] += am.obs.p(x, y);
        }
    }
    return out;
}

Belief public_prior_update(const Belief& prior, int u, const AgentModel& am,
                           const Matrix* transition) {
    return apply_filter(prior, action_likelihood(prior, u, am), transition);
}

Region classify_region(const Belief& prior, const AgentModel& am) {
    int first = -1;
    for (int y = 0; y < am.n_obs(); ++y) {
        std::vector<double> w = posterior_weights(prior, y, am.obs);
        int a = argmin_action(w, am.cost, TieBreak::LowestIndex, nullptr);
        if (y == 0)
            first = a;
        else if (a != first)
            return Learning{};
    }
    return HerdTo{first};
}

bool is_herding(const Region& r) { return std::holds_alternative<HerdTo>(r); }

std::optional<int> herd_action(const Region& r) {
    if (const auto* h = std::get_if<HerdTo>(&r)) return h->action;
    return std::nullopt;
}

std::pair<double, double> herding_thresholds(const AgentModel& am) {
    if (am.n_states() != 2) throw DimensionMismatch("herding_thresholds needs X = 2");
    double lo = 1.0, hi = 0.0;
    for (int y = 0; y < am.n_obs(); ++y) {
        double g = am.obs.p(0, y) / (am.obs.p(0, y) + am.obs.p(1, y));
        lo = std::min(lo, g);
        hi = std::max(hi, g);
    }
    return {lo, hi};
}

EpisodeTrace run_protocol(const AgentModel& am, int true_state, const Belief& pi0, int horizon,
                          int m_shared, std::uint64_t seed) {
    if (horizon < 1) throw DimensionMismatch("horizon must be >= 1");
    if (m_shared < 0 || (m_shared > 0 && std::pow(am.n_obs(), m_shared + 1) > 1e6))
        throw DimensionMismatch("unsupported shared-observation window");
    if (m_shared > 0) am.require_action_obs_consistency();
    Rng rng(seed);
    EpisodeTrace trace;
    trace.seed = seed;
    Belief pub = pi0;            // incorporates actions up to step k - m_shared - 1
    std::vector<Belief> pub_at;  // public prior each past agent faced
    std::vector<int> obs_hist, act_hist;
    std::vector<double> row(am.n_obs());

    for (int k = 1; k <= horizon; ++k) {
        if (m_shared > 0) {
            // release the action whose embargo just expired
            int due = k - m_shared - 1;
            if (due >= 1) {
                const Belief& ctx = pub_at[static_cast<size_t>(due - 1)];
                int w = std::min(due, m_shared + 1);
                pub = apply_filter(
                    pub, windowed_action_likelihood(ctx, act_hist[static_cast<size_t>(due - 1)], am, w),
                    nullptr);
            }
            pub_at.push_back(pub);
        }

        for (int y = 0; y < am.n_obs(); ++y) row[static_cast<size_t>(y)] = am.obs.p(true_state, y);
        int y = rng.categorical(row);
        obs_hist.push_back(y);

        Belief post = m_shared == 0
                          ? bayes_update(pub, y, am.obs)
                          : bayes_update_window(
                                pub,
                                std::vector<int>(obs_hist.end() - std::min<int>(k, m_shared + 1),
                                                 obs_hist.end()),
                                am.obs);
        int u = select_action(post, am.cost, am.tie_break, &rng);
        act_hist.push_back(u);

        StepRecord rec;
        rec.step = k;
        rec.state = true_state;
        rec.obs = y;
        rec.action = u;
        rec.prior_before = pub.probs();
        rec.step_cost = am.cost.cost(true_state, u);
        if (m_shared == 0) pub = public_prior_update(pub, u, am);
        rec.prior_after = pub.probs();
        trace.steps.push_back(std::move(rec));
    }
    trace.cascade_time = detect_cascade(trace.prior_path());
    trace.herd_time = detect_herding(trace.actions());
    return trace;
}

namespace {
template <typename Seq, typename Eq>
std::optional<int> detect_stable(const Seq& xs, Eq eq) {
    const int n = static_cast<int>(xs.size());
    if (n == 0) return std::nullopt;
    int k = n - 1;
    while (k > 0 && eq(xs[static_cast<size_t>(k - 1)], xs[static_cast<size_t>(n - 1)])) --k;
    // xs[k..n-1] identical, xs[k-1] differs (or k == 0)
    int run = n - k;
    if (run < 10) return std::nullopt;  // censored: stabilization shorter than 10 entries
    return k + 1;                       // 1-based
}
}  // namespace

std::optional<int> detect_cascade(const std::vector<std::vector<double>>& priors) {
    auto eq = [](const std::vector<double>& a, const std::vector<double>& b) {
        for (size_t i = 0; i < a.size(); ++i)
            if (std::fabs(a[i] - b[i]) > 1e-10) return false;
        return true;
    };
    return detect_stable(priors, eq);
}

std::optional<int> detect_herding(const std::vector<int>& actions) {
    return detect_stable(actions, [](int a, int b) { return a == b; });
}

void write_trace_csv(const std::string& path, const EpisodeTrace& t, int n_states) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace csv: " + path);
    out << "step,state,obs,action,mode,incentive";
    for (int i = 0; i < n_states; ++i) out << ",prior_" << i;
    out << "\n";
    for (const auto& s : t.steps) {
        out << s.step << "," << s.state << "," << s.obs << "," << s.action << "," << s.mode << ","
            << format_double(s.incentive);
        for (int i = 0; i < n_states; ++i) out << "," << format_double(s.prior_before[static_cast<size_t>(i)]);
        out << "\n";
    }
}

void write_summary_csv(const std::string& path, const std::vector<RunSummary>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary csv: " + path);
    out << "seed,cascade_time,herd_time,final_action,correct\n";
    for (const auto& r : rows) {
        out << r.seed << "," << (r.cascade_time ? *r.cascade_time : -1) << ","
            << (r.herd_time ? *r.herd_time : -1) << "," << r.final_action << ","
            << (r.correct ? 1 : 0) << "\n";
    }
}

}  // namespace herdsim::social
