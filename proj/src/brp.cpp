#include "herdsim/brp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "herdsim/rng.hpp"
#include "herdsim/social.hpp"

namespace herdsim::brp {

namespace {
constexpr double kUsedActionTol = 0.0;  // p_m(u) > 0 exactly: empirical counts are exact zeros
}

BrpDataset::BrpDataset(Belief pr, std::vector<Matrix> cond)
    : prior(std::move(pr)), action_given_state(std::move(cond)) {
    if (action_given_state.empty()) throw TooFewEnvironments("dataset needs M >= 1");
    for (const auto& c : action_given_state) {
        if (c.rows != prior.size()) throw DimensionMismatch("p_m(u|x) state dimension");
        if (c.cols != action_given_state.front().cols)
            throw DimensionMismatch("p_m(u|x) action dimension");
        for (int x = 0; x < c.rows; ++x) {
            double s = 0.0;
            for (int u = 0; u < c.cols; ++u) {
                if (!(c.at(x, u) >= 0.0)) throw DimensionMismatch("negative action frequency");
                s += c.at(x, u);
            }
            if (std::fabs(s - 1.0) > 1e-9)
                throw DimensionMismatch("p_m(u|x) row does not sum to 1");
        }
    }
}

Matrix BrpDataset::joint(int m) const {
    const Matrix& c = action_given_state[static_cast<size_t>(m)];
    Matrix j(c.rows, c.cols);
    for (int x = 0; x < c.rows; ++x)
        for (int u = 0; u < c.cols; ++u) j.at(x, u) = prior[x] * c.at(x, u);
    return j;
}

Matrix BrpDataset::posterior(int m) const {
    Matrix j = joint(m);
    Matrix post(j.rows, j.cols);
    for (int u = 0; u < j.cols; ++u) {
        double pu = 0.0;
        for (int x = 0; x < j.rows; ++x) pu += j.at(x, u);
        if (pu > 0)
            for (int x = 0; x < j.rows; ++x) post.at(x, u) = j.at(x, u) / pu;
    }
    return post;
}

std::vector<double> BrpDataset::action_marginal(int m) const {
    Matrix j = joint(m);
    std::vector<double> pu(static_cast<size_t>(j.cols), 0.0);
    for (int x = 0; x < j.rows; ++x)
        for (int u = 0; u < j.cols; ++u) pu[static_cast<size_t>(u)] += j.at(x, u);
    return pu;
}

BrpDataset empirical_dataset(const std::vector<Sample>& samples, const Belief& prior, int n_envs,
                             int n_states, int n_actions) {
    std::vector<Matrix> counts(static_cast<size_t>(n_envs), Matrix(n_states, n_actions));
    for (const auto& s : samples) {
        if (s.environment < 0 || s.environment >= n_envs || s.state < 0 || s.state >= n_states ||
            s.action < 0 || s.action >= n_actions)
            throw DimensionMismatch("sample outside declared dimensions");
        counts[static_cast<size_t>(s.environment)].at(s.state, s.action) += 1.0;
    }
    std::string missing;
    for (int m = 0; m < n_envs; ++m)
        for (int x = 0; x < n_states; ++x) {
            double tot = 0.0;
            for (int u = 0; u < n_actions; ++u) tot += counts[static_cast<size_t>(m)].at(x, u);
            if (tot == 0.0) missing += " (" + std::to_string(m) + "," + std::to_string(x) + ")";
        }
    if (!missing.empty()) throw EmptyCell("no samples for (environment,state):" + missing);
    for (int m = 0; m < n_envs; ++m)
        for (int x = 0; x < n_states; ++x) {
            double tot = 0.0;
            for (int u = 0; u < n_actions; ++u) tot += counts[static_cast<size_t>(m)].at(x, u);
            for (int u = 0; u < n_actions; ++u) counts[static_cast<size_t>(m)].at(x, u) /= tot;
        }
    return BrpDataset(prior, std::move(counts));
}

std::vector<LinRow> nias_constraints(const BrpDataset& d, int margin_var, double margin_const) {
    const int M = d.n_envs(), X = d.n_states(), U = d.n_actions();
    std::vector<LinRow> rows;
    for (int m = 0; m < M; ++m) {
        Matrix post = d.posterior(m);
        std::vector<double> pu = d.action_marginal(m);
        for (int u = 0; u < U; ++u) {
            if (pu[static_cast<size_t>(u)] <= kUsedActionTol) continue;
            for (int ubar = 0; ubar < U; ++ubar) {
                if (ubar == u) continue;
                LinRow row;
                for (int x = 0; x < X; ++x) {
                    double q = post.at(x, u);
                    if (q == 0.0) continue;
                    row.coef.emplace_back(m * X * U + x * U + ubar, q);
                    row.coef.emplace_back(m * X * U + x * U + u, -q);
                }
                if (margin_var >= 0) row.coef.emplace_back(margin_var, 1.0);
                row.ub = -margin_const;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

ConstraintSystem niac_constraints(const BrpDataset& d, int margin_var, double margin_const) {
    const int M = d.n_envs(), X = d.n_states(), U = d.n_actions();
    if (M < 2) throw TooFewEnvironments("NIAC needs M >= 2");
    ConstraintSystem cs;
    cs.n_r = M * X * U;
    cs.n_z = M;
    int aux_base = cs.n_r + cs.n_z;
    int aux = 0;
    for (int l = 0; l < M; ++l) {
        for (int m = 0; m < M; ++m) {
            if (l == m) continue;
            Matrix jl = d.joint(l), jm = d.joint(m);
            LinRow pair;
            for (int u = 0; u < U; ++u) {
                int w = aux_base + aux++;
                for (int ubar = 0; ubar < U; ++ubar) {
                    LinRow epi;
                    epi.coef.emplace_back(w, -1.0);
                    for (int x = 0; x < X; ++x)
                        if (jl.at(x, u) != 0.0)
                            epi.coef.emplace_back(m * X * U + x * U + ubar, jl.at(x, u));
                    epi.ub = 0.0;
                    cs.niac_epigraph.push_back(std::move(epi));
                }
                pair.coef.emplace_back(w, 1.0);
                for (int x = 0; x < X; ++x)
                    if (jm.at(x, u) != 0.0)
                        pair.coef.emplace_back(m * X * U + x * U + u, -jm.at(x, u));
            }
            pair.coef.emplace_back(cs.n_r + l, -1.0);
            pair.coef.emplace_back(cs.n_r + m, 1.0);
            if (margin_var >= 0) pair.coef.emplace_back(margin_var, 1.0);
            pair.ub = -margin_const;
            cs.niac_pairs.push_back(std::move(pair));
        }
    }
    cs.n_aux = aux;
    return cs;
}

namespace {

struct Assembled {
    lp::LinearProgram prog;
    int n_r, n_z, n_aux;
    int eps1 = -1, eps2 = -1;
};

// mode: 0 feasibility (margins bounded below by eps_min), 1 max-margin,
// 2 sparse (fixed margins, L1 objective).
Assembled assemble(const BrpDataset& d, int mode, double eps_min, double fix1, double fix2) {
    const int M = d.n_envs(), X = d.n_states(), U = d.n_actions();
    Assembled a;
    a.n_r = M * X * U;
    a.n_z = M;
    int n_aux = M * (M - 1) * U;
    a.n_aux = n_aux;
    int n = a.n_r + a.n_z + n_aux + (mode == 2 ? 0 : 2);
    a.prog = lp::LinearProgram::with_vars(n);
    for (int i = 0; i < a.n_r + a.n_z + n_aux; ++i) {
        a.prog.lower[static_cast<size_t>(i)] = 0.0;
        a.prog.upper[static_cast<size_t>(i)] = 1.0;
    }
    if (mode != 2) {
        a.eps1 = a.n_r + a.n_z + n_aux;
        a.eps2 = a.eps1 + 1;
        a.prog.lower[static_cast<size_t>(a.eps1)] = mode == 0 ? eps_min : 0.0;
        a.prog.upper[static_cast<size_t>(a.eps1)] = 1.0;
        a.prog.lower[static_cast<size_t>(a.eps2)] = mode == 0 ? eps_min : 0.0;
        a.prog.upper[static_cast<size_t>(a.eps2)] = 2.0;
        a.prog.objective[static_cast<size_t>(a.eps1)] = -1.0;  // maximize eps1 + eps2
        a.prog.objective[static_cast<size_t>(a.eps2)] = -1.0;
    } else {
        for (int i = 0; i < a.n_r; ++i) a.prog.objective[static_cast<size_t>(i)] = 1.0;
    }

    auto add = [&](const LinRow& row) {
        std::vector<double> coef(static_cast<size_t>(n), 0.0);
        for (auto& [j, v] : row.coef) coef[static_cast<size_t>(j)] += v;
        a.prog.add_row(coef, row.ub);
    };
    for (const auto& row : nias_constraints(d, mode == 2 ? -1 : a.eps1, mode == 2 ? fix1 : 0.0))
        add(row);
    ConstraintSystem cs = niac_constraints(d, mode == 2 ? -1 : a.eps2, mode == 2 ? fix2 : 0.0);
    for (const auto& row : cs.niac_epigraph) add(row);
    for (const auto& row : cs.niac_pairs) add(row);
    return a;
}

ReconstructionResult extract(const BrpDataset& d, const Assembled& a,
                             const std::vector<double>& x) {
    const int M = d.n_envs(), X = d.n_states(), U = d.n_actions();
    ReconstructionResult res;
    res.utilities.reserve(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m) {
        Matrix r(X, U);
        for (int xx = 0; xx < X; ++xx)
            for (int u = 0; u < U; ++u) r.at(xx, u) = x[static_cast<size_t>(m * X * U + xx * U + u)];
        res.utilities.push_back(std::move(r));
    }
    for (int m = 0; m < M; ++m) res.info_costs.push_back(x[static_cast<size_t>(a.n_r + m)]);
    if (a.eps1 >= 0) res.margins = {x[static_cast<size_t>(a.eps1)], x[static_cast<size_t>(a.eps2)]};
    res.reconstructed_acquisition_cost = reconstruct_info_cost(d, res.utilities, res.info_costs);
    return res;
}

}  // namespace

FeasibilityVerdict feasibility_check(const BrpDataset& d, double epsilon_min) {
    if (d.n_envs() < 2) throw TooFewEnvironments("feasibility_check needs M >= 2");
    Assembled a = assemble(d, 0, epsilon_min, 0, 0);
    lp::LpSolution sol = lp::solve(a.prog);
    FeasibilityVerdict v;
    if (sol.status == lp::LpStatus::Optimal) {
        v.verdict = Feasibility::Ribum;
        v.witness = extract(d, a, sol.point);
    } else if (sol.status == lp::LpStatus::Infeasible) {
        v.verdict = Feasibility::NotRibum;
    } else {
        throw std::runtime_error("feasibility LP did not terminate optimally");
    }
    return v;
}

ReconstructionResult max_margin_reconstruct(const BrpDataset& d) {
    if (d.n_envs() < 2) throw TooFewEnvironments("max_margin_reconstruct needs M >= 2");
    Assembled a = assemble(d, 1, 0, 0, 0);
    lp::LpSolution sol = lp::solve(a.prog);
    if (sol.status != lp::LpStatus::Optimal)
        throw std::runtime_error("max-margin LP did not terminate optimally");
    if (-sol.objective_value < 1e-9)
        throw ReconstructionInfeasible("max achievable margin below 1e-9");
    double e1 = sol.point[static_cast<size_t>(a.eps1)];
    double e2 = sol.point[static_cast<size_t>(a.eps2)];
    // The max-margin face is usually degenerate; report its minimum-mass
    // vertex so the returned utilities carry structure, not pivoting noise.
    Assembled b = assemble(d, 2, 0, std::max(0.0, e1 - 1e-9), std::max(0.0, e2 - 1e-9));
    lp::LpSolution refined = lp::solve(b.prog);
    ReconstructionResult res = refined.status == lp::LpStatus::Optimal
                                   ? extract(d, b, refined.point)
                                   : extract(d, a, sol.point);
    res.margins = {e1, e2};
    return res;
}

ReconstructionResult sparse_reconstruct(const BrpDataset& d, double eps1, double eps2) {
    if (d.n_envs() < 2) throw TooFewEnvironments("sparse_reconstruct needs M >= 2");
    if (!(eps1 > 0.0) || !(eps2 > 0.0))
        throw DimensionMismatch("sparse_reconstruct needs strictly positive margins");
    Assembled a = assemble(d, 2, 0, eps1, eps2);
    lp::LpSolution sol = lp::solve(a.prog);
    if (sol.status == lp::LpStatus::Infeasible)
        throw ReconstructionInfeasible("required margins unattainable");
    if (sol.status != lp::LpStatus::Optimal)
        throw std::runtime_error("sparse LP did not terminate optimally");
    ReconstructionResult res = extract(d, a, sol.point);
    res.margins = {eps1, eps2};
    return res;
}

double reconstruct_info_cost(const BrpDataset& d, const std::vector<Matrix>& utilities,
                             const std::vector<double>& z) {
    const int M = d.n_envs(), X = d.n_states(), U = d.n_actions();
    double best = -lp::kInf;
    for (int m = 0; m < M; ++m) {
        Matrix j = d.joint(m);
        const Matrix& r = utilities[static_cast<size_t>(m)];
        double gross = 0.0, chosen = 0.0;
        for (int u = 0; u < U; ++u) {
            double mx = -lp::kInf;
            for (int ubar = 0; ubar < U; ++ubar) {
                double v = 0.0;
                for (int x = 0; x < X; ++x) v += j.at(x, u) * r.at(x, ubar);
                mx = std::max(mx, v);
            }
            gross += mx;
            for (int x = 0; x < X; ++x) chosen += j.at(x, u) * r.at(x, u);
        }
        best = std::max(best, z[static_cast<size_t>(m)] + gross - chosen);
    }
    return best;
}

double gross_expected_utility(const Matrix& utility, const ObservationModel& m,
                              const Belief& prior) {
    if (utility.rows != m.n_states() || prior.size() != m.n_states())
        throw DimensionMismatch("gross_expected_utility dimensions");
    double total = 0.0;
    for (int y = 0; y < m.n_obs(); ++y) {
        double mx = -lp::kInf;
        for (int u = 0; u < utility.cols; ++u) {
            double v = 0.0;
            for (int x = 0; x < m.n_states(); ++x) v += utility.at(x, u) * m.p(x, y) * prior[x];
            mx = std::max(mx, v);
        }
        total += mx;
    }
    return total;
}

BrpDataset generate_ribum_dataset(const std::vector<Matrix>& utility_per_env,
                                  const std::vector<ObservationModel>& obs_per_env,
                                  const Belief& prior, int n_samples, std::uint64_t seed,
                                  std::vector<Sample>* raw_samples) {
    if (utility_per_env.size() < 2 || utility_per_env.size() != obs_per_env.size())
        throw TooFewEnvironments("generator needs M >= 2 environments");
    const int M = static_cast<int>(utility_per_env.size());
    const int X = prior.size();
    const int U = utility_per_env.front().cols;
    std::vector<Sample> samples;
    samples.reserve(static_cast<size_t>(M) * n_samples);
    for (int m = 0; m < M; ++m) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
        const ObservationModel& B = obs_per_env[static_cast<size_t>(m)];
        const Matrix& r = utility_per_env[static_cast<size_t>(m)];
        std::vector<double> row(static_cast<size_t>(B.n_obs()));
        for (int i = 0; i < n_samples; ++i) {
            int x0 = rng.categorical(prior.probs());
            for (int y = 0; y < B.n_obs(); ++y) row[static_cast<size_t>(y)] = B.p(x0, y);
            int y = rng.categorical(row);
            Belief post = social::bayes_update(prior, y, B);
            int best = 0;
            double best_v = -lp::kInf;
            for (int u = 0; u < U; ++u) {
                double v = 0.0;
                for (int x = 0; x < X; ++x) v += r.at(x, u) * post[x];
                if (v > best_v) {
                    best_v = v;
                    best = u;
                }
            }
            samples.push_back({m, x0, best});
        }
    }
    if (raw_samples) *raw_samples = samples;
    return empirical_dataset(samples, prior, M, X, U);
}

Margins evaluate_margins(const BrpDataset& d, const std::vector<Matrix>& utilities,
                         const std::vector<double>& z) {
    const int M = d.n_envs(), X = d.n_states(), U = d.n_actions();
    double worst1 = lp::kInf;
    for (int m = 0; m < M; ++m) {
        Matrix post = d.posterior(m);
        std::vector<double> pu = d.action_marginal(m);
        const Matrix& r = utilities[static_cast<size_t>(m)];
        for (int u = 0; u < U; ++u) {
            if (pu[static_cast<size_t>(u)] <= kUsedActionTol) continue;
            for (int ubar = 0; ubar < U; ++ubar) {
                if (ubar == u) continue;
                double v = 0.0;
                for (int x = 0; x < X; ++x) v += post.at(x, u) * (r.at(x, ubar) - r.at(x, u));
                worst1 = std::min(worst1, -v);
            }
        }
    }
    double worst2 = lp::kInf;
    for (int l = 0; l < M; ++l)
        for (int m = 0; m < M; ++m) {
            if (l == m) continue;
            Matrix jl = d.joint(l), jm = d.joint(m);
            const Matrix& r = utilities[static_cast<size_t>(m)];
            double gross = 0.0, chosen = 0.0;
            for (int u = 0; u < U; ++u) {
                double mx = -lp::kInf;
                for (int ubar = 0; ubar < U; ++ubar) {
                    double v = 0.0;
                    for (int x = 0; x < X; ++x) v += jl.at(x, u) * r.at(x, ubar);
                    mx = std::max(mx, v);
                }
                gross += mx;
                for (int x = 0; x < X; ++x) chosen += jm.at(x, u) * r.at(x, u);
            }
            double row = gross - z[static_cast<size_t>(l)] - chosen + z[static_cast<size_t>(m)];
            worst2 = std::min(worst2, -row);
        }
    return {worst1, worst2};
}

std::vector<Sample> load_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open samples csv: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "environment,state,action")
        throw std::runtime_error("bad samples csv header: " + line);
    std::vector<Sample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Sample s{};
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        s.environment = std::stoi(cell);
        std::getline(ss, cell, ',');
        s.state = std::stoi(cell);
        std::getline(ss, cell, ',');
        s.action = std::stoi(cell);
        out.push_back(s);
    }
    return out;
}

void write_utilities_csv(const std::string& path, const std::vector<Matrix>& utilities) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write utilities csv: " + path);
    out << "environment,state,action,utility\n";
    for (size_t m = 0; m < utilities.size(); ++m)
        for (int x = 0; x < utilities[m].rows; ++x)
            for (int u = 0; u < utilities[m].cols; ++u)
                out << m << "," << x << "," << u << "," << format_double(utilities[m].at(x, u))
                    << "\n";
}

void write_report_csv(const std::string& path, const Margins& m, double k_hat) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report csv: " + path);
    out << "eps1,eps2,K_hat\n";
    out << format_double(m.eps1) << "," << format_double(m.eps2) << "," << format_double(k_hat)
        << "\n";
}

}  // namespace herdsim::brp
