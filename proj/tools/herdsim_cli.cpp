// Experiment runner: seeded batch simulations and CSV emission for the
// social-learning, revealed-preference, and stopping-control modules.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "herdsim/brp.hpp"
#include "herdsim/control.hpp"
#include "herdsim/core.hpp"
#include "herdsim/social.hpp"
#include "herdsim/topology.hpp"

namespace fs = std::filesystem;
using namespace herdsim;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat dotted-key config: one `key=value` per line, `#` comments.
class Config {
public:
    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config: " + path);
        Config c;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
                line.pop_back();
            size_t start = line.find_first_not_of(" \t");
            if (start == std::string::npos) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + " has no '='");
            std::string key = line.substr(start, eq - start);
            while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
            std::string value = line.substr(eq + 1);
            size_t vs = value.find_first_not_of(" \t");
            value = vs == std::string::npos ? "" : value.substr(vs);
            if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            c.values_[key] = value;
        }
        return c;
    }

    void override_value(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key: " + key);
        used_.insert(key);
        return it->second;
    }
    std::string get_string(const std::string& key, const std::string& dflt) const {
        if (!has(key)) return dflt;
        return get_string(key);
    }
    double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
    double get_double(const std::string& key, double dflt) const {
        return has(key) ? get_double(key) : dflt;
    }
    int get_int(const std::string& key) const {
        double v = get_double(key);
        int i = static_cast<int>(v);
        if (v != i) throw ConfigError("config key " + key + " must be an integer");
        return i;
    }
    int get_int(const std::string& key, int dflt) const { return has(key) ? get_int(key) : dflt; }
    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
        if (!has(key)) return dflt;
        try {
            return std::stoull(get_string(key));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " must be an unsigned integer");
        }
    }
    std::vector<double> get_double_list(const std::string& key) const {
        std::string s = get_string(key);
        std::vector<double> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(parse_double(key, cell));
        if (out.empty()) throw ConfigError("config key " + key + " is an empty list");
        return out;
    }

    // every present key must have been consumed by the subcommand
    void reject_unknown() const {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) throw ConfigError("unknown config key: " + k);
    }

private:
    static double parse_double(const std::string& key, const std::string& s) {
        try {
            size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("extra characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + " has a bad numeric value: '" + s + "'");
        }
    }
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

ObservationModel model_from_config(const Config& cfg, int* n_states_out = nullptr) {
    if (cfg.has("model.likelihood_csv")) {
        Matrix m = load_matrix_csv(cfg.get_string("model.likelihood_csv"));
        if (n_states_out) *n_states_out = m.rows;
        return ObservationModel(std::move(m));
    }
    double d = cfg.get_double("model.b_diag");
    int X = cfg.get_int("model.states", 2);
    if (!(d > 0.0 && d < 1.0) || X < 2) throw ConfigError("model.b_diag in (0,1) and model.states >= 2");
    Matrix m(X, X, (1.0 - d) / (X - 1));
    for (int i = 0; i < X; ++i) m.at(i, i) = d;
    if (n_states_out) *n_states_out = X;
    return ObservationModel(std::move(m));
}

CostSpec cost_from_config(const Config& cfg, int X) {
    if (cfg.has("model.cost_csv")) return CostSpec(load_matrix_csv(cfg.get_string("model.cost_csv")));
    return CostSpec::zero_one(X);
}

Belief prior_from_config(const Config& cfg, const std::string& key, int X) {
    if (cfg.has(key)) {
        std::vector<double> v = cfg.get_double_list(key);
        if (static_cast<int>(v.size()) != X) throw ConfigError(key + " has wrong length");
        return validate_belief(v);
    }
    return validate_belief(std::vector<double>(static_cast<size_t>(X), 1.0 / X));
}

fs::path out_dir(const Config& cfg) {
    fs::path dir = cfg.get_string("out", "out");
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_csv(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

int cmd_herding_sim(const Config& cfg) {
    int X = 0;
    ObservationModel obs = model_from_config(cfg, &X);
    social::AgentModel am(obs, cost_from_config(cfg, X));
    int horizon = cfg.get_int("sim.horizon", 80);
    int m_shared = cfg.get_int("sim.m_shared", 0);
    int n_runs = cfg.get_int("runs", 100);
    std::uint64_t seed = cfg.get_u64("seed", 1);
    std::vector<double> prior_grid = cfg.has("sim.prior_grid")
                                         ? cfg.get_double_list("sim.prior_grid")
                                         : std::vector<double>{0.34};
    std::vector<double> state_list;
    if (cfg.has("sim.true_state")) {
        state_list.push_back(cfg.get_int("sim.true_state"));
    } else {
        for (int x = 0; x < X; ++x) state_list.push_back(x);
    }
    if (horizon < 1 || n_runs < 1) throw ConfigError("sim.horizon and runs must be >= 1");
    for (double p0 : prior_grid)
        if (!(p0 >= 0.0 && p0 <= 1.0)) throw ConfigError("sim.prior_grid entries must lie in [0,1]");
    if (X != 2 && !prior_grid.empty() && cfg.has("sim.prior_grid"))
        throw ConfigError("sim.prior_grid is the 2-state scalar grid; use X = 2");
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    std::vector<social::RunSummary> rows;
    auto mean_paths = open_csv(dir / "mean_paths.csv");
    mean_paths << "prior0,true_state,step,mean_prior0\n";
    std::uint64_t stream = 0;
    for (double p0 : prior_grid) {
        Belief pi0 = validate_belief({p0, 1.0 - p0});
        for (int x : state_list) {
            std::vector<double> acc(static_cast<size_t>(horizon) + 1, 0.0);
            for (int r = 0; r < n_runs; ++r) {
                std::uint64_t s = derive_seed(seed, stream++);
                social::EpisodeTrace tr = social::run_protocol(am, x, pi0, horizon, m_shared, s);
                auto path = tr.prior_path();
                for (size_t k = 0; k < path.size(); ++k) acc[k] += path[k][0];
                social::RunSummary rs;
                rs.seed = s;
                rs.cascade_time = tr.cascade_time;
                rs.herd_time = tr.herd_time;
                rs.final_action = tr.steps.back().action;
                rs.correct = rs.final_action == x;
                rows.push_back(rs);
            }
            for (size_t k = 0; k < acc.size(); ++k)
                mean_paths << format_double(p0) << "," << x << "," << k << ","
                           << format_double(acc[k] / n_runs) << "\n";
        }
    }
    social::write_summary_csv((dir / "summary.csv").string(), rows);
    return 0;
}

int cmd_regions(const Config& cfg) {
    int X = 0;
    ObservationModel obs = model_from_config(cfg, &X);
    social::AgentModel am(obs, cost_from_config(cfg, X));
    int grid_n = cfg.get_int("grid.n", 101);
    if (grid_n < 2) throw ConfigError("grid.n must be >= 2");
    if (X > 3) throw ConfigError("regions supports X = 2 or 3");
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    auto out = open_csv(dir / "regions.csv");
    for (int i = 0; i < X; ++i) out << (i ? "," : "") << "pi_" << i;
    out << ",label\n";
    auto emit = [&](const std::vector<double>& p) {
        Belief b = validate_belief(p);
        social::Region r = social::classify_region(b, am);
        for (size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << format_double(p[i]);
        if (auto a = social::herd_action(r))
            out << ",herd_" << *a << "\n";
        else
            out << ",learning\n";
    };
    if (X == 2) {
        for (int i = 0; i < grid_n; ++i) {
            double p = static_cast<double>(i) / (grid_n - 1);
            emit({p, 1.0 - p});
        }
    } else {
        for (int i = 0; i < grid_n; ++i)
            for (int j = 0; j < grid_n - i; ++j) {
                double a = static_cast<double>(i) / (grid_n - 1);
                double b = static_cast<double>(j) / (grid_n - 1);
                emit({a, b, 1.0 - a - b});
            }
    }
    return 0;
}

int cmd_brp(const Config& cfg) {
    std::string mode = cfg.get_string("brp.mode", "max-margin");
    if (mode != "feasibility" && mode != "max-margin" && mode != "sparse")
        throw ConfigError("brp.mode must be feasibility|max-margin|sparse");
    std::vector<brp::Sample> samples = brp::load_samples_csv(cfg.get_string("brp.samples_csv"));
    Matrix prior_m = load_matrix_csv(cfg.get_string("brp.prior_csv"));
    if (prior_m.rows != 1) throw ConfigError("brp.prior_csv must be a single-row matrix");
    Belief prior = validate_belief(prior_m.a);
    int n_envs = 0, n_states = prior.size(), n_actions = 0;
    for (const auto& s : samples) {
        n_envs = std::max(n_envs, s.environment + 1);
        n_actions = std::max(n_actions, s.action + 1);
    }
    n_envs = cfg.get_int("brp.envs", n_envs);
    n_actions = cfg.get_int("brp.actions", n_actions);
    double eps_min = cfg.get_double("brp.eps_min", 1e-4);
    double eps1 = cfg.get_double("brp.eps1", 1e-3);
    double eps2 = cfg.get_double("brp.eps2", 1e-3);
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    brp::BrpDataset d = brp::empirical_dataset(samples, prior, n_envs, n_states, n_actions);
    try {
        if (mode == "feasibility") {
            brp::FeasibilityVerdict v = brp::feasibility_check(d, eps_min);
            if (v.verdict == brp::Feasibility::NotRibum) {
                std::cout << "verdict: not-ribum\n";
                return 3;
            }
            std::cout << "verdict: ribum\n";
            brp::write_utilities_csv((dir / "utilities.csv").string(), v.witness->utilities);
            brp::write_report_csv((dir / "report.csv").string(), v.witness->margins,
                                  v.witness->reconstructed_acquisition_cost);
        } else {
            brp::ReconstructionResult res = mode == "max-margin"
                                                ? brp::max_margin_reconstruct(d)
                                                : brp::sparse_reconstruct(d, eps1, eps2);
            brp::write_utilities_csv((dir / "utilities.csv").string(), res.utilities);
            brp::write_report_csv((dir / "report.csv").string(), res.margins,
                                  res.reconstructed_acquisition_cost);
        }
    } catch (const brp::ReconstructionInfeasible& e) {
        std::cout << "verdict: infeasible (" << e.what() << ")\n";
        return 3;
    }
    return 0;
}

control::StoppingProblem stopping_from_config(const Config& cfg) {
    int X = 0;
    ObservationModel obs = model_from_config(cfg, &X);
    social::AgentModel am(obs, cost_from_config(cfg, X));
    control::StoppingProblem sp{std::move(am),
                                cfg.get_double("stopping.rho", 0.99),
                                cfg.get_double("stopping.delay_d", 10.0),
                                cfg.get_double("stopping.error_upsilon", 50.0),
                                cfg.get_int("stopping.target_state", 0),
                                cfg.get_int("stopping.horizon", 100)};
    sp.validate();
    return sp;
}

int cmd_stopping_sweep(const Config& cfg) {
    control::StoppingProblem sp = stopping_from_config(cfg);
    int grid_n = cfg.get_int("sweep.grid_n", 100);
    int n_runs = cfg.get_int("runs", 100);
    std::uint64_t seed = cfg.get_u64("seed", 1);
    Belief pi0 = prior_from_config(cfg, "sweep.pi0", sp.agent.n_states());
    if (grid_n < 2 || n_runs < 1) throw ConfigError("sweep.grid_n >= 2 and runs >= 1 required");
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    auto out = open_csv(dir / "sweep.csv");
    out << "theta,mean_cost,mean_stop_time,accuracy\n";
    for (int i = 0; i < grid_n; ++i) {
        double theta = static_cast<double>(i) / (grid_n - 1);
        control::ThresholdPolicy pol{theta, control::PolicyMode::CentralStop, std::nullopt};
        control::StoppingEval ev = control::eval_socialistic_cost(sp, pol, pi0, n_runs, seed);
        out << format_double(theta) << "," << format_double(ev.mean_cost) << ","
            << format_double(ev.mean_stop_time) << "," << format_double(ev.accuracy) << "\n";
    }
    return 0;
}

control::IncentiveProblem incentive_from_config(const Config& cfg) {
    int X = 0;
    ObservationModel obs = model_from_config(cfg, &X);
    social::AgentModel am(obs, cost_from_config(cfg, X));
    IncentiveCostParams params;
    params.alpha = {cfg.get_double("incentive.alpha0", 0.8), cfg.get_double("incentive.alpha1", 1.3)};
    params.delta = {cfg.get_double("incentive.delta0", 0.1), cfg.get_double("incentive.delta1", 0.5)};
    params.omega = {cfg.get_double("incentive.omega0", 0.2), cfg.get_double("incentive.omega1", 0.5)};
    control::IncentiveProblem ip{std::move(am),
                                 std::move(params),
                                 cfg.get_double("incentive.g0", 20.0),
                                 cfg.get_double("incentive.rho", 0.99),
                                 cfg.get_int("incentive.horizon", 100),
                                 std::nullopt};
    ip.validate();
    return ip;
}

int cmd_incentive_sweep(const Config& cfg) {
    control::IncentiveProblem ip = incentive_from_config(cfg);
    int grid_n = cfg.get_int("sweep.grid_n", 100);
    int n_runs = cfg.get_int("runs", 100);
    std::uint64_t seed = cfg.get_u64("seed", 1);
    Belief pi0 = prior_from_config(cfg, "sweep.pi0", ip.agent.n_states());
    if (grid_n < 2 || n_runs < 1) throw ConfigError("sweep.grid_n >= 2 and runs >= 1 required");
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    auto out = open_csv(dir / "incentive_sweep.csv");
    out << "theta,total_incentive,classification_rate\n";
    for (int i = 0; i < grid_n; ++i) {
        double theta = static_cast<double>(i) / (grid_n - 1);
        control::ThresholdPolicy pol{theta, control::PolicyMode::Incentive, std::nullopt};
        control::FusionEval ev = control::eval_fusion_cost(ip, pol, pi0, n_runs, seed);
        out << format_double(theta) << "," << format_double(ev.mean_total_incentive) << ","
            << format_double(ev.classification_rate) << "\n";
    }
    return 0;
}

int cmd_spsa(const Config& cfg) {
    control::IncentiveProblem ip = incentive_from_config(cfg);
    control::SpsaParams sp;
    sp.initial_theta = cfg.get_double("spsa.initial_theta", 0.5);
    sp.delta = cfg.get_double("spsa.delta", 1.0);
    sp.steps = cfg.get_int("spsa.steps", 100);
    sp.beta_start = cfg.get_double("spsa.beta_start", 0.05);
    sp.beta_end = cfg.get_double("spsa.beta_end", 0.005);
    double eps = cfg.get_double("spsa.eps", 0.3);
    int episode_len = cfg.get_int("spsa.episode_len", 6);
    int runs_per_eval = cfg.get_int("spsa.runs_per_eval", 100);
    std::uint64_t seed = cfg.get_u64("seed", 1);
    Belief pi0 = prior_from_config(cfg, "sweep.pi0", ip.agent.n_states());
    if (sp.steps < 1 || !(sp.delta > 0.0)) throw ConfigError("spsa.steps >= 1 and spsa.delta > 0");
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    auto objective = control::make_fusion_objective(ip, pi0, eps, episode_len, runs_per_eval);
    std::vector<control::SpsaIterate> hist = control::spsa_optimize(objective, sp, seed);
    auto out = open_csv(dir / "spsa.csv");
    out << "iter,theta,cost\n";
    for (const auto& it : hist)
        out << it.iter << "," << format_double(it.theta) << "," << format_double(it.cost) << "\n";
    // expenditure of the final iterate, for comparison against the sweep
    control::ThresholdPolicy fin{hist.back().theta, control::PolicyMode::Incentive, eps};
    control::IncentiveProblem fp = ip;
    fp.horizon = episode_len;
    control::FusionEval ev =
        control::eval_fusion_cost(fp, fin, pi0, runs_per_eval, derive_seed(seed, 0xF1A0));
    auto fin_out = open_csv(dir / "spsa_final.csv");
    fin_out << "theta,cost,total_incentive\n";
    fin_out << format_double(hist.back().theta) << "," << format_double(ev.mean_cost) << ","
            << format_double(ev.mean_total_incentive) << "\n";
    return 0;
}

int cmd_wom(const Config& cfg) {
    int X = 0;
    ObservationModel obs = model_from_config(cfg, &X);
    social::AgentModel base(obs, cost_from_config(cfg, X));
    double rd = cfg.get_double("wom.regen_diag", 0.7);
    int Y = base.n_obs();
    Matrix regen(Y, Y, (1.0 - rd) / (Y - 1));
    for (int i = 0; i < Y; ++i) regen.at(i, i) = rd;
    topology::WomConfig wc{cfg.get_int("wom.levels", 2), ObservationModel(std::move(regen)),
                           std::move(base), cfg.get_int("wom.outer_steps", 100)};
    wc.validate();
    int true_state = cfg.get_int("sim.true_state", 0);
    int n_runs = cfg.get_int("runs", 100);
    std::uint64_t seed = cfg.get_u64("seed", 1);
    Belief pi0 = prior_from_config(cfg, "sim.pi0", X);
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    std::vector<social::RunSummary> rows;
    for (int r = 0; r < n_runs; ++r) {
        std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(r));
        social::EpisodeTrace tr = topology::run_word_of_mouth(wc, true_state, pi0, s);
        social::RunSummary rs;
        rs.seed = s;
        rs.cascade_time = tr.cascade_time;
        rs.herd_time = tr.herd_time;
        rs.final_action = tr.steps.back().action;
        rs.correct = rs.final_action == true_state;
        rows.push_back(rs);
    }
    social::write_summary_csv((dir / "summary.csv").string(), rows);
    return 0;
}

int cmd_async(const Config& cfg) {
    int X = 0;
    ObservationModel obs = model_from_config(cfg, &X);
    social::AgentModel am(obs, cost_from_config(cfg, X));
    int agents = cfg.get_int("async.agents", 2);
    std::vector<topology::ScheduleEvent> schedule =
        topology::load_schedule_csv(cfg.get_string("async.schedule_csv"));
    int true_state = cfg.get_int("sim.true_state", 0);
    int n_runs = cfg.get_int("runs", 1);
    std::uint64_t seed = cfg.get_u64("seed", 1);
    Belief pi0 = prior_from_config(cfg, "sim.pi0", X);
    fs::path dir = out_dir(cfg);
    cfg.reject_unknown();

    auto out = open_csv(dir / "incest.csv");
    out << "run,kl_naive_vs_correct,cascaded\n";
    for (int r = 0; r < n_runs; ++r) {
        topology::AsyncResult res = topology::run_async_fusion(
            agents, am, true_state, pi0, schedule, derive_seed(seed, static_cast<std::uint64_t>(r)));
        bool cascaded = social::is_herding(social::classify_region(validate_belief(res.naive_final), am));
        out << r << "," << format_double(res.incest_kl) << "," << (cascaded ? 1 : 0) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian social-learning simulator and inverse-optimization toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    long runs_override = 0;
    bool runs_set = false;
    app.add_option("--config", config_path, "experiment config file (key=value lines)");
    auto* seed_opt = app.add_option("--seed", seed_override, "master seed (overrides config)");
    auto* runs_opt = app.add_option("--runs", runs_override, "run count (overrides config)");
    app.add_option("--out", out_override, "output directory (overrides config)");

    std::map<std::string, int (*)(const Config&)> commands = {
        {"herding-sim", cmd_herding_sim}, {"regions", cmd_regions},
        {"brp", cmd_brp},                 {"stopping-sweep", cmd_stopping_sweep},
        {"incentive-sweep", cmd_incentive_sweep}, {"spsa", cmd_spsa},
        {"wom", cmd_wom},                 {"async", cmd_async}};
    for (auto& [name, fn] : commands) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    seed_set = seed_opt->count() > 0;
    runs_set = runs_opt->count() > 0;

    try {
        Config cfg = config_path.empty() ? Config() : Config::from_file(config_path);
        if (seed_set) cfg.override_value("seed", std::to_string(seed_override));
        if (runs_set) cfg.override_value("runs", std::to_string(runs_override));
        if (!out_override.empty()) cfg.override_value("out", out_override);
        for (auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(cfg);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
