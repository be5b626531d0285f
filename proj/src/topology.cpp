#include "herdsim/topology.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace herdsim::topology {

void WomConfig::validate() const {
    if (n_levels < 2) throw DimensionMismatch("word-of-mouth needs n_levels >= 2");
    if (outer_steps < 1) throw DimensionMismatch("outer_steps must be >= 1");
    if (regen.n_states() != base.n_obs() || regen.n_obs() != base.n_obs())
        throw DimensionMismatch("regen must be a Y x Y map over the base observation space");
}

namespace {
Matrix compose(const Matrix& a, const Matrix& b) {  // (a @ b)(x, z) = sum_y a(x,y) b(y,z)
    Matrix out(a.rows, b.cols);
    for (int x = 0; x < a.rows; ++x)
        for (int z = 0; z < b.cols; ++z) {
            double s = 0.0;
            for (int y = 0; y < a.cols; ++y) s += a.at(x, y) * b.at(y, z);
            out.at(x, z) = s;
        }
    return out;
}
}  // namespace

social::EpisodeTrace run_word_of_mouth(const WomConfig& cfg, int true_state, const Belief& pi0,
                                       std::uint64_t seed) {
    cfg.validate();
    // level m sees the base observation regenerated m times
    std::vector<social::AgentModel> level_model;
    Matrix composite = cfg.base.obs.matrix();
    for (int m = 0; m < cfg.n_levels; ++m) {
        level_model.emplace_back(ObservationModel(composite), cfg.base.cost, cfg.base.tie_break);
        composite = compose(composite, cfg.regen.matrix());
    }

    Rng rng(seed);
    social::EpisodeTrace trace;
    trace.seed = seed;
    Belief pub = pi0;
    const int Y = cfg.base.n_obs();
    std::vector<double> row(static_cast<size_t>(Y));
    int step = 0;
    for (int outer = 0; outer < cfg.outer_steps; ++outer) {
        Belief outer_start = pub;
        int y = -1;
        for (int m = 0; m < cfg.n_levels; ++m) {
            const social::AgentModel& am = level_model[static_cast<size_t>(m)];
            if (m == 0) {
                for (int v = 0; v < Y; ++v) row[static_cast<size_t>(v)] = cfg.base.obs.p(true_state, v);
            } else {
                for (int v = 0; v < Y; ++v) row[static_cast<size_t>(v)] = cfg.regen.p(y, v);
            }
            y = rng.categorical(row);
            const Belief& ctx = cfg.variant == WomVariant::PerLevel ? pub : outer_start;
            Belief post = social::bayes_update(ctx, y, am.obs);
            int u = social::select_action(post, am.cost, am.tie_break, &rng);

            social::StepRecord rec;
            rec.step = ++step;
            rec.state = true_state;
            rec.obs = y;
            rec.action = u;
            rec.mode = m;  // level within the outer step
            rec.step_cost = am.cost.cost(true_state, u);
            rec.prior_before = pub.probs();
            if (cfg.variant == WomVariant::PerLevel || m == cfg.n_levels - 1)
                pub = social::public_prior_update(ctx, u, am);
            rec.prior_after = pub.probs();
            trace.steps.push_back(std::move(rec));
        }
    }
    trace.cascade_time = social::detect_cascade(trace.prior_path());
    trace.herd_time = social::detect_herding(trace.actions());
    return trace;
}

std::vector<ScheduleEvent> load_schedule_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schedule csv: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "event_index,agent,kind")
        throw std::runtime_error("bad schedule csv header: " + line);
    std::vector<ScheduleEvent> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ScheduleEvent e;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        e.index = std::stoi(cell);
        std::getline(ss, cell, ',');
        e.agent = std::stoi(cell);
        std::getline(ss, cell, ',');
        if (cell == "draw")
            e.kind = EventKind::Draw;
        else if (cell == "update")
            e.kind = EventKind::Update;
        else if (cell == "broadcast")
            e.kind = EventKind::Broadcast;
        else
            throw std::runtime_error("unknown schedule event kind: " + cell);
        out.push_back(e);
    }
    return out;
}

void write_schedule_csv(const std::string& path, const std::vector<ScheduleEvent>& ev) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write schedule csv: " + path);
    out << "event_index,agent,kind\n";
    for (const auto& e : ev) {
        const char* k = e.kind == EventKind::Draw      ? "draw"
                        : e.kind == EventKind::Update  ? "update"
                                                       : "broadcast";
        out << e.index << "," << e.agent << "," << k << "\n";
    }
}

AsyncResult run_async_fusion(int n_agents, const social::AgentModel& am, int true_state,
                             const Belief& pi0, const std::vector<ScheduleEvent>& schedule,
                             std::uint64_t seed) {
    if (n_agents < 1) throw DimensionMismatch("need at least one agent");
    Rng rng(seed);
    struct Obs {
        int id;
        int y;
    };
    AsyncResult res;
    res.agent_belief_history.resize(static_cast<size_t>(n_agents));
    Belief broadcast = pi0;
    std::vector<int> broadcast_ids;  // observation ids folded in, in order
    std::vector<Belief> local(static_cast<size_t>(n_agents), pi0);
    std::vector<std::vector<int>> local_ids(static_cast<size_t>(n_agents));
    std::vector<std::optional<Obs>> pending(static_cast<size_t>(n_agents));
    std::vector<double> row(static_cast<size_t>(am.n_obs()));
    std::vector<Obs> drawn;

    for (const auto& e : schedule) {
        if (e.agent < 0 || e.agent >= n_agents) throw DimensionMismatch("schedule agent index");
        size_t i = static_cast<size_t>(e.agent);
        switch (e.kind) {
            case EventKind::Draw: {
                for (int y = 0; y < am.n_obs(); ++y) row[static_cast<size_t>(y)] = am.obs.p(true_state, y);
                Obs o{static_cast<int>(drawn.size()), rng.categorical(row)};
                drawn.push_back(o);
                pending[i] = o;
                break;
            }
            case EventKind::Update: {
                if (!pending[i]) throw DimensionMismatch("update before any draw for agent");
                local[i] = social::bayes_update(broadcast, pending[i]->y, am.obs);
                local_ids[i] = broadcast_ids;
                local_ids[i].push_back(pending[i]->id);
                res.agent_belief_history[i].push_back(local[i].probs());
                break;
            }
            case EventKind::Broadcast: {
                broadcast = local[i];
                broadcast_ids = local_ids[i];
                break;
            }
        }
    }

    res.naive_final = broadcast.probs();
    res.naive_obs_sequence = broadcast_ids;
    // replay the distinct incorporated observations once each, in first-use
    // order, so a clean schedule reproduces the naive belief bit for bit
    std::vector<bool> seen(drawn.size(), false);
    Belief correct = pi0;
    for (int id : broadcast_ids) {
        if (seen[static_cast<size_t>(id)]) {
            res.reuse_detected = true;
            continue;
        }
        seen[static_cast<size_t>(id)] = true;
        correct = social::bayes_update(correct, drawn[static_cast<size_t>(id)].y, am.obs);
    }
    res.correct_final = correct.probs();
    double kl = 0.0;
    for (size_t i = 0; i < res.naive_final.size(); ++i) {
        double p = res.naive_final[i], q = res.correct_final[i];
        if (p > 0.0) kl += q > 0.0 ? p * std::log(p / q) : 1e300;
    }
    res.incest_kl = kl;
    return res;
}

}  // namespace herdsim::topology
