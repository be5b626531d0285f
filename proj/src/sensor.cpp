#include "herdsim/sensor.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace herdsim::sensor {

ReplaySensor ReplaySensor::from_csv(const std::string& path, int n_states, bool cyclic) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open replay csv: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "state,observation") throw std::runtime_error("bad replay csv header: " + line);
    ReplaySensor rs;
    rs.obs_by_state.resize(static_cast<size_t>(n_states));
    rs.cursors.assign(static_cast<size_t>(n_states), 0);
    rs.cyclic = cyclic;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        int s = std::stoi(cell);
        std::getline(ss, cell, ',');
        int y = std::stoi(cell);
        if (s < 0 || s >= n_states) throw std::runtime_error("replay state out of range");
        rs.obs_by_state[static_cast<size_t>(s)].push_back(y);
    }
    return rs;
}

namespace {

int observe_synthetic(const SyntheticSensor& s, int state, Rng& rng) {
    std::vector<double> row(static_cast<size_t>(s.model.n_obs()));
    for (int y = 0; y < s.model.n_obs(); ++y) row[static_cast<size_t>(y)] = s.model.p(state, y);
    return rng.categorical(row);
}

int observe_replay(ReplaySensor& s, int state) {
    auto& obs = s.obs_by_state[static_cast<size_t>(state)];
    if (obs.empty()) throw ReplayExhausted("no replay rows for state " + std::to_string(state));
    size_t& cur = s.cursors[static_cast<size_t>(state)];
    if (cur >= obs.size()) {
        if (!s.cyclic) throw ReplayExhausted("replay exhausted for state " + std::to_string(state));
        cur = 0;
    }
    return obs[cur++];
}

int observe_remote(const RemoteSensor& s, int state) {
    nlohmann::json body;
    if (!s.config.prompt_template.empty()) {
        std::ifstream tf(s.config.prompt_template);
        if (tf) {
            try {
                tf >> body;
            } catch (const std::exception& e) {
                throw RemoteError(std::string("bad prompt template: ") + e.what());
            }
        }
    }
    body["state"] = state;
    std::string payload = body.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < s.config.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << attempt));
        httplib::Client cli(s.config.host, s.config.port);
        cli.set_connection_timeout(s.config.timeout_seconds, 0);
        cli.set_read_timeout(s.config.timeout_seconds, 0);
        httplib::Headers headers;
        if (!s.config.auth_token_env.empty()) {
            const char* tok = std::getenv(s.config.auth_token_env.c_str());
            if (tok) headers.emplace("Authorization", std::string("Bearer ") + tok);
        }
        auto resp = cli.Post(s.config.path, headers, payload, "application/json");
        if (!resp) {
            last_error = "transport error: " + httplib::to_string(resp.error());
            continue;
        }
        if (resp->status != 200) {
            last_error = "http status " + std::to_string(resp->status);
            continue;
        }
        try {
            auto j = nlohmann::json::parse(resp->body);
            return j.at("y").get<int>();
        } catch (const std::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
        }
    }
    throw RemoteError("remote sensor failed after " + std::to_string(s.config.retries) +
                      " attempts; last: " + last_error);
}

}  // namespace

int observe(SensorSpec& s, int state, Rng& rng) {
    if (auto* syn = std::get_if<SyntheticSensor>(&s.kind)) return observe_synthetic(*syn, state, rng);
    if (auto* rep = std::get_if<ReplaySensor>(&s.kind)) return observe_replay(*rep, state);
    return observe_remote(std::get<RemoteSensor>(s.kind), state);
}

ObservationModel estimate_likelihood(const std::vector<std::pair<int, int>>& labeled, int n_states,
                                     int n_obs, double laplace_alpha) {
    Matrix counts(n_states, n_obs, laplace_alpha);
    for (auto& [x, y] : labeled) {
        if (x < 0 || x >= n_states || y < 0 || y >= n_obs)
            throw std::runtime_error("labeled sample out of range");
        counts.at(x, y) += 1.0;
    }
    for (int x = 0; x < n_states; ++x) {
        double s = 0.0;
        for (int y = 0; y < n_obs; ++y) s += counts.at(x, y);
        if (s <= 0.0)
            throw EmptyState("state " + std::to_string(x) + " has no samples and alpha = 0");
        for (int y = 0; y < n_obs; ++y) counts.at(x, y) /= s;
    }
    return ObservationModel(std::move(counts));
}

}  // namespace herdsim::sensor
