#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "herdsim/core.hpp"
#include "herdsim/rng.hpp"

namespace herdsim::sensor {

struct ReplayExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RemoteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyntheticSensor {
    ObservationModel model;
};

// Replay CSV: columns state,observation (0-based). Cursors are per-state and
// cyclic by default, so short label files drive long runs deterministically.
struct ReplaySensor {
    std::vector<std::vector<int>> obs_by_state;
    std::vector<size_t> cursors;
    bool cyclic = true;

    static ReplaySensor from_csv(const std::string& path, int n_states, bool cyclic = true);
};

struct RemoteConfig {
    std::string host;           // e.g. 127.0.0.1
    int port = 80;
    std::string path = "/observe";
    std::string auth_token_env; // name of the env var holding the bearer token
    std::string prompt_template; // static JSON fields merged into each request
    int timeout_seconds = 30;
    int retries = 3;
};

// POSTs {template fields..., "state": x} per observation and expects a JSON
// integer field "y"; retries with backoff, then RemoteError.
struct RemoteSensor {
    RemoteConfig config;
};

struct SensorSpec {
    std::variant<SyntheticSensor, ReplaySensor, RemoteSensor> kind;
    int obs_cardinality = 0;
};

// Draws the next observation for `state`. Synthetic samples the model row;
// Replay returns the next recorded observation for that state (ReplayExhausted
// when non-cyclic runs out); Remote performs the configured request.
int observe(SensorSpec& s, int state, Rng& rng);

// Row x = (counts_x + alpha) normalized. EmptyState when alpha = 0 and some
// state in [0, n_states) has no samples.
ObservationModel estimate_likelihood(const std::vector<std::pair<int, int>>& labeled, int n_states,
                                     int n_obs, double laplace_alpha);

}  // namespace herdsim::sensor
