#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "herdsim/core.hpp"
#include "herdsim/social.hpp"

namespace herdsim::topology {

enum class WomVariant {
    PerLevel,      // public prior updated after every level (the form under test)
    PerOuterStep,  // single update at the end of each outer step
};

// Word-of-mouth hierarchy: only level 0 sees a fresh observation of the state;
// level m >= 1 observes a regeneration of level m-1's observation through the
// observation-to-observation map `regen`, so its effective likelihood is
// base.obs * regen^m.
struct WomConfig {
    int n_levels;  // M >= 2
    ObservationModel regen;  // Y x Y stochastic map
    social::AgentModel base;
    int outer_steps;
    WomVariant variant = WomVariant::PerLevel;

    void validate() const;
};

social::EpisodeTrace run_word_of_mouth(const WomConfig& cfg, int true_state, const Belief& pi0,
                                       std::uint64_t seed);

enum class EventKind { Draw, Update, Broadcast };

struct ScheduleEvent {
    int index = 0;
    int agent = 0;
    EventKind kind = EventKind::Draw;
};

// Schedule CSV: event_index,agent,kind(draw|update|broadcast).
std::vector<ScheduleEvent> load_schedule_csv(const std::string& path);
void write_schedule_csv(const std::string& path, const std::vector<ScheduleEvent>& ev);

struct AsyncResult {
    std::vector<std::vector<std::vector<double>>> agent_belief_history;  // per agent
    std::vector<double> naive_final;    // last broadcast belief
    std::vector<double> correct_final;  // distinct incorporated observations, replayed once each
    double incest_kl = 0.0;             // KL(naive || correct); 0 exactly for clean schedules
    bool reuse_detected = false;
    std::vector<int> naive_obs_sequence;  // observation ids folded into the naive belief, in order
};

// Naive asynchronous fusion (no provenance): draw(i) samples a fresh private
// observation for agent i; update(i) applies agent i's latest observation to
// the latest broadcast prior; broadcast(i) publishes agent i's belief. The
// correct posterior replays the distinct incorporated observations once each,
// in first-incorporation order, so a reuse-free schedule gives KL = 0 exactly.
AsyncResult run_async_fusion(int n_agents, const social::AgentModel& am, int true_state,
                             const Belief& pi0, const std::vector<ScheduleEvent>& schedule,
                             std::uint64_t seed);

}  // namespace herdsim::topology
