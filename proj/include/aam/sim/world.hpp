#pragma once

#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aam/util/rng.hpp"

namespace aam::sim {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Payoff coefficients; chosen to flatten the concave payoff at ~30 units.
inline constexpr double kQ1 = -0.0167;
inline constexpr double kQ2 = 1.0;
inline constexpr double kQ3 = 2.0;
inline constexpr double kQ4 = 0.2;  // travel cost per unit to the pickup depot
inline constexpr double kInvalidDepotPenalty = -5.0;
inline constexpr int kMaxQueueLength = 5;
inline constexpr int kArrivalInterval = 50;

struct PayloadRequest {
    int origin = -1;      // depot id
    int dest_node = -1;   // global node id (depot or client), != origin
    int cap = 1;          // {1,2,3}
    double payoff = 0.0;  // cached, never mutated
    long arrival_tick = 0;
    long uid = 0;         // global arrival order, used for FIFO tie-freedom
};

struct DepotState {
    int id = -1;
    Vec2 pos;
    double lambda = 0.0;     // expected arrivals per tick
    double alpha_bar = 1.0;  // expected payload size in [1,3]
    std::deque<PayloadRequest> queue;  // arrival order
};

enum class Stage { Idle, ToDepot, ToDest };

struct VehicleState {
    int id = -1;
    Vec2 pos;
    int capacity = 1;  // {1,2,3}
    bool available = true;
    int prev_stop = -1;  // global node id
    int next_stop = -1;
    std::optional<PayloadRequest> committed;
    Stage stage = Stage::Idle;
    Vec2 target;
    long arrival_clock = -1;       // tick the current leg completes
    double pending_reward = 0.0;   // credited at completion
    int decisions = 0;
    double cumulative_reward = 0.0;
};

enum class Mode { OneShot, OnDemand };

struct EpisodeConfig {
    Mode mode = Mode::OnDemand;
    long duration_ticks = 400;  // 100 in one-shot
    int max_decisions = 50;     // T
    std::vector<double> rate_set = {0.01, 0.05, 0.025};
    std::array<int, 3> fleet = {2, 2, 2};  // vehicles per capacity class
    int num_depots = 10;
    int num_clients = 12;
    int k_v = 5;
    int k_d = 5;
    int grid_size = 24;
    uint64_t seed = 0;

    static EpisodeConfig one_shot() {
        EpisodeConfig c;
        c.mode = Mode::OneShot;
        c.duration_ticks = 100;
        return c;
    }
};

struct Credit {
    int vehicle = -1;
    double reward = 0.0;
    bool fulfilled = false;
};

struct StepResult {
    std::vector<int> active;   // vehicle ids whose availability flipped
    std::vector<Credit> credits;
    bool populated = false;
};

struct WorldState {
    long clock = 0;
    int grid_size = 24;
    Mode mode = Mode::OnDemand;
    long duration_ticks = 400;
    std::vector<VehicleState> vehicles;
    std::vector<DepotState> depots;
    std::vector<Vec2> clients;
    util::Rng rng;  // episode stream (arrivals)

    long requests_arrived = 0;  // includes dropped
    long requests_fulfilled = 0;
    long requests_dropped = 0;
    long next_request_uid = 0;
    double fleet_reward = 0.0;
    std::array<double, 3> reward_by_class = {0.0, 0.0, 0.0};

    bool logging = false;
    std::vector<std::string> event_log;

    int num_nodes() const { return static_cast<int>(depots.size() + clients.size()); }
    Vec2 node_pos(int node) const {
        int nd = static_cast<int>(depots.size());
        return node < nd ? depots[node].pos : clients[node - nd];
    }
    long in_flight() const {
        long n = 0;
        for (const auto& v : vehicles)
            if (v.committed) ++n;
        return n;
    }
    long queued() const {
        long n = 0;
        for (const auto& d : depots) n += static_cast<long>(d.queue.size());
        return n;
    }
};

struct EpisodeMetrics {
    double fleet_reward = 0.0;
    double fulfillment_ratio = 1.0;
    std::array<double, 3> rewards_by_class = {0.0, 0.0, 0.0};
    long arrived = 0;
    long fulfilled = 0;
    long dropped = 0;
};

// q1*dist^2 + q2*dist + q3*cap.
double payoff(const Vec2& origin, const Vec2& dest, int cap);

// Net reward of choosing `depot_pos` from `vehicle_pos`; the three cases are
// suitable payload / empty-but-present / empty-and-elsewhere.
double net_reward(const Vec2& vehicle_pos, const Vec2& depot_pos,
                  const std::optional<PayloadRequest>& assigned);

// FIFO first-fit: earliest-arrived request with cap <= vehicle_capacity,
// removed from the queue. Remaining order preserved.
std::optional<PayloadRequest> assign_payload(int vehicle_capacity,
                                             std::deque<PayloadRequest>& queue);

// Poisson batch arrival at one depot; returns the accepted requests.
std::vector<PayloadRequest> populate_depot(WorldState& w, DepotState& d);

void populate_all(WorldState& w);

// Builds a world from the config. Node placement is stratified per quadrant;
// vehicles start at uniformly chosen depot positions.
WorldState make_world(const EpisodeConfig& cfg, uint64_t episode_index = 0);

// Advances one tick: moves committed vehicles, completes legs, populates on
// 50-tick boundaries (on-demand). Returns the active set and credited rewards.
StepResult step_world(WorldState& w);

// Commits an available vehicle to a depot choice at an active timestep.
// `forced` bypasses the FIFO rule (used by the centralized oracle, which
// reserves a specific request). Returns the reward that will be credited at
// completion. Throws std::logic_error on unavailable vehicles.
double commit_vehicle(WorldState& w, int vehicle_id, int depot_id,
                      std::optional<PayloadRequest> forced = std::nullopt);

struct Decision {
    int depot = 0;
    double logp = 0.0;
    double value = 0.0;
};

using DecideFn = std::function<Decision(const WorldState&, int vehicle_id)>;

struct EpisodeHooks {
    // Called after a vehicle committed (transition recording).
    std::function<void(const WorldState&, int vehicle, const Decision&, double reward_at_commit)>
        on_decision;
    // Called when a reward is credited at leg completion.
    std::function<void(int vehicle, double reward)> on_credit;
    // Called after every step (trace snapshots).
    std::function<void(const WorldState&)> on_step;
};

// Runs the world to duration_ticks with per-vehicle decentralized decisions.
EpisodeMetrics run_episode(WorldState& w, const EpisodeConfig& cfg, const DecideFn& decide,
                           const EpisodeHooks* hooks = nullptr);

EpisodeMetrics metrics_from(const WorldState& w);

// ASCII grid rendering used by the trace command.
std::string render_world(const WorldState& w);

}  // namespace aam::sim
