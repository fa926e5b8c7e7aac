#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aam/sim/world.hpp"
#include "aam/util/rng.hpp"

namespace aam::baselines {

inline constexpr double kInfCost = std::numeric_limits<double>::infinity();

// Minimum-total-cost rectangular assignment. +inf entries are infeasible and
// never matched; unmatched rows get -1. Maximizes matched pairs among
// feasible ones, then minimizes total cost.
std::vector<int> lap_solve(const std::vector<std::vector<double>>& cost);

struct OdlaChoice {
    int vehicle = -1;
    int depot = -1;
    sim::PayloadRequest request;
};

// Centralized full-visibility assignment over all available vehicles and all
// queued requests. Unmatched vehicles stay put.
std::vector<OdlaChoice> odla_step(const sim::WorldState& w,
                                  std::vector<std::string>* matrix_dump = nullptr);

// Runs a full episode under the centralized oracle, re-solving whenever a
// vehicle becomes available or new requests arrive.
sim::EpisodeMetrics run_episode_odla(sim::WorldState& w, const sim::EpisodeConfig& cfg,
                                     std::vector<std::string>* matrix_dump = nullptr);

// Uniform choice over all depots.
int random_policy(const sim::WorldState& w, util::Rng& rng);

}  // namespace aam::baselines
