#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aam/policy/policy.hpp"
#include "aam/sim/world.hpp"

namespace aam::train {

// One agent decision at an active timestep. The reward is the net reward of
// that decision, realized tau ticks later but attached here.
struct Transition {
    policy::Observation obs;
    int action = 0;
    double logp = 0.0;
    double value = 0.0;
    double reward = 0.0;
    bool done = false;
    bool truncated = false;      // cut by buffer size, bootstrap below
    double bootstrap_value = 0.0;
    int agent = 0;
    int step_index = 0;  // per-agent active-step index
    long episode = 0;
    long tick = 0;
};

struct PPOConfig {
    int batch = 1200;
    int minibatch = 48;
    int sgd_iters = 8;
    double clip = 0.1;
    double gamma = 0.99;
    double lambda = 0.95;
    double entropy_coeff = 1e-2;  // 1e-3 for hetgat / hetgcn
    double value_coeff = 5e-3;
    double lr_start = 1e-4;
    double lr_end = 1e-5;
    long lr_horizon = 300000;  // active timesteps
};

struct RolloutBuffer {
    std::vector<Transition> transitions;
    // Stats over the episodes completed during collection.
    double mean_fleet_reward = 0.0;
    double mean_fulfillment = 0.0;
    int episodes = 0;
};

// Runs episodes with the shared-parameter policy until `count` transitions are
// buffered; the last episode is truncated with bootstrap values.
RolloutBuffer collect_rollouts(const sim::EpisodeConfig& env, const policy::PolicyNet& net,
                               bool use_mask, int count, uint64_t seed,
                               long episode_offset = 0);

// delta_t = r + gamma*V' * (1-done) - V; A_t = delta + gamma*lambda*(1-done)*A';
// returns = A + V. Sequences are per-agent, ordered by active-step index.
void compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                 const std::vector<int>& dones, const std::vector<double>& bootstraps,
                 double gamma, double lambda, std::vector<double>& advantages,
                 std::vector<double>& returns);

struct UpdateStats {
    double mean_ratio = 0.0;
    double clip_fraction = 0.0;
    double entropy = 0.0;
    double value_loss = 0.0;
    bool aborted = false;  // NaN loss
    int aborted_minibatch = -1;
};

// Clipped-surrogate PPO over shuffled minibatches; advantages normalized per
// batch. Adam steps use the supplied learning rate.
UpdateStats ppo_update(RolloutBuffer& buffer, policy::PolicyNet& net,
                       nn::AdamOptimizer& opt, const PPOConfig& cfg, double lr,
                       util::Rng& shuffle_rng);

struct TrainConfig {
    sim::EpisodeConfig env;
    policy::Arch arch = policy::Arch::EncDec;
    bool use_mask = false;
    long budget = 20000;  // active timesteps
    uint64_t seed = 0;
    std::string out_dir;
    PPOConfig ppo;
};

struct CurvePoint {
    long active_timesteps = 0;
    double mean_fleet_reward = 0.0;
    double mean_fulfillment = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
};

struct TrainResult {
    std::vector<CurvePoint> curve;
    nlohmann::json checkpoint;
};

// Alternates collect/update until the budget is exhausted; writes curve.csv
// and milestone checkpoints when out_dir is set.
TrainResult train(const TrainConfig& cfg, policy::PolicyNet& net);

}  // namespace aam::train
