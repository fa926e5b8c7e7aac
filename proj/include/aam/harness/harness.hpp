#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aam/baselines/baselines.hpp"
#include "aam/policy/policy.hpp"
#include "aam/sim/world.hpp"
#include "aam/train/train.hpp"

#include "json.hpp"

namespace aam::harness {

// Flat experiment configuration: JSON file plus key=value overrides, with
// overrides winning.
struct RunSpec {
    std::string policy = "random";  // encdec | encdec-masked | hetgat | hetgcn | random | odla
    std::string checkpoint;         // path, required for learned policies
    std::string out_dir = ".";
    std::string mode = "ondemand";  // oneshot | ondemand
    std::string rates = "high";     // high | low
    long duration = -1;             // -1: default for the mode (400 / 100)
    int episodes = 20;
    std::array<int, 3> fleet = {2, 2, 2};
    int depots = 10;
    int clients = 12;
    int k_v = 5;
    int k_d = 5;
    uint64_t seed = 0;
    long budget = 20000;       // train only
    int snapshot_every = 25;   // trace only
    bool greedy = false;       // eval action selection: argmax instead of sampling
    bool dump_matrices = false;

    static RunSpec from_file(const std::string& path);
    static RunSpec from_json(const nlohmann::json& j);
    void apply_override(const std::string& keyval);  // "key=value"

    sim::EpisodeConfig episode_config() const;
    nlohmann::json env_json() const;  // environment-defining fields only
};

struct PolicyRunner {
    std::string selector;
    std::optional<policy::PolicyNet> net;
    bool use_mask = false;
    bool is_odla = false;
    bool is_random = false;
};

PolicyRunner load_policy(const RunSpec& spec);

// Runs one episode under the selector; fills the metrics.
sim::EpisodeMetrics run_one(const RunSpec& spec, const PolicyRunner& runner,
                            uint64_t episode_index, sim::WorldState* out_world = nullptr,
                            std::vector<std::string>* matrix_dump = nullptr);

struct EvalResult {
    std::vector<sim::EpisodeMetrics> episodes;
    std::string metrics_csv;
    nlohmann::json summary;
};

EvalResult cmd_eval(const RunSpec& spec, bool write_files = true);
int cmd_compare(const std::vector<RunSpec>& specs, bool write_files = true,
                std::string* table_out = nullptr);
int cmd_trace(const RunSpec& spec);
int cmd_train(const RunSpec& spec);
int cmd_oracle(const RunSpec& spec);

}  // namespace aam::harness
