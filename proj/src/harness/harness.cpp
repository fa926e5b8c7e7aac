#include "aam/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace aam::harness {

namespace fs = std::filesystem;

namespace {

std::vector<double> rate_values(const std::string& rates) {
    if (rates == "high") return {0.01, 0.05, 0.025};
    if (rates == "low") return {0.005, 0.025, 0.0125};
    throw std::invalid_argument("unknown rate set: " + rates);
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / xs.size();
}

double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs), v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return std::sqrt(v / xs.size());
}

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? "."
                               : fs::path(path).parent_path().string());
    std::ofstream f(path, std::ios::binary);
    f << content;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

RunSpec RunSpec::from_json(const nlohmann::json& j) {
    RunSpec s;
    auto get = [&](const char* k, auto& field) {
        if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
    };
    get("policy", s.policy);
    get("checkpoint", s.checkpoint);
    get("out_dir", s.out_dir);
    get("mode", s.mode);
    get("rates", s.rates);
    get("duration", s.duration);
    get("episodes", s.episodes);
    if (j.contains("fleet")) {
        auto f = j.at("fleet").get<std::vector<int>>();
        if (f.size() != 3) throw std::invalid_argument("fleet must have 3 entries");
        s.fleet = {f[0], f[1], f[2]};
    }
    get("depots", s.depots);
    get("clients", s.clients);
    get("k_v", s.k_v);
    get("k_d", s.k_d);
    get("seed", s.seed);
    get("budget", s.budget);
    get("snapshot_every", s.snapshot_every);
    get("greedy", s.greedy);
    get("dump_matrices", s.dump_matrices);
    return s;
}

RunSpec RunSpec::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open runspec: " + path);
    nlohmann::json j;
    f >> j;
    RunSpec s = from_json(j);
    if (const char* env_seed = std::getenv("AAM_SEED")) s.seed = std::stoull(env_seed);
    return s;
}

void RunSpec::apply_override(const std::string& keyval) {
    auto eq = keyval.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value: " + keyval);
    std::string key = keyval.substr(0, eq), val = keyval.substr(eq + 1);
    nlohmann::json j;
    if (key == "policy" || key == "checkpoint" || key == "out_dir" || key == "mode" ||
        key == "rates") {
        j[key] = val;
    } else if (key == "fleet") {
        std::vector<int> f;
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(std::stoi(tok));
        j[key] = f;
    } else if (key == "greedy" || key == "dump_matrices") {
        j[key] = (val == "1" || val == "true");
    } else {
        j[key] = std::stoll(val);
    }
    // Merge the single field through from_json to share parsing.
    nlohmann::json base = {
        {"policy", policy}, {"checkpoint", checkpoint}, {"out_dir", out_dir},
        {"mode", mode}, {"rates", rates}, {"duration", duration},
        {"episodes", episodes}, {"fleet", std::vector<int>{fleet[0], fleet[1], fleet[2]}},
        {"depots", depots}, {"clients", clients}, {"k_v", k_v}, {"k_d", k_d},
        {"seed", seed}, {"budget", budget}, {"snapshot_every", snapshot_every},
        {"greedy", greedy}, {"dump_matrices", dump_matrices}};
    base.merge_patch(j);
    *this = from_json(base);
}

sim::EpisodeConfig RunSpec::episode_config() const {
    sim::EpisodeConfig cfg;
    cfg.mode = mode == "oneshot" ? sim::Mode::OneShot : sim::Mode::OnDemand;
    cfg.duration_ticks = duration > 0 ? duration : (cfg.mode == sim::Mode::OneShot ? 100 : 400);
    cfg.rate_set = rate_values(rates);
    cfg.fleet = fleet;
    cfg.num_depots = depots;
    cfg.num_clients = clients;
    cfg.k_v = k_v;
    cfg.k_d = k_d;
    cfg.seed = seed;
    return cfg;
}

nlohmann::json RunSpec::env_json() const {
    return {{"mode", mode}, {"rates", rates}, {"duration", duration},
            {"fleet", std::vector<int>{fleet[0], fleet[1], fleet[2]}},
            {"depots", depots}, {"clients", clients}, {"k_v", k_v}, {"k_d", k_d},
            {"seed", seed}};
}

PolicyRunner load_policy(const RunSpec& spec) {
    PolicyRunner r;
    r.selector = spec.policy;
    if (spec.policy == "random") {
        r.is_random = true;
    } else if (spec.policy == "odla") {
        r.is_odla = true;
    } else {
        std::string arch = spec.policy == "encdec-masked" ? "encdec" : spec.policy;
        r.use_mask = spec.policy == "encdec-masked";
        if (spec.checkpoint.empty())
            throw std::runtime_error("policy '" + spec.policy + "' requires a checkpoint");
        std::ifstream f(spec.checkpoint);
        if (!f) throw std::runtime_error("cannot open checkpoint: " + spec.checkpoint);
        nlohmann::json j;
        f >> j;
        if (j.at("arch").get<std::string>() != arch)
            throw std::runtime_error("checkpoint arch does not match policy selector");
        r.net = policy::PolicyNet::from_checkpoint(j);
    }
    return r;
}

sim::EpisodeMetrics run_one(const RunSpec& spec, const PolicyRunner& runner,
                            uint64_t episode_index, sim::WorldState* out_world,
                            std::vector<std::string>* matrix_dump) {
    sim::EpisodeConfig cfg = spec.episode_config();
    sim::WorldState w = sim::make_world(cfg, episode_index);
    if (out_world) w.logging = true;

    sim::EpisodeMetrics m;
    if (runner.is_odla) {
        m = baselines::run_episode_odla(w, cfg, matrix_dump);
    } else {
        util::Rng action_rng = util::Rng::derive(spec.seed, 9000 + episode_index);
        sim::DecideFn decide = [&](const sim::WorldState& ws, int vid) {
            if (runner.is_random)
                return sim::Decision{baselines::random_policy(ws, action_rng), 0.0, 0.0};
            auto [out, ob] =
                policy::policy_forward(ws, vid, *runner.net, cfg.k_v, cfg.k_d, runner.use_mask);
            int a;
            if (spec.greedy) {
                a = static_cast<int>(
                    std::max_element(out.probs.begin(), out.probs.end()) - out.probs.begin());
            } else {
                a = action_rng.sample_discrete(out.probs);
            }
            return sim::Decision{a, std::log(std::max(out.probs[a], 1e-300)), out.value};
        };
        m = sim::run_episode(w, cfg, decide);
    }
    if (out_world) *out_world = std::move(w);
    return m;
}

EvalResult cmd_eval(const RunSpec& spec, bool write_files) {
    PolicyRunner runner = load_policy(spec);
    EvalResult res;

    std::ostringstream csv;
    csv << "episode,fleet_reward,fulfillment_ratio,reward_class1,reward_class2,"
           "reward_class3,arrived,fulfilled\n";
    std::vector<double> rew, ful, rc1, rc2, rc3, arr, fulc, drop;
    for (int e = 0; e < spec.episodes; ++e) {
        sim::EpisodeMetrics m = run_one(spec, runner, static_cast<uint64_t>(e));
        res.episodes.push_back(m);
        csv << e << ',' << fmt(m.fleet_reward) << ',' << fmt(m.fulfillment_ratio) << ','
            << fmt(m.rewards_by_class[0]) << ',' << fmt(m.rewards_by_class[1]) << ','
            << fmt(m.rewards_by_class[2]) << ',' << m.arrived << ',' << m.fulfilled << "\n";
        rew.push_back(m.fleet_reward);
        ful.push_back(m.fulfillment_ratio);
        rc1.push_back(m.rewards_by_class[0]);
        rc2.push_back(m.rewards_by_class[1]);
        rc3.push_back(m.rewards_by_class[2]);
        arr.push_back(static_cast<double>(m.arrived));
        fulc.push_back(static_cast<double>(m.fulfilled));
        drop.push_back(static_cast<double>(m.dropped));
    }
    res.metrics_csv = csv.str();

    auto ms = [&](const std::vector<double>& xs) {
        return nlohmann::json{{"mean", mean_of(xs)}, {"std", std_of(xs)}};
    };
    res.summary = {{"policy", spec.policy},
                   {"episodes", spec.episodes},
                   {"fleet_reward", ms(rew)},
                   {"fulfillment_ratio", ms(ful)},
                   {"reward_class1", ms(rc1)},
                   {"reward_class2", ms(rc2)},
                   {"reward_class3", ms(rc3)},
                   {"arrived", ms(arr)},
                   {"fulfilled", ms(fulc)},
                   {"dropped", ms(drop)}};

    if (write_files) {
        write_file(spec.out_dir + "/metrics.csv", res.metrics_csv);
        write_file(spec.out_dir + "/summary.json", res.summary.dump(2) + "\n");
    }
    return res;
}

int cmd_compare(const std::vector<RunSpec>& specs, bool write_files, std::string* table_out) {
    if (specs.size() < 2) throw std::invalid_argument("compare needs at least 2 specs");
    for (size_t i = 1; i < specs.size(); ++i)
        if (specs[i].env_json() != specs[0].env_json())
            throw std::invalid_argument("compare: specs use different environments");

    std::ostringstream table;
    table << "policy\tfleet_reward_mean\tfleet_reward_std\tfulfillment_mean\t"
             "fulfillment_std\n";
    nlohmann::json plot;
    plot["environment"] = specs[0].env_json();
    plot["series"] = nlohmann::json::array();

    for (const RunSpec& s : specs) {
        EvalResult r = cmd_eval(s, false);
        std::vector<double> rew, ful;
        for (const auto& m : r.episodes) {
            rew.push_back(m.fleet_reward);
            ful.push_back(m.fulfillment_ratio);
        }
        table << s.policy << '\t' << fmt(mean_of(rew)) << '\t' << fmt(std_of(rew)) << '\t'
              << fmt(mean_of(ful)) << '\t' << fmt(std_of(ful)) << "\n";
        plot["series"].push_back({{"policy", s.policy},
                                  {"fleet_reward", rew},
                                  {"fulfillment", ful}});
    }

    if (table_out) *table_out = table.str();
    if (write_files) {
        write_file(specs[0].out_dir + "/compare.tsv", table.str());
        write_file(specs[0].out_dir + "/plotdata.json", plot.dump(2) + "\n");
    }
    std::cout << table.str();
    return 0;
}

int cmd_trace(const RunSpec& spec) {
    PolicyRunner runner = load_policy(spec);
    sim::EpisodeConfig cfg = spec.episode_config();
    sim::WorldState w = sim::make_world(cfg, 0);
    w.logging = true;

    std::ostringstream out;
    auto snapshot = [&](const sim::WorldState& ws) {
        if (ws.clock % spec.snapshot_every == 0) out << render_world(ws) << "\n";
    };

    util::Rng action_rng = util::Rng::derive(spec.seed, 42);
    sim::EpisodeHooks hooks;
    hooks.on_step = snapshot;
    sim::EpisodeMetrics m;
    if (runner.is_odla) {
        m = baselines::run_episode_odla(w, cfg);
    } else {
        sim::DecideFn decide = [&](const sim::WorldState& ws, int vid) {
            if (runner.is_random)
                return sim::Decision{baselines::random_policy(ws, action_rng), 0.0, 0.0};
            auto [o, ob] =
                policy::policy_forward(ws, vid, *runner.net, cfg.k_v, cfg.k_d, runner.use_mask);
            return sim::Decision{action_rng.sample_discrete(o.probs), 0.0, o.value};
        };
        m = sim::run_episode(w, cfg, decide, &hooks);
    }

    std::ostringstream log;
    for (const auto& line : w.event_log) log << line << "\n";
    log << "# fleet_reward=" << m.fleet_reward << " fulfilled=" << m.fulfilled << "/"
        << m.arrived << "\n";
    write_file(spec.out_dir + "/trace.log", log.str() + out.str());
    return 0;
}

int cmd_train(const RunSpec& spec) {
    train::TrainConfig tc;
    tc.env = spec.episode_config();
    std::string archname = spec.policy == "encdec-masked" ? "encdec" : spec.policy;
    tc.arch = policy::arch_from_string(archname);
    tc.use_mask = spec.policy == "encdec-masked";
    tc.budget = spec.budget;
    tc.seed = spec.seed;
    tc.out_dir = spec.out_dir;
    tc.ppo.entropy_coeff = tc.arch == policy::Arch::EncDec ? 1e-2 : 1e-3;

    policy::PolicyNet net = policy::PolicyNet::make(tc.arch, spec.seed);
    train::train(tc, net);
    return 0;
}

int cmd_oracle(const RunSpec& spec) {
    RunSpec s = spec;
    s.policy = "odla";
    PolicyRunner runner = load_policy(s);
    std::vector<std::string> dump;

    std::ostringstream csv;
    csv << "episode,fleet_reward,fulfillment_ratio,reward_class1,reward_class2,"
           "reward_class3,arrived,fulfilled\n";
    for (int e = 0; e < s.episodes; ++e) {
        sim::EpisodeMetrics m =
            run_one(s, runner, static_cast<uint64_t>(e), nullptr,
                    s.dump_matrices ? &dump : nullptr);
        csv << e << ',' << fmt(m.fleet_reward) << ',' << fmt(m.fulfillment_ratio) << ','
            << fmt(m.rewards_by_class[0]) << ',' << fmt(m.rewards_by_class[1]) << ','
            << fmt(m.rewards_by_class[2]) << ',' << m.arrived << ',' << m.fulfilled << "\n";
    }
    write_file(s.out_dir + "/metrics.csv", csv.str());
    if (s.dump_matrices) {
        std::ostringstream os;
        for (const auto& block : dump) os << block << "\n";
        write_file(s.out_dir + "/matrices.tsv", os.str());
    }
    return 0;
}

}  // namespace aam::harness
