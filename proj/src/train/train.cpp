#include "aam/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

namespace aam::train {

using nn::Tape;

RolloutBuffer collect_rollouts(const sim::EpisodeConfig& env, const policy::PolicyNet& net,
                               bool use_mask, int count, uint64_t seed,
                               long episode_offset) {
    RolloutBuffer buf;
    double sum_reward = 0.0, sum_fulfill = 0.0;
    long episode = episode_offset;
    std::vector<Transition> all;

    while (static_cast<int>(all.size()) < count) {
        sim::WorldState w = sim::make_world(env, static_cast<uint64_t>(episode));
        util::Rng action_rng = util::Rng::derive(seed ^ env.seed, 1000 + episode);
        std::vector<int> open(w.vehicles.size(), -1);  // per-agent pending transition
        std::vector<int> steps(w.vehicles.size(), 0);
        size_t first = all.size();

        sim::EpisodeHooks hooks;
        sim::DecideFn decide = [&](const sim::WorldState& ws, int vid) {
            auto [out, ob] = policy::policy_forward(ws, vid, net, env.k_v, env.k_d, use_mask);
            int a = action_rng.sample_discrete(out.probs);
            Transition t;
            t.obs = std::move(ob);
            t.action = a;
            t.logp = std::log(out.probs[a]);
            t.value = out.value;
            t.agent = vid;
            t.step_index = steps[vid]++;
            t.episode = episode;
            t.tick = ws.clock;
            open[vid] = static_cast<int>(all.size());
            all.push_back(std::move(t));
            return sim::Decision{a, t.logp, t.value};
        };
        hooks.on_credit = [&](int vid, double reward) {
            if (open[vid] >= 0) {
                all[open[vid]].reward = reward;
                open[vid] = -1;
            }
        };

        sim::EpisodeMetrics m = sim::run_episode(w, env, decide, &hooks);
        // Uncompleted legs at episode end never realize their reward.
        for (size_t i = first; i < all.size(); ++i) all[i].done = false;
        std::map<int, int> last_of_agent;
        for (size_t i = first; i < all.size(); ++i) last_of_agent[all[i].agent] = static_cast<int>(i);
        for (auto [agent, i] : last_of_agent) all[i].done = true;

        sum_reward += m.fleet_reward;
        sum_fulfill += m.fulfillment_ratio;
        ++buf.episodes;
        ++episode;
    }

    // Truncate to exactly `count`; agents whose sequence is cut bootstrap from
    // the value of their next (discarded) decision.
    std::map<int, const Transition*> next_after_cut;
    for (size_t i = count; i < all.size(); ++i) {
        auto key = static_cast<int>(all[i].agent);
        if (all[i].episode == all[count - 1].episode && !next_after_cut.count(key))
            next_after_cut[key] = &all[i];
    }
    all.resize(count);
    std::map<int, int> last_kept;
    for (size_t i = 0; i < all.size(); ++i)
        if (all[i].episode == all.back().episode) last_kept[all[i].agent] = static_cast<int>(i);
    for (auto [agent, i] : last_kept) {
        auto it = next_after_cut.find(agent);
        if (it != next_after_cut.end()) {
            all[i].done = false;
            all[i].truncated = true;
            all[i].bootstrap_value = it->second->value;
        } else if (!all[i].done) {
            all[i].done = true;  // sequence genuinely ended mid-buffer
        }
    }

    buf.transitions = std::move(all);
    buf.mean_fleet_reward = buf.episodes ? sum_reward / buf.episodes : 0.0;
    buf.mean_fulfillment = buf.episodes ? sum_fulfill / buf.episodes : 0.0;
    return buf;
}

void compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                 const std::vector<int>& dones, const std::vector<double>& bootstraps,
                 double gamma, double lambda, std::vector<double>& advantages,
                 std::vector<double>& returns) {
    size_t n = rewards.size();
    if (values.size() != n || dones.size() != n || bootstraps.size() != n)
        throw std::invalid_argument("compute_gae: length mismatch");
    advantages.assign(n, 0.0);
    returns.assign(n, 0.0);
    double adv = 0.0;
    for (size_t k = n; k-- > 0;) {
        double not_done = dones[k] ? 0.0 : 1.0;
        double next_v = k + 1 < n ? values[k + 1] : bootstraps[k];
        double delta = rewards[k] + gamma * next_v * not_done - values[k];
        adv = delta + gamma * lambda * not_done * (k + 1 < n ? adv : 0.0);
        advantages[k] = adv;
        returns[k] = adv + values[k];
    }
}

namespace {

// Per-agent GAE over the whole buffer, then batch-level normalization.
void prepare_advantages(RolloutBuffer& buf, const PPOConfig& cfg,
                        std::vector<double>& advantages, std::vector<double>& returns) {
    size_t n = buf.transitions.size();
    advantages.assign(n, 0.0);
    returns.assign(n, 0.0);

    std::map<std::pair<long, int>, std::vector<size_t>> groups;
    for (size_t i = 0; i < n; ++i) {
        const Transition& t = buf.transitions[i];
        groups[{t.episode, t.agent}].push_back(i);
    }
    for (auto& [key, idxs] : groups) {
        std::sort(idxs.begin(), idxs.end(), [&](size_t a, size_t b) {
            return buf.transitions[a].step_index < buf.transitions[b].step_index;
        });
        std::vector<double> r, v, bs, a, ret;
        std::vector<int> d;
        for (size_t i : idxs) {
            const Transition& t = buf.transitions[i];
            r.push_back(t.reward);
            v.push_back(t.value);
            d.push_back(t.done ? 1 : 0);
            bs.push_back(t.truncated ? t.bootstrap_value : 0.0);
        }
        compute_gae(r, v, d, bs, cfg.gamma, cfg.lambda, a, ret);
        for (size_t k = 0; k < idxs.size(); ++k) {
            advantages[idxs[k]] = a[k];
            returns[idxs[k]] = ret[k];
        }
    }

    double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double x : advantages) var += (x - mean) * (x - mean);
    double sd = std::sqrt(var / n);
    for (double& x : advantages) x = (x - mean) / (sd + 1e-8);
}

}  // namespace

UpdateStats ppo_update(RolloutBuffer& buffer, policy::PolicyNet& net,
                       nn::AdamOptimizer& opt, const PPOConfig& cfg, double lr,
                       util::Rng& shuffle_rng) {
    UpdateStats stats;
    size_t n = buffer.transitions.size();
    if (static_cast<int>(n) != cfg.batch)
        throw std::invalid_argument("ppo_update: buffer size != batch");
    if (cfg.batch % cfg.minibatch != 0)
        throw std::invalid_argument("ppo_update: minibatch must divide batch");

    std::vector<double> advantages, returns;
    prepare_advantages(buffer, cfg, advantages, returns);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    double sum_ratio = 0.0, sum_clip = 0.0, sum_ent = 0.0, sum_vloss = 0.0;
    long samples = 0;
    int mb_index = 0;

    for (int epoch = 0; epoch < cfg.sgd_iters; ++epoch) {
        // Fisher-Yates with the caller's stream.
        for (size_t i = n - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(shuffle_rng.uniform_int(static_cast<int>(i + 1)));
            std::swap(order[i], order[j]);
        }
        for (size_t start = 0; start < n; start += cfg.minibatch, ++mb_index) {
            Tape tape;
            Tape::Id loss = tape.input(nn::Matrix(1, 1));
            double mb_ratio = 0.0, mb_clip = 0.0, mb_ent = 0.0, mb_vloss = 0.0;

            for (int k = 0; k < cfg.minibatch; ++k) {
                const Transition& t = buffer.transitions[order[start + k]];
                double adv = advantages[order[start + k]];
                double ret = returns[order[start + k]];

                policy::PolicyNet::ForwardNodes fn = net.forward_nodes(tape, t.obs);
                Tape::Id lp_all = tape.log_softmax_masked(fn.q, t.obs.mask);
                Tape::Id lp = tape.pick(lp_all, t.action, 0);
                Tape::Id ratio = tape.exp(tape.add_const(lp, -t.logp));
                Tape::Id clipped = tape.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
                Tape::Id surr = tape.min(tape.scale(ratio, adv), tape.scale(clipped, adv));

                Tape::Id p_all = tape.exp(lp_all);
                Tape::Id ent = tape.scale(tape.sum(tape.mul(p_all, lp_all)), -1.0);

                Tape::Id verr = tape.add_const(fn.value, -ret);
                Tape::Id vloss = tape.square(verr);

                Tape::Id sample_loss = tape.add(
                    tape.add(tape.scale(surr, -1.0), tape.scale(vloss, cfg.value_coeff)),
                    tape.scale(ent, -cfg.entropy_coeff));
                loss = tape.add(loss, sample_loss);

                double rv = tape.value(ratio).at(0, 0);
                mb_ratio += rv;
                mb_clip += (rv < 1.0 - cfg.clip || rv > 1.0 + cfg.clip) ? 1.0 : 0.0;
                mb_ent += tape.value(ent).at(0, 0);
                mb_vloss += tape.value(vloss).at(0, 0);
            }

            loss = tape.scale(loss, 1.0 / cfg.minibatch);
            double lv = tape.value(loss).at(0, 0);
            if (!std::isfinite(lv)) {
                stats.aborted = true;
                stats.aborted_minibatch = mb_index;
                return stats;
            }
            opt.zero_grads();
            tape.backward(loss);
            opt.step(lr);

            sum_ratio += mb_ratio;
            sum_clip += mb_clip;
            sum_ent += mb_ent;
            sum_vloss += mb_vloss;
            samples += cfg.minibatch;
        }
    }

    stats.mean_ratio = sum_ratio / samples;
    stats.clip_fraction = sum_clip / samples;
    stats.entropy = sum_ent / samples;
    stats.value_loss = sum_vloss / samples;
    return stats;
}

TrainResult train(const TrainConfig& cfg, policy::PolicyNet& net) {
    TrainResult result;
    nn::AdamOptimizer opt(net.store().all());
    util::Rng shuffle_rng = util::Rng::derive(cfg.seed, 5000);

    long steps = 0;
    long episode_offset = 0;
    std::vector<long> milestones = {cfg.budget / 4, cfg.budget / 2, 3 * cfg.budget / 4};
    size_t next_milestone = 0;

    auto save_checkpoint = [&](const std::string& tag) {
        if (cfg.out_dir.empty()) return;
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream f(cfg.out_dir + "/checkpoint_" + tag + ".json");
        f << net.checkpoint().dump();
    };

    while (steps < cfg.budget) {
        RolloutBuffer buf = collect_rollouts(cfg.env, net, cfg.use_mask, cfg.ppo.batch,
                                             cfg.seed, episode_offset);
        episode_offset += buf.episodes;

        double frac = std::min(1.0, static_cast<double>(steps) / cfg.ppo.lr_horizon);
        double lr = cfg.ppo.lr_start + frac * (cfg.ppo.lr_end - cfg.ppo.lr_start);
        UpdateStats st = ppo_update(buf, net, opt, cfg.ppo, lr, shuffle_rng);
        steps += cfg.ppo.batch;

        result.curve.push_back({steps, buf.mean_fleet_reward, buf.mean_fulfillment,
                                st.entropy, st.clip_fraction});
        while (next_milestone < milestones.size() && steps >= milestones[next_milestone]) {
            save_checkpoint(std::to_string(milestones[next_milestone]));
            ++next_milestone;
        }
    }

    result.checkpoint = net.checkpoint();
    if (!cfg.out_dir.empty()) {
        save_checkpoint("final");
        std::ofstream f(cfg.out_dir + "/curve.csv");
        f << "active_timesteps,mean_fleet_reward,mean_fulfillment,entropy,clip_fraction\n";
        for (const auto& p : result.curve)
            f << p.active_timesteps << ',' << p.mean_fleet_reward << ','
              << p.mean_fulfillment << ',' << p.entropy << ',' << p.clip_fraction << "\n";
    }
    return result;
}

}  // namespace aam::train
