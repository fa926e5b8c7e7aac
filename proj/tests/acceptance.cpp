// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "aam/baselines/baselines.hpp"
#include "aam/harness/harness.hpp"
#include "aam/policy/policy.hpp"
#include "aam/train/train.hpp"

using namespace aam;
using obs::MetaType;
using obs::Relation;
using sim::Vec2;

namespace {

namespace fs = std::filesystem;

int g_failures = 0;
std::string g_workdir;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  (%s)\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
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

sim::WorldState scripted_world(std::vector<Vec2> depots, std::vector<Vec2> clients,
                               std::vector<std::pair<Vec2, int>> vehicles) {
    sim::WorldState w;
    w.rng = util::Rng(1);
    w.grid_size = 32;
    for (size_t i = 0; i < depots.size(); ++i) {
        sim::DepotState d;
        d.id = static_cast<int>(i);
        d.pos = depots[i];
        d.lambda = 0.01;
        d.alpha_bar = 1.5;
        w.depots.push_back(std::move(d));
    }
    w.clients = std::move(clients);
    for (size_t i = 0; i < vehicles.size(); ++i) {
        sim::VehicleState v;
        v.id = static_cast<int>(i);
        v.pos = vehicles[i].first;
        v.capacity = vehicles[i].second;
        v.prev_stop = v.next_stop = 0;
        w.vehicles.push_back(std::move(v));
    }
    return w;
}

void push_payload(sim::WorldState& w, int origin, int dest_node, int cap) {
    sim::PayloadRequest p;
    p.origin = origin;
    p.dest_node = dest_node;
    p.cap = cap;
    p.payoff = sim::payoff(w.depots[origin].pos, w.node_pos(dest_node), cap);
    p.uid = w.next_request_uid++;
    w.depots[origin].queue.push_back(p);
}

policy::Observation make_obs(const sim::WorldState& w, int ego, int k_v, int k_d,
                             bool use_mask = false) {
    auto nb = obs::observe(w, ego, k_v, k_d);
    policy::Observation ob;
    ob.hig = obs::build_hig(w, nb);
    ob.num_depots = static_cast<int>(w.depots.size());
    ob.mask = use_mask ? obs::rebalancing_mask(w, nb, w.vehicles[ego].capacity)
                       : std::vector<int>(w.depots.size(), 0);
    ob.mask = policy::effective_mask(ob.mask);
    return ob;
}

sim::WorldState busy_world(uint64_t seed) {
    sim::EpisodeConfig cfg;
    cfg.seed = seed;
    for (int ep = 0; ep < 20; ++ep) {
        sim::WorldState w = sim::make_world(cfg, ep);
        if (w.queued() > 0) return w;
    }
    return sim::make_world(cfg);
}

// ---------------------------------------------------------------- criterion 1
void criterion1() {
    double t0 = now_seconds();
    util::Rng rng(77);
    auto rand_m = [&](int r, int c) {
        nn::Matrix m(r, c);
        for (double& x : m.d) x = rng.uniform(-1.5, 1.5);
        return m;
    };
    nn::Matrix b33 = rand_m(3, 3), b34 = rand_m(3, 4), b36 = rand_m(3, 6);
    nn::Matrix b63 = rand_m(6, 3), b13 = rand_m(1, 3), b43 = rand_m(4, 3);
    nn::Matrix b23 = rand_m(2, 3), b31 = rand_m(3, 1), b41 = rand_m(4, 1);

    using Build = std::function<nn::Tape::Id(nn::Tape&, nn::Tape::Id)>;
    std::vector<std::pair<Build, std::pair<int, int>>> ops = {
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.matmul(p, t.input(b34))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.matmul(t.transpose(p), t.input(b33))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(t.add(p, t.input(b33)), t.input(b33))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(t.sub(t.input(b33), p), t.input(b33))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(p, p)); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.min(p, t.input(b33))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.add_const(t.scale(p, 1.7), 0.3)); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(t.concat_cols({p, p}), t.input(b36))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(t.concat_rows({p, p}), t.input(b63))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(t.mean_rows(p), t.input(b13))); }, {4, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(t.gather_rows(p, {2, 0, 2, 1}), t.input(b43))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.mul(t.segment_sum(p, {0, 1, 0, 1}, 2), t.input(b23))); }, {4, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.scale_rows(t.input(b33), t.matmul(p, t.input(b31)))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.leaky_relu(p, 0.2)); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.exp(p)); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.log(t.add_const(t.mul(p, p), 0.5))); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) {
             auto col = t.matmul(p, t.input(nn::Matrix::col({1.0, 0.5, -0.5})));
             return t.sum(t.mul(t.segment_softmax(col, {0, 0, 1, 1}), t.input(b41)));
         }, {4, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) {
             auto col = t.matmul(p, t.input(nn::Matrix::col({1.0, 0.5, -0.5})));
             auto lp = t.log_softmax_masked(col, {0, 1, 0, 0});
             return t.add(t.pick(lp, 0, 0), t.pick(lp, 3, 0));
         }, {4, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.sum(t.clamp(p, -0.4, 0.6)); }, {3, 3}},
        {[&](nn::Tape& t, nn::Tape::Id p) { return t.pick(t.mul(p, p), 1, 2); }, {3, 3}},
    };

    double worst_op = 0.0;
    for (auto& [build, shape] : ops) {
        util::Rng prng(1234);
        nn::ParamStore store;
        nn::Parameter& p = store.create("p", shape.first, shape.second);
        for (double& x : p.value.d) x = prng.uniform(-1.0, 1.0);
        auto f = [&, &build = build] {
            nn::Tape t;
            auto loss = build(t, t.param(p));
            t.backward(loss);
            return t.value(loss).at(0, 0);
        };
        worst_op = std::max(worst_op, nn::grad_check(f, {&p}));
    }

    // Full encoder-decoder loss on a small instance; finite differences over a
    // representative cross-section of parameters (full FD is hours of runtime
    // for the same verdict).
    policy::PolicyNet net = policy::PolicyNet::make(policy::Arch::EncDec, 11);
    sim::WorldState w = scripted_world({{1, 1}, {6, 3}, {12, 20}}, {{10, 10}},
                                       {{{2, 2}, 2}, {{5, 5}, 1}});
    push_payload(w, 0, 3, 1);
    push_payload(w, 1, 3, 2);
    auto ob = make_obs(w, 0, 2, 3, true);
    auto loss_fn = [&] {
        nn::Tape tape;
        auto fn = net.forward_nodes(tape, ob);
        auto lp = tape.log_softmax_masked(fn.q, ob.mask);
        auto loss = tape.add(tape.pick(lp, 1, 0), tape.mul(fn.value, fn.value));
        tape.backward(loss);
        return tape.value(loss).at(0, 0);
    };
    std::vector<nn::Parameter*> subset = {
        &net.store().get("enc1.visits.h0.att"),
        &net.store().get("enc1.has.h0.w_src"),
        &net.store().get("enc2.communicates.h3.w_dst"),
        &net.store().get("enc3.assigned_to.h0.att"),
        &net.store().get("dec1.d_near_d.h0.att"),
        &net.store().get("dec1.g_contributes_val.h2.w_src"),
        &net.store().get("dec2.d_near_d.h0.att"),
        &net.store().get("fc_val.b1"),
        &net.store().get("fc_val.w3"),
        &net.store().get("fc_val.b3"),
    };
    double e2e = nn::grad_check(loss_fn, subset);

    double dt = now_seconds() - t0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "op grad err %.2e < 1e-6, end-to-end %.2e < 1e-4, %.1fs < 60s",
                  worst_op, e2e, dt);
    report(1, worst_op < 1e-6 && e2e < 1e-4 && dt < 60.0, buf);
}

// ---------------------------------------------------------------- criterion 2
void criterion2() {
    policy::PolicyNet net = policy::PolicyNet::make(policy::Arch::EncDec, 1);
    util::Rng rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        sim::WorldState w = busy_world(1000 + trial);
        int ego = rng.uniform_int(static_cast<int>(w.vehicles.size()));
        auto ob = make_obs(w, ego, 3, 4, false);
        nn::Tape tape;
        std::vector<policy::AttnRecord> attn;
        net.forward_nodes(tape, ob, &attn);
        for (const auto& rec : attn) {
            std::map<int, double> per_dst;
            for (size_t e = 0; e < rec.beta.size(); ++e) per_dst[rec.dst[e]] += rec.beta[e];
            for (const auto& [dst, s] : per_dst) worst = std::max(worst, std::abs(s - 1.0));
        }
    }
    bool beta_ok = worst < 1e-9;

    // Masked depot: probability exactly 0.
    sim::WorldState wm = scripted_world({{0, 0}, {1, 0}, {30, 30}}, {{2, 2}}, {{{0, 0}, 1}});
    push_payload(wm, 0, 3, 3);
    push_payload(wm, 1, 3, 1);
    auto [outm, obm] = policy::policy_forward(wm, 0, net, 1, 2, true);
    bool mask_ok = outm.probs[0] == 0.0 && outm.probs[1] > 0.0;

    // Exact permutation equivariance of the depot scores.
    sim::WorldState w = scripted_world({{1, 1}, {6, 3}, {12, 20}}, {{10, 10}},
                                       {{{2, 2}, 2}, {{5, 5}, 1}});
    push_payload(w, 0, 3, 1);
    push_payload(w, 1, 3, 2);
    auto ob = make_obs(w, 0, 2, 3);
    std::vector<int> perm = {1, 2, 0};
    sim::WorldState w2 = w;
    for (int i = 0; i < 3; ++i) {
        w2.depots[perm[i]] = w.depots[i];
        w2.depots[perm[i]].id = perm[i];
        for (auto& p : w2.depots[perm[i]].queue) {
            p.origin = perm[i];
            if (p.dest_node < 3) p.dest_node = perm[p.dest_node];
        }
    }
    for (auto& v : w2.vehicles) {
        v.prev_stop = perm[v.prev_stop];
        v.next_stop = perm[v.next_stop];
    }
    auto ob2 = make_obs(w2, 0, 2, 3);
    auto o1 = net.forward(ob);
    auto o2 = net.forward(ob2);
    bool equiv_ok = true;
    for (int i = 0; i < 3; ++i)
        equiv_ok = equiv_ok && o1.q[i] == o2.q[perm[i]] && o1.probs[i] == o2.probs[perm[i]];

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "max |sum(beta)-1| = %.2e over 100 graphs; masked prob %s; "
                  "equivariance %s", worst, mask_ok ? "exactly 0" : "NONZERO",
                  equiv_ok ? "exact" : "broken");
    report(2, beta_ok && mask_ok && equiv_ok, buf);
}

// ---------------------------------------------------------------- criterion 3
void criterion3() {
    double t0 = now_seconds();
    bool ok = true;

    // Worked (6,4,2,3,2) instance.
    sim::WorldState ww = scripted_world({{0, 0}, {2, 0}, {30, 30}}, {{1, 5}},
                                        {{{0, 1}, 2}, {{1, 0}, 3}});
    push_payload(ww, 0, 3, 1);
    push_payload(ww, 1, 3, 3);
    auto nbw = obs::observe(ww, 0, 2, 2);
    auto gw = obs::build_hig(ww, nbw);
    ok = ok && gw.rel(Relation::Visits).size() == 6 &&
         gw.rel(Relation::Communicates).size() == 4 && gw.rel(Relation::Has).size() == 2 &&
         gw.rel(Relation::AssignedTo).size() == 3 && gw.rel(Relation::Depends).size() == 2;

    util::Rng rng(99);
    for (int trial = 0; trial < 200 && ok; ++trial) {
        sim::EpisodeConfig cfg;
        cfg.num_depots = 3 + rng.uniform_int(8);
        cfg.num_clients = 2 + rng.uniform_int(10);
        cfg.fleet = {1 + rng.uniform_int(2), rng.uniform_int(2), 1 + rng.uniform_int(2)};
        cfg.seed = rng.next();
        sim::WorldState w = sim::make_world(cfg);
        int nv = static_cast<int>(w.vehicles.size());
        auto nb = obs::observe(w, rng.uniform_int(nv), 1 + rng.uniform_int(nv),
                               1 + rng.uniform_int(cfg.num_depots));
        auto g = obs::build_hig(w, nb);
        g.validate();
        int V = static_cast<int>(nb.vehicles.size());
        int P = static_cast<int>(nb.payloads.size());
        int assigned = 0;
        for (auto [did, qi] : nb.payloads)
            for (int vid : nb.vehicles)
                if (w.depots[did].queue[qi].cap <= w.vehicles[vid].capacity) ++assigned;
        ok = ok && static_cast<int>(g.rel(Relation::Visits).size()) == V * cfg.num_depots &&
             static_cast<int>(g.rel(Relation::Communicates).size()) == V * V &&
             static_cast<int>(g.rel(Relation::Has).size()) == P &&
             static_cast<int>(g.rel(Relation::Depends).size()) == P &&
             static_cast<int>(g.rel(Relation::AssignedTo).size()) == assigned;
    }

    for (int nd : {1, 3, 10}) {
        auto g = obs::build_hdg(nd);
        ok = ok && static_cast<int>(g.rel(Relation::GContributesVal).size()) == 1 &&
             static_cast<int>(g.rel(Relation::DContributesG).size()) == nd &&
             static_cast<int>(g.rel(Relation::DContributesVal).size()) == nd &&
             static_cast<int>(g.rel(Relation::DNearD).size()) == nd * nd;
    }

    double dt = now_seconds() - t0;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "worked example + 200 random recounts, %.1fs < 60s", dt);
    report(3, ok && dt < 60.0, buf);
}

// ---------------------------------------------------------------- criterion 4
void criterion4() {
    // Vertex via 3-point parabola fit (payoff is quadratic in distance).
    auto f = [](double d) { return sim::payoff({0, 0}, {d, 0}, 1); };
    double f0 = f(0), f1 = f(10), f2 = f(20);
    double vertex = (f0 * (100 - 400) + f1 * 400 + f2 * -100) /
                    (2.0 * (f0 * -10 + f1 * 20 + f2 * -10));
    bool vertex_ok = std::abs(vertex - (-sim::kQ2 / (2.0 * sim::kQ1))) < 1e-9 &&
                     std::abs(std::round(vertex * 100) / 100 - 29.94) < 1e-12;

    sim::PayloadRequest p;
    p.payoff = sim::payoff({0, 0}, {10, 0}, 1);
    bool cases_ok = std::abs(sim::net_reward({0, 0}, {5, 0}, p) - 9.33) < 1e-9 &&
                    sim::net_reward({5, 0}, {5, 0}, std::nullopt) == 0.0 &&
                    sim::net_reward({0, 0}, {5, 0}, std::nullopt) == -5.0;

    util::Rng rng(123);
    bool fifo_ok = true;
    for (int trial = 0; trial < 1000 && fifo_ok; ++trial) {
        std::deque<sim::PayloadRequest> q;
        int n = rng.uniform_int(6);
        for (int i = 0; i < n; ++i) {
            sim::PayloadRequest r;
            r.cap = 1 + rng.uniform_int(3);
            r.uid = i;
            q.push_back(r);
        }
        int vcap = 1 + rng.uniform_int(3);
        auto before = q;
        auto got = sim::assign_payload(vcap, q);
        int expect = -1;
        for (size_t i = 0; i < before.size(); ++i)
            if (before[i].cap <= vcap) { expect = static_cast<int>(i); break; }
        if (expect < 0)
            fifo_ok = !got.has_value();
        else
            fifo_ok = got.has_value() && got->uid == before[expect].uid;
    }

    char buf[120];
    std::snprintf(buf, sizeof(buf), "vertex %.8f; cases 9.33/0/-5; FIFO x1000", vertex);
    report(4, vertex_ok && cases_ok && fifo_ok, buf);
}

// ---------------------------------------------------------------- criterion 5
void criterion5() {
    double t0 = now_seconds();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kBig = 1e9;
    util::Rng rng(55);
    bool ok = true;
    for (int trial = 0; trial < 500 && ok; ++trial) {
        int rows = 1 + rng.uniform_int(6), cols = 1 + rng.uniform_int(6);
        std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
        for (auto& r : cost)
            for (auto& c : r) c = rng.uniform01() < 0.25 ? kInf : rng.uniform(-10.0, 10.0);
        auto sol = baselines::lap_solve(cost);

        int n = std::max(rows, cols);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = kInf;
        do {
            double total = 0.0;
            for (int i = 0; i < rows; ++i) {
                if (perm[i] >= cols) continue;
                total += std::isinf(cost[i][perm[i]]) ? kBig : cost[i][perm[i]];
            }
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));

        long forced = std::lround(best / kBig);
        double bf_finite = best - forced * kBig;
        double lap_total = 0.0;
        for (int i = 0; i < rows; ++i)
            if (sol[i] >= 0) {
                ok = ok && !std::isinf(cost[i][sol[i]]);
                lap_total += cost[i][sol[i]];
            }
        ok = ok && std::abs(lap_total - bf_finite) < 1e-5;
    }
    double dt = now_seconds() - t0;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "500 matrices vs enumeration, %.1fs < 60s", dt);
    report(5, ok && dt < 60.0, buf);
}

// ------------------------------------------------------- criteria 6 through 9
harness::RunSpec base_spec() {
    harness::RunSpec s;
    s.mode = "oneshot";
    s.rates = "high";
    s.episodes = 20;
    s.fleet = {2, 2, 2};
    s.depots = 5;
    s.clients = 5;
    s.k_v = 5;
    s.k_d = 5;
    s.seed = 100;
    return s;
}

std::string save_fresh_checkpoint(const std::string& arch, uint64_t seed) {
    policy::PolicyNet net = policy::PolicyNet::make(policy::arch_from_string(arch), seed);
    std::string path = g_workdir + "/init_" + arch + ".json";
    std::ofstream f(path);
    f << net.checkpoint().dump();
    return path;
}

void criterion6() {
    bool ok = true;
    std::string detail;
    std::map<std::string, std::string> ckpt = {
        {"encdec", save_fresh_checkpoint("encdec", 41)},
        {"encdec-masked", save_fresh_checkpoint("encdec", 41)},
        {"hetgat", save_fresh_checkpoint("hetgat", 42)},
        {"hetgcn", save_fresh_checkpoint("hetgcn", 43)},
        {"random", ""},
        {"odla", ""},
    };
    ckpt["encdec-masked"] = ckpt["encdec"];
    for (const auto& [selector, path] : ckpt) {
        harness::RunSpec s = base_spec();
        s.policy = selector;
        s.checkpoint = path;
        s.episodes = 5;
        auto a = harness::cmd_eval(s, false);
        auto b = harness::cmd_eval(s, false);
        if (a.metrics_csv != b.metrics_csv) {
            ok = false;
            detail += selector + " differs; ";
        }
    }
    report(6, ok, ok ? "byte-identical metrics for all 6 selectors" : detail);
}

struct TrainedSeed {
    std::string checkpoint;
    uint64_t seed;
};
std::vector<TrainedSeed> g_trained;

void train_seeds() {
    for (uint64_t s : {0ull, 1ull, 2ull}) {
        harness::RunSpec spec = base_spec();
        spec.policy = "encdec";
        spec.seed = 100 + s;
        spec.budget = 20000;
        spec.out_dir = g_workdir + "/train_s" + std::to_string(s);
        std::printf("  [training encdec seed %llu, budget %ld...]\n",
                    static_cast<unsigned long long>(spec.seed), spec.budget);
        std::fflush(stdout);
        harness::cmd_train(spec);
        g_trained.push_back({spec.out_dir + "/checkpoint_final.json", spec.seed});
    }
}

std::pair<std::vector<double>, std::vector<double>> eval_policy(
    const std::string& selector, const std::string& checkpoint, uint64_t env_seed,
    int k_d = 5) {
    harness::RunSpec s = base_spec();
    s.policy = selector;
    s.checkpoint = checkpoint;
    s.seed = env_seed;
    s.k_d = k_d;
    s.greedy = true;  // decentralized execution: argmax actions (random ignores this)
    auto r = harness::cmd_eval(s, false);
    std::vector<double> rew, ful;
    for (const auto& m : r.episodes) {
        rew.push_back(m.fleet_reward);
        ful.push_back(m.fulfillment_ratio);
    }
    return {rew, ful};
}

void criterion7() {
    train_seeds();
    std::vector<double> enc_means, msk_means, rnd_means;
    for (const auto& ts : g_trained) {
        enc_means.push_back(mean_of(eval_policy("encdec", ts.checkpoint, ts.seed).first));
        msk_means.push_back(
            mean_of(eval_policy("encdec-masked", ts.checkpoint, ts.seed).first));
        rnd_means.push_back(mean_of(eval_policy("random", "", ts.seed).first));
    }
    double enc = mean_of(enc_means), msk = mean_of(msk_means), rnd = mean_of(rnd_means);
    bool beats_random = enc >= rnd + 0.5 * std::abs(rnd);
    bool masked_holds = msk >= enc - 0.05 * std::abs(enc);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "encdec %.1f vs random %.1f (need >= %.1f); masked %.1f >= %.1f",
                  enc, rnd, rnd + 0.5 * std::abs(rnd), msk, enc - 0.05 * std::abs(enc));
    report(7, beats_random && masked_holds, buf);
}

void criterion8() {
    bool ok = true;
    std::string detail;
    for (const auto& ts : g_trained) {
        auto [orew, oful] = eval_policy("odla", "", ts.seed);
        struct Entry { const char* name; std::string ck; };
        std::vector<Entry> policies = {{"encdec", ts.checkpoint},
                                       {"encdec-masked", ts.checkpoint},
                                       {"random", ""}};
        // Noise bound combines both sides' episode spread: a greedy policy can
        // hit fulfillment 1.0 with zero variance, which must not fail the
        // oracle when its own episodes carry the spread.
        auto noise = [](const std::vector<double>& a, const std::vector<double>& b) {
            return 2.0 * std::sqrt(std_of(a) * std_of(a) + std_of(b) * std_of(b));
        };
        double best_learned = -1e18;
        std::vector<double> best_rew;
        for (const auto& e : policies) {
            auto [rew, ful] = eval_policy(e.name, e.ck, ts.seed);
            if (mean_of(oful) < mean_of(ful) - noise(ful, oful)) {
                ok = false;
                detail += std::string(e.name) + " fulfillment exceeds odla; ";
            }
            if (std::string(e.name) != "random" && mean_of(rew) > best_learned) {
                best_learned = mean_of(rew);
                best_rew = rew;
            }
        }
        if (mean_of(orew) < best_learned - noise(best_rew, orew)) {
            ok = false;
            detail += "learned fleet reward exceeds odla; ";
        }
    }
    report(8, ok, ok ? "odla dominates fulfillment and fleet reward on all seeds" : detail);
}

void criterion9() {
    std::vector<double> full, half;
    for (const auto& ts : g_trained) {
        full.push_back(
            mean_of(eval_policy("encdec-masked", ts.checkpoint, ts.seed, 5).first));
        half.push_back(
            mean_of(eval_policy("encdec-masked", ts.checkpoint, ts.seed, 2).first));
    }
    double f = mean_of(full), h = mean_of(half);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "reward at 100%% observability %.1f >= %.1f at 40%%",
                  f, h);
    report(9, f >= h, buf);
}

}  // namespace

int main() {
    g_workdir = (fs::temp_directory_path() / "aam_acceptance").string();
    fs::create_directories(g_workdir);

    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();

    if (g_failures) std::printf("%d criteria FAILED\n", g_failures);
    else std::printf("all 9 criteria passed\n");
    return g_failures == 0 ? 0 : 1;
}
