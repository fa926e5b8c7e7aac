#include "aam/sim/world.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>

namespace aam::sim {

namespace {

void log_event(WorldState& w, const char* kind, int vehicle, int depot,
               const PayloadRequest* p, double reward) {
    if (!w.logging) return;
    std::ostringstream os;
    os << w.clock << '\t' << kind << '\t' << vehicle << '\t' << depot << '\t';
    if (p)
        os << p->origin << ',' << p->dest_node << ',' << p->cap << ',' << p->payoff;
    else
        os << '-';
    os << '\t' << reward;
    w.event_log.push_back(os.str());
}

long travel_ticks(const Vec2& a, const Vec2& b) {
    return static_cast<long>(std::ceil(dist(a, b)));  // speed: 1 cell per tick
}

void credit(WorldState& w, VehicleState& v, double r, bool fulfilled, StepResult& res) {
    w.fleet_reward += r;
    w.reward_by_class[v.capacity - 1] += r;
    v.cumulative_reward += r;
    if (fulfilled) ++w.requests_fulfilled;
    res.credits.push_back({v.id, r, fulfilled});
}

}  // namespace

double payoff(const Vec2& origin, const Vec2& dest, int cap) {
    double d = dist(origin, dest);
    return kQ1 * d * d + kQ2 * d + kQ3 * cap;
}

double net_reward(const Vec2& vehicle_pos, const Vec2& depot_pos,
                  const std::optional<PayloadRequest>& assigned) {
    if (assigned) return assigned->payoff - kQ4 * dist(vehicle_pos, depot_pos);
    if (dist(vehicle_pos, depot_pos) < 1e-9) return 0.0;
    return kInvalidDepotPenalty;
}

std::optional<PayloadRequest> assign_payload(int vehicle_capacity,
                                             std::deque<PayloadRequest>& queue) {
    for (auto it = queue.begin(); it != queue.end(); ++it) {
        if (it->cap <= vehicle_capacity) {
            PayloadRequest p = *it;
            queue.erase(it);
            return p;
        }
    }
    return std::nullopt;
}

std::vector<PayloadRequest> populate_depot(WorldState& w, DepotState& d) {
    std::vector<PayloadRequest> accepted;
    int k = w.rng.poisson(d.lambda * kArrivalInterval);
    int nd = static_cast<int>(w.depots.size());

    // Destination candidates: every depot and client except the origin,
    // ordered by distance (ties by node id). Nearer destinations are more
    // probable via a folded-normal index draw.
    std::vector<int> candidates;
    for (int n = 0; n < w.num_nodes(); ++n)
        if (n != d.id) candidates.push_back(n);
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        double da = dist(w.node_pos(a), d.pos), db = dist(w.node_pos(b), d.pos);
        if (da != db) return da < db;
        return a < b;
    });

    for (int i = 0; i < k; ++i) {
        PayloadRequest p;
        p.origin = d.id;
        int cap = static_cast<int>(std::lround(w.rng.normal(d.alpha_bar, 0.1)));
        p.cap = std::clamp(cap, 1, 3);
        int m = static_cast<int>(candidates.size());
        int idx = static_cast<int>(std::lround(std::abs(w.rng.normal(0.0, m / 3.0))));
        p.dest_node = candidates[std::clamp(idx, 0, m - 1)];
        p.payoff = payoff(d.pos, w.node_pos(p.dest_node), p.cap);
        p.arrival_tick = w.clock;
        p.uid = w.next_request_uid++;
        ++w.requests_arrived;
        if (static_cast<int>(d.queue.size()) >= kMaxQueueLength) {
            ++w.requests_dropped;
            log_event(w, "DROP_REQUEST", -1, d.id, &p, 0.0);
        } else {
            d.queue.push_back(p);
            accepted.push_back(p);
            log_event(w, "ARRIVE", -1, d.id, &p, 0.0);
        }
        (void)nd;
    }
    return accepted;
}

void populate_all(WorldState& w) {
    for (auto& d : w.depots) populate_depot(w, d);
}

WorldState make_world(const EpisodeConfig& cfg, uint64_t episode_index) {
    WorldState w;
    w.grid_size = cfg.grid_size;
    w.mode = cfg.mode;
    w.duration_ticks = cfg.duration_ticks;

    // Environment layout comes from the base seed only so all episodes of an
    // evaluation share one mobility network; arrivals use a per-episode stream.
    util::Rng env_rng = util::Rng::derive(cfg.seed, 0);
    w.rng = util::Rng::derive(cfg.seed, 1 + episode_index);

    int half = cfg.grid_size / 2;
    std::vector<Vec2> used;
    auto place = [&](int index) {
        // Stratified-uniform per quadrant, unique integer cells.
        int q = index % 4;
        for (;;) {
            double x = (q % 2) * half + env_rng.uniform_int(half);
            double y = (q / 2) * half + env_rng.uniform_int(half);
            bool clash = false;
            for (const auto& u : used)
                if (u.x == x && u.y == y) { clash = true; break; }
            if (!clash) {
                used.push_back({x, y});
                return Vec2{x, y};
            }
        }
    };

    for (int i = 0; i < cfg.num_depots; ++i) {
        DepotState d;
        d.id = i;
        d.pos = place(i);
        d.lambda = cfg.rate_set[env_rng.uniform_int(static_cast<int>(cfg.rate_set.size()))];
        d.alpha_bar = env_rng.uniform(1.0, 3.0);
        w.depots.push_back(std::move(d));
    }
    for (int i = 0; i < cfg.num_clients; ++i) w.clients.push_back(place(cfg.num_depots + i));

    int vid = 0;
    for (int cls = 0; cls < 3; ++cls) {
        for (int i = 0; i < cfg.fleet[cls]; ++i) {
            VehicleState v;
            v.id = vid++;
            v.capacity = cls + 1;
            int d = env_rng.uniform_int(cfg.num_depots);
            v.pos = w.depots[d].pos;
            v.prev_stop = v.next_stop = d;
            w.vehicles.push_back(std::move(v));
        }
    }

    populate_all(w);  // initial population (both regimes)
    return w;
}

StepResult step_world(WorldState& w) {
    StepResult res;
    ++w.clock;

    for (auto& v : w.vehicles) {
        if (v.stage == Stage::Idle) continue;

        // Constant-velocity straight segment toward the current target.
        double d = dist(v.pos, v.target);
        if (d > 1.0) {
            v.pos.x += (v.target.x - v.pos.x) / d;
            v.pos.y += (v.target.y - v.pos.y) / d;
        } else {
            v.pos = v.target;
        }

        if (v.arrival_clock != w.clock) continue;
        v.pos = v.target;

        if (v.stage == Stage::ToDepot) {
            if (v.committed) {
                // Pickup; continue to the destination.
                const PayloadRequest& p = *v.committed;
                log_event(w, "PICKUP", v.id, p.origin, &p, 0.0);
                v.prev_stop = p.origin;
                v.next_stop = p.dest_node;
                v.target = w.node_pos(p.dest_node);
                v.arrival_clock = w.clock + std::max<long>(1, travel_ticks(v.pos, v.target));
                v.stage = Stage::ToDest;
            } else {
                // Empty depot visit completes; reward 0 or -5.
                log_event(w, "PENALTY", v.id, v.next_stop, nullptr, v.pending_reward);
                credit(w, v, v.pending_reward, false, res);
                v.prev_stop = v.next_stop;
                v.stage = Stage::Idle;
                v.available = true;
                v.arrival_clock = -1;
                res.active.push_back(v.id);
            }
        } else {  // ToDest
            const PayloadRequest& p = *v.committed;
            log_event(w, "DROPOFF", v.id, p.origin, &p, v.pending_reward);
            credit(w, v, v.pending_reward, true, res);
            v.prev_stop = p.dest_node;
            v.next_stop = p.dest_node;
            v.committed.reset();
            v.stage = Stage::Idle;
            v.available = true;
            v.arrival_clock = -1;
            res.active.push_back(v.id);
        }
    }

    if (w.mode == Mode::OnDemand && w.clock % kArrivalInterval == 0 &&
        w.clock < w.duration_ticks) {
        populate_all(w);
        res.populated = true;
    }
    return res;
}

double commit_vehicle(WorldState& w, int vehicle_id, int depot_id,
                      std::optional<PayloadRequest> forced) {
    VehicleState& v = w.vehicles[vehicle_id];
    if (!v.available) throw std::logic_error("commit_vehicle: vehicle not available");
    DepotState& d = w.depots[depot_id];

    std::optional<PayloadRequest> assigned;
    if (forced) {
        for (auto it = d.queue.begin(); it != d.queue.end(); ++it) {
            if (it->uid == forced->uid) {
                assigned = *it;
                d.queue.erase(it);
                break;
            }
        }
        if (!assigned) throw std::logic_error("commit_vehicle: forced request not in queue");
    } else {
        assigned = assign_payload(v.capacity, d.queue);
    }

    double reward = net_reward(v.pos, d.pos, assigned);
    long tau1 = travel_ticks(v.pos, d.pos);

    v.available = false;
    v.pending_reward = reward;
    v.next_stop = depot_id;
    log_event(w, "DECIDE", vehicle_id, depot_id, assigned ? &*assigned : nullptr, 0.0);

    if (assigned) {
        v.committed = assigned;
        if (tau1 == 0) {
            // Already at the depot: pick up now, travel to the destination.
            log_event(w, "PICKUP", v.id, depot_id, &*assigned, 0.0);
            v.prev_stop = depot_id;
            v.next_stop = assigned->dest_node;
            v.target = w.node_pos(assigned->dest_node);
            v.arrival_clock = w.clock + std::max<long>(1, travel_ticks(v.pos, v.target));
            v.stage = Stage::ToDest;
        } else {
            v.target = d.pos;
            v.arrival_clock = w.clock + tau1;
            v.stage = Stage::ToDepot;
        }
    } else {
        v.target = d.pos;
        v.arrival_clock = w.clock + std::max<long>(1, tau1);
        v.stage = Stage::ToDepot;
    }
    return reward;
}

EpisodeMetrics metrics_from(const WorldState& w) {
    EpisodeMetrics m;
    m.fleet_reward = w.fleet_reward;
    m.arrived = w.requests_arrived;
    m.fulfilled = w.requests_fulfilled;
    m.dropped = w.requests_dropped;
    m.fulfillment_ratio =
        w.requests_arrived == 0 ? 1.0
                                : static_cast<double>(w.requests_fulfilled) / w.requests_arrived;
    m.rewards_by_class = w.reward_by_class;
    return m;
}

EpisodeMetrics run_episode(WorldState& w, const EpisodeConfig& cfg, const DecideFn& decide,
                           const EpisodeHooks* hooks) {
    auto act = [&](int vid) {
        VehicleState& v = w.vehicles[vid];
        if (v.decisions >= cfg.max_decisions) return;
        Decision dec = decide(w, vid);
        ++v.decisions;
        double r = commit_vehicle(w, vid, dec.depot);
        if (hooks && hooks->on_decision) hooks->on_decision(w, vid, dec, r);
    };

    // Availability at t=0 counts as a 0->1 transition: everyone decides.
    for (const auto& v : w.vehicles)
        if (v.available) act(v.id);

    while (w.clock < cfg.duration_ticks) {
        StepResult res = step_world(w);
        if (hooks && hooks->on_credit)
            for (const auto& c : res.credits) hooks->on_credit(c.vehicle, c.reward);
        std::sort(res.active.begin(), res.active.end());
        for (int vid : res.active) act(vid);
        if (hooks && hooks->on_step) hooks->on_step(w);
    }
    return metrics_from(w);
}

std::string render_world(const WorldState& w) {
    int n = w.grid_size;
    std::vector<std::string> grid(n, std::string(n, '.'));
    auto put = [&](const Vec2& p, char c) {
        int x = std::clamp(static_cast<int>(std::lround(p.x)), 0, n - 1);
        int y = std::clamp(static_cast<int>(std::lround(p.y)), 0, n - 1);
        grid[y][x] = c;
    };
    for (const auto& c : w.clients) put(c, 'c');
    for (const auto& d : w.depots)
        put(d.pos, d.queue.empty() ? 'D' : static_cast<char>('0' + d.queue.size()));
    for (const auto& v : w.vehicles) put(v.pos, static_cast<char>('A' + (v.id % 26)));

    std::ostringstream os;
    os << "t=" << w.clock << " fulfilled=" << w.requests_fulfilled
       << " fleet_reward=" << w.fleet_reward << "\n";
    for (int y = n - 1; y >= 0; --y) os << grid[y] << "\n";
    return os.str();
}

}  // namespace aam::sim
