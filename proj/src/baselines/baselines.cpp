#include "aam/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace aam::baselines {

namespace {

// Large finite stand-in for +inf during the square solve; matches against it
// are discarded afterwards.
constexpr double kBig = 1e9;

// JV-style O(n^3) Hungarian on a square matrix; returns row -> col.
std::vector<int> hungarian_square(const std::vector<std::vector<double>>& cost) {
    int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> rowsol(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j]) rowsol[p[j] - 1] = j - 1;
    return rowsol;
}

}  // namespace

std::vector<int> lap_solve(const std::vector<std::vector<double>>& cost) {
    int rows = static_cast<int>(cost.size());
    int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
    if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);

    // Pad to square; dummy entries are 0 so they never disturb the optimum
    // over the real pairs.
    int n = std::max(rows, cols);
    std::vector<std::vector<double>> sq(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            sq[i][j] = std::isinf(cost[i][j]) ? kBig : cost[i][j];

    std::vector<int> sol = hungarian_square(sq);
    std::vector<int> out(rows, -1);
    for (int i = 0; i < rows; ++i) {
        int j = sol[i];
        if (j >= 0 && j < cols && !std::isinf(cost[i][j])) out[i] = j;
    }
    return out;
}

std::vector<OdlaChoice> odla_step(const sim::WorldState& w,
                                  std::vector<std::string>* matrix_dump) {
    std::vector<int> avail;
    for (const auto& v : w.vehicles)
        if (v.available) avail.push_back(v.id);

    std::vector<std::pair<int, int>> requests;  // (depot id, queue index)
    for (const auto& d : w.depots)
        for (size_t qi = 0; qi < d.queue.size(); ++qi)
            requests.emplace_back(d.id, static_cast<int>(qi));

    if (avail.empty() || requests.empty()) return {};

    std::vector<std::vector<double>> cost(avail.size(),
                                          std::vector<double>(requests.size(), kInfCost));
    for (size_t i = 0; i < avail.size(); ++i) {
        const auto& v = w.vehicles[avail[i]];
        for (size_t j = 0; j < requests.size(); ++j) {
            const auto& d = w.depots[requests[j].first];
            const auto& p = d.queue[requests[j].second];
            if (p.cap > v.capacity) continue;  // infeasible stays +inf
            cost[i][j] = -(p.payoff - sim::kQ4 * sim::dist(v.pos, d.pos));
        }
    }

    std::vector<int> sol = lap_solve(cost);

    if (matrix_dump) {
        std::ostringstream os;
        os << "t=" << w.clock;
        for (size_t i = 0; i < avail.size(); ++i) {
            os << "\n" << avail[i];
            for (size_t j = 0; j < requests.size(); ++j) os << "\t" << cost[i][j];
            if (sol[i] >= 0) os << "\t-> " << sol[i];
        }
        matrix_dump->push_back(os.str());
    }

    std::vector<OdlaChoice> choices;
    for (size_t i = 0; i < avail.size(); ++i) {
        if (sol[i] < 0) continue;
        OdlaChoice c;
        c.vehicle = avail[i];
        c.depot = requests[sol[i]].first;
        c.request = w.depots[c.depot].queue[requests[sol[i]].second];
        choices.push_back(c);
    }
    return choices;
}

sim::EpisodeMetrics run_episode_odla(sim::WorldState& w, const sim::EpisodeConfig& cfg,
                                     std::vector<std::string>* matrix_dump) {
    auto solve_and_commit = [&] {
        for (const auto& c : odla_step(w, matrix_dump))
            sim::commit_vehicle(w, c.vehicle, c.depot, c.request);
    };
    solve_and_commit();
    while (w.clock < cfg.duration_ticks) {
        sim::StepResult res = sim::step_world(w);
        if (!res.active.empty() || res.populated) solve_and_commit();
    }
    return sim::metrics_from(w);
}

int random_policy(const sim::WorldState& w, util::Rng& rng) {
    return rng.uniform_int(static_cast<int>(w.depots.size()));
}

}  // namespace aam::baselines
