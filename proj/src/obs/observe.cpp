#include "aam/obs/observe.hpp"

#include <algorithm>
#include <stdexcept>

namespace aam::obs {

void HeteroGraph::sort_edges() {
    for (auto& e : edges)
        std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second < b.second;
            return a.first < b.first;
        });
}

void HeteroGraph::validate() const {
    for (int r = 0; r < kNumRelations; ++r) {
        const auto& info = relation_info(static_cast<Relation>(r));
        for (const auto& [s, d] : edges[r]) {
            if (s < 0 || s >= nodes(info.src) || d < 0 || d >= nodes(info.dst))
                throw std::out_of_range("HeteroGraph: dangling edge endpoint");
        }
    }
}

nlohmann::json HeteroGraph::to_json() const {
    nlohmann::json j;
    static const char* type_names[] = {"vehicle", "depot", "payload", "graph_emb", "value"};
    for (int t = 0; t < kNumMetaTypes; ++t) {
        j["nodes"][type_names[t]] = num_nodes[t];
        if (features[t].size() > 0)
            j["features"][type_names[t]] = {{"rows", features[t].rows},
                                            {"cols", features[t].cols},
                                            {"values", features[t].d}};
    }
    for (int r = 0; r < kNumRelations; ++r) {
        auto arr = nlohmann::json::array();
        for (const auto& [s, d] : edges[r]) arr.push_back({s, d});
        j["edges"][relation_info(static_cast<Relation>(r)).name] = arr;
    }
    return j;
}

HeteroGraph HeteroGraph::from_json(const nlohmann::json& j) {
    HeteroGraph g;
    static const char* type_names[] = {"vehicle", "depot", "payload", "graph_emb", "value"};
    for (int t = 0; t < kNumMetaTypes; ++t) {
        g.num_nodes[t] = j.at("nodes").at(type_names[t]).get<int>();
        if (j.contains("features") && j.at("features").contains(type_names[t])) {
            const auto& f = j.at("features").at(type_names[t]);
            g.features[t] = nn::Matrix(f.at("rows").get<int>(), f.at("cols").get<int>(),
                                       f.at("values").get<std::vector<double>>());
        }
    }
    for (int r = 0; r < kNumRelations; ++r) {
        const auto& arr = j.at("edges").at(relation_info(static_cast<Relation>(r)).name);
        for (const auto& e : arr) g.edges[r].emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return g;
}

Neighborhood observe(const sim::WorldState& w, int vehicle_id, int k_v, int k_d) {
    const auto& ego = w.vehicles[vehicle_id];
    Neighborhood nb;
    nb.ego = vehicle_id;

    auto k_nearest = [](std::vector<std::pair<double, int>> cand, int k) {
        std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;  // tie-break: lower id
        });
        std::vector<int> ids;
        for (int i = 0; i < std::min<int>(k, static_cast<int>(cand.size())); ++i)
            ids.push_back(cand[i].second);
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    std::vector<std::pair<double, int>> vcand;
    for (const auto& v : w.vehicles) vcand.push_back({sim::dist(ego.pos, v.pos), v.id});
    nb.vehicles = k_nearest(std::move(vcand), k_v);

    std::vector<std::pair<double, int>> dcand;
    for (const auto& d : w.depots) dcand.push_back({sim::dist(ego.pos, d.pos), d.id});
    nb.depots = k_nearest(std::move(dcand), k_d);

    for (int did : nb.depots)
        for (size_t qi = 0; qi < w.depots[did].queue.size(); ++qi)
            nb.payloads.emplace_back(did, static_cast<int>(qi));
    return nb;
}

HigFeatures feature_vectors(const sim::WorldState& w, const Neighborhood& nb) {
    double gs = w.grid_size;
    HigFeatures f;

    f.vehicle = nn::Matrix(static_cast<int>(nb.vehicles.size()), 5);
    for (size_t i = 0; i < nb.vehicles.size(); ++i) {
        const auto& v = w.vehicles[nb.vehicles[i]];
        sim::Vec2 prev = v.prev_stop >= 0 ? w.node_pos(v.prev_stop) : v.pos;
        sim::Vec2 next = v.next_stop >= 0 ? w.node_pos(v.next_stop) : v.pos;
        int r = static_cast<int>(i);
        f.vehicle.at(r, 0) = prev.x / gs;
        f.vehicle.at(r, 1) = prev.y / gs;
        f.vehicle.at(r, 2) = next.x / gs;
        f.vehicle.at(r, 3) = next.y / gs;
        f.vehicle.at(r, 4) = v.capacity;
    }

    f.depot = nn::Matrix(static_cast<int>(w.depots.size()), 4);
    for (size_t i = 0; i < w.depots.size(); ++i) {
        const auto& d = w.depots[i];
        int r = static_cast<int>(i);
        f.depot.at(r, 0) = d.pos.x / gs;
        f.depot.at(r, 1) = d.pos.y / gs;
        f.depot.at(r, 2) = d.lambda;
        f.depot.at(r, 3) = d.alpha_bar;
    }

    f.payload = nn::Matrix(static_cast<int>(nb.payloads.size()), 4);
    for (size_t i = 0; i < nb.payloads.size(); ++i) {
        const auto& p = w.depots[nb.payloads[i].first].queue[nb.payloads[i].second];
        sim::Vec2 dest = w.node_pos(p.dest_node);
        int r = static_cast<int>(i);
        f.payload.at(r, 0) = p.payoff;
        f.payload.at(r, 1) = dest.x / gs;
        f.payload.at(r, 2) = dest.y / gs;
        f.payload.at(r, 3) = p.cap;
    }
    return f;
}

HeteroGraph build_hig(const sim::WorldState& w, const Neighborhood& nb) {
    HeteroGraph g;
    int nv = static_cast<int>(nb.vehicles.size());
    int nd = static_cast<int>(w.depots.size());
    int np = static_cast<int>(nb.payloads.size());
    g.num_nodes[static_cast<int>(MetaType::Vehicle)] = nv;
    g.num_nodes[static_cast<int>(MetaType::Depot)] = nd;
    g.num_nodes[static_cast<int>(MetaType::Payload)] = np;

    std::vector<int> observed(nd, 0);
    for (int did : nb.depots) observed[did] = 1;

    for (int vi = 0; vi < nv; ++vi) {
        for (int d = 0; d < nd; ++d) g.add_edge(Relation::Visits, vi, d);
        for (int vj = 0; vj < nv; ++vj) g.add_edge(Relation::Communicates, vi, vj);
    }
    for (int pi = 0; pi < np; ++pi) {
        int did = nb.payloads[pi].first;
        if (!observed[did])
            throw std::logic_error("build_hig: payload references unobserved depot");
        const auto& p = w.depots[did].queue[nb.payloads[pi].second];
        g.add_edge(Relation::Has, pi, did);
        g.add_edge(Relation::Depends, pi, pi);
        for (int vi = 0; vi < nv; ++vi)
            if (p.cap <= w.vehicles[nb.vehicles[vi]].capacity)
                g.add_edge(Relation::AssignedTo, pi, vi);
    }

    HigFeatures f = feature_vectors(w, nb);
    g.features[static_cast<int>(MetaType::Vehicle)] = std::move(f.vehicle);
    g.features[static_cast<int>(MetaType::Depot)] = std::move(f.depot);
    g.features[static_cast<int>(MetaType::Payload)] = std::move(f.payload);
    g.sort_edges();
    g.validate();
    return g;
}

HeteroGraph build_hdg(int num_depots) {
    HeteroGraph g;
    g.num_nodes[static_cast<int>(MetaType::GraphEmb)] = 1;
    g.num_nodes[static_cast<int>(MetaType::Depot)] = num_depots;
    g.num_nodes[static_cast<int>(MetaType::ValueNode)] = 1;
    g.add_edge(Relation::GContributesVal, 0, 0);
    for (int d = 0; d < num_depots; ++d) {
        g.add_edge(Relation::DContributesG, d, 0);
        g.add_edge(Relation::DContributesVal, d, 0);
        for (int d2 = 0; d2 < num_depots; ++d2) g.add_edge(Relation::DNearD, d, d2);
    }
    g.sort_edges();
    return g;
}

std::vector<int> rebalancing_mask(const sim::WorldState& w, const Neighborhood& nb,
                                  int vehicle_capacity) {
    std::vector<int> mask(w.depots.size(), 0);
    for (int did : nb.depots) {
        bool suitable = false;
        for (const auto& p : w.depots[did].queue)
            if (p.cap <= vehicle_capacity) { suitable = true; break; }
        if (!suitable) mask[did] = 1;
    }
    return mask;
}

}  // namespace aam::obs
