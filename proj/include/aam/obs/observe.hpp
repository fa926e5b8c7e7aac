#pragma once

#include <vector>

#include "aam/obs/hetero_graph.hpp"
#include "aam/sim/world.hpp"

namespace aam::obs {

// Local neighborhood of a vehicle: the k_v closest vehicles (ego included),
// the k_d closest depots, and every observed depot's queue.
struct Neighborhood {
    int ego = -1;
    std::vector<int> vehicles;  // vehicle ids, ascending id order
    std::vector<int> depots;    // depot ids, ascending id order
    // One entry per observed payload: (depot id, index in that depot's queue).
    std::vector<std::pair<int, int>> payloads;
};

// Euclidean k-nearest with ties broken by lower id.
Neighborhood observe(const sim::WorldState& w, int vehicle_id, int k_v, int k_d);

// Per-type feature matrices for the HIG: depot rows [x_d, lambda, alpha_bar],
// payload rows [payoff, x_c, cap], vehicle rows [x_prev, x_next, cap].
// Positions are divided by grid_size.
struct HigFeatures {
    nn::Matrix vehicle;  // |V_v| x 5
    nn::Matrix depot;    // |D| x 4 (all depots)
    nn::Matrix payload;  // |P_v| x 4
};

HigFeatures feature_vectors(const sim::WorldState& w, const Neighborhood& nb);

// Heterogeneous interaction graph. Depot nodes cover ALL depots (indexed by
// depot id); vehicle nodes follow nb.vehicles order; payload nodes follow
// nb.payloads order.
HeteroGraph build_hig(const sim::WorldState& w, const Neighborhood& nb);

// Heterogeneous decoder graph over 1 graph-embedding node, num_depots depot
// nodes, and 1 value node.
HeteroGraph build_hdg(int num_depots);

// Depot mask for the fleet rebalancing rule: true = masked. Observed depots
// with no payload suitable for the vehicle's capacity are masked; unobserved
// depots never are.
std::vector<int> rebalancing_mask(const sim::WorldState& w, const Neighborhood& nb,
                                  int vehicle_capacity);

}  // namespace aam::obs
