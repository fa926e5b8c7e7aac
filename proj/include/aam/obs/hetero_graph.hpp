#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "aam/nn/matrix.hpp"
#include "json.hpp"

namespace aam::obs {

enum class MetaType { Vehicle = 0, Depot, Payload, GraphEmb, ValueNode };
inline constexpr int kNumMetaTypes = 5;

enum class Relation {
    Has = 0,        // payload -> depot
    Visits,         // vehicle -> depot
    Depends,        // payload -> payload (self)
    AssignedTo,     // payload -> vehicle
    Communicates,   // vehicle -> vehicle (incl. self)
    GContributesVal,  // graph-emb -> value
    DContributesG,    // depot -> graph-emb
    DContributesVal,  // depot -> value
    DNearD,           // depot -> depot (incl. self)
};
inline constexpr int kNumRelations = 9;

struct RelationInfo {
    MetaType src;
    MetaType dst;
    const char* name;
};

inline const RelationInfo& relation_info(Relation r) {
    static const std::array<RelationInfo, kNumRelations> table = {{
        {MetaType::Payload, MetaType::Depot, "has"},
        {MetaType::Vehicle, MetaType::Depot, "visits"},
        {MetaType::Payload, MetaType::Payload, "depends"},
        {MetaType::Payload, MetaType::Vehicle, "assigned_to"},
        {MetaType::Vehicle, MetaType::Vehicle, "communicates"},
        {MetaType::GraphEmb, MetaType::ValueNode, "g_contributes_val"},
        {MetaType::Depot, MetaType::GraphEmb, "d_contributes_g"},
        {MetaType::Depot, MetaType::ValueNode, "d_contributes_val"},
        {MetaType::Depot, MetaType::Depot, "d_near_d"},
    }};
    return table[static_cast<int>(r)];
}

// Typed-node / typed-edge graph with per-type feature tables. Edge lists are
// kept sorted by (dst, src) so segment operations are deterministic.
struct HeteroGraph {
    std::array<int, kNumMetaTypes> num_nodes = {0, 0, 0, 0, 0};
    std::array<nn::Matrix, kNumMetaTypes> features;
    std::array<std::vector<std::pair<int, int>>, kNumRelations> edges;  // (src, dst)

    int nodes(MetaType t) const { return num_nodes[static_cast<int>(t)]; }
    const std::vector<std::pair<int, int>>& rel(Relation r) const {
        return edges[static_cast<int>(r)];
    }
    void add_edge(Relation r, int src, int dst) {
        edges[static_cast<int>(r)].emplace_back(src, dst);
    }
    void sort_edges();
    void validate() const;  // throws on dangling endpoints

    nlohmann::json to_json() const;
    static HeteroGraph from_json(const nlohmann::json& j);
};

}  // namespace aam::obs
