#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aam/nn/ops.hpp"
#include "aam/nn/store.hpp"
#include "aam/nn/tape.hpp"
#include "aam/obs/observe.hpp"

namespace aam::policy {

inline constexpr double kLeakySlope = 0.2;

// One (projection, attention) set per head of one relation. The destination
// projection exists only to form the attention logit
// a . lrelu(W_dst h_i + W_src h_j); messages always use the source projection.
struct RelHead {
    nn::Parameter* w_src = nullptr;  // out_per_head x |h_src|
    nn::Parameter* w_dst = nullptr;  // out_per_head x |h_dst| (attention only)
    nn::Parameter* att = nullptr;    // out_per_head x 1
};

struct LayerParams {
    std::string name;
    int heads = 1;
    bool attention = true;  // false: uniform beta, no attention parameters
    std::array<int, obs::kNumMetaTypes> out_width = {};  // total, post-concat
    std::array<bool, obs::kNumMetaTypes> raw_output = {};  // skip activation
    std::map<obs::Relation, std::vector<RelHead>> rels;
    // Optional self projection per meta-type, averaged in alongside the
    // relation messages. Without it a node's own features reach its output
    // only through the attention weights, and on relations where every
    // destination aggregates the same source set (visits, d_near_d) that
    // contracts all destination embeddings toward a single row per layer.
    std::map<int, nn::Parameter*> res;
};

// Attention coefficients captured during a forward pass, for inspection.
struct AttnRecord {
    obs::Relation rel;
    int head;
    std::vector<int> dst;       // segment id per edge
    std::vector<double> beta;
};

// Relation-typed message passing with attention. Returns per-meta-type output
// feature nodes; types with no incoming edges yield -1.
std::array<nn::Tape::Id, obs::kNumMetaTypes> hetgat_layer(
    nn::Tape& tape, const obs::HeteroGraph& g,
    const std::array<nn::Tape::Id, obs::kNumMetaTypes>& feats, const LayerParams& layer,
    std::vector<AttnRecord>* attn_out = nullptr);

enum class Arch { EncDec, HetGAT, HetGCN };

Arch arch_from_string(const std::string& s);
std::string arch_to_string(Arch a);

// A vehicle's observation as consumed by the policy (and stored in rollouts).
struct Observation {
    obs::HeteroGraph hig;
    std::vector<int> mask;  // per depot; all zero when masking is off
    int num_depots = 0;
};

struct PolicyOutput {
    std::vector<double> probs;  // masked depots get exactly 0
    std::vector<double> q;      // raw per-depot scores (pre-mask)
    double value = 0.0;
    std::vector<int> mask;      // effective mask (after all-masked fallback)
};

// The full encoder-decoder (or vanilla HetGAT / HetGCN) policy network with
// its parameter store.
class PolicyNet {
public:
    static PolicyNet make(Arch arch, uint64_t seed);

    Arch arch() const { return arch_; }
    nn::ParamStore& store() { return store_; }
    const nn::ParamStore& store() const { return store_; }

    struct ForwardNodes {
        nn::Tape::Id q = -1;      // num_depots x 1
        nn::Tape::Id value = -1;  // 1 x 1
    };

    // Differentiable forward pass on the caller's tape.
    ForwardNodes forward_nodes(nn::Tape& tape, const Observation& ob,
                               std::vector<AttnRecord>* attn_out = nullptr) const;

    // Value-level forward: probabilities, value estimate, raw scores.
    PolicyOutput forward(const Observation& ob) const;

    // Encoder only: per-type embeddings plus the 192-wide graph embedding.
    struct Encoded {
        std::array<nn::Tape::Id, obs::kNumMetaTypes> emb;
        nn::Tape::Id g = -1;  // 1 x 192
    };
    Encoded encode(nn::Tape& tape, const obs::HeteroGraph& hig,
                   std::vector<AttnRecord>* attn_out = nullptr) const;

    nlohmann::json checkpoint() const;
    void load_checkpoint(const nlohmann::json& j);
    static PolicyNet from_checkpoint(const nlohmann::json& j);

    std::string info() const;  // relation types, shapes, parameter counts

    const std::vector<LayerParams>& enc_layers() const { return enc_layers_; }
    const std::vector<LayerParams>& dec_layers() const { return dec_layers_; }

private:
    Arch arch_ = Arch::EncDec;
    nn::ParamStore store_;
    std::vector<LayerParams> enc_layers_;
    std::vector<LayerParams> dec_layers_;  // empty for vanilla architectures
    nn::Parameter* fc_val_[6] = {};        // W1 b1 W2 b2 W3 b3

    nn::Tape::Id fc_val(nn::Tape& tape, nn::Tape::Id row64) const;
    void build(uint64_t seed);
};

// Applies the rebalancing mask to raw scores; if every depot would be masked,
// reverts to the unmasked scores. Returns the effective mask.
std::vector<int> effective_mask(const std::vector<int>& mask);

// Full pipeline: observe -> build_hig -> forward -> optional mask.
// The returned Observation is what rollouts store.
std::pair<PolicyOutput, Observation> policy_forward(const sim::WorldState& w, int vehicle_id,
                                                    const PolicyNet& net, int k_v, int k_d,
                                                    bool use_mask);

}  // namespace aam::policy
