#include "aam/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace aam::policy {

using nn::Tape;
using obs::HeteroGraph;
using obs::MetaType;
using obs::Relation;

namespace {

constexpr int T = obs::kNumMetaTypes;
int idx(MetaType t) { return static_cast<int>(t); }

const std::vector<Relation> kHigRelations = {
    Relation::Has, Relation::Visits, Relation::Depends, Relation::AssignedTo,
    Relation::Communicates};
const std::vector<Relation> kHdgRelations = {
    Relation::GContributesVal, Relation::DContributesG, Relation::DContributesVal,
    Relation::DNearD};

LayerParams make_layer(nn::ParamStore& store, util::Rng& rng, const std::string& name,
                       const std::vector<Relation>& relations,
                       const std::array<int, T>& in_width, const std::array<int, T>& out_width,
                       int heads, bool attention) {
    LayerParams lp;
    lp.name = name;
    lp.heads = heads;
    lp.attention = attention;
    lp.out_width = out_width;
    for (Relation r : relations) {
        const auto& info = obs::relation_info(r);
        int w_in_src = in_width[idx(info.src)];
        int w_in_dst = in_width[idx(info.dst)];
        int w_out = out_width[idx(info.dst)];
        if (w_out % heads != 0) throw std::logic_error("output width not divisible by heads");
        int w_ph = w_out / heads;
        std::vector<RelHead> hs;
        for (int h = 0; h < heads; ++h) {
            RelHead rh;
            std::string base = name + "." + info.name + ".h" + std::to_string(h);
            rh.w_src = &store.create_glorot(base + ".w_src", w_ph, w_in_src, rng);
            if (attention) {
                rh.w_dst = &store.create_glorot(base + ".w_dst", w_ph, w_in_dst, rng);
                rh.att = &store.create_glorot(base + ".att", w_ph, 1, rng);
            }
            hs.push_back(rh);
        }
        lp.rels[r] = std::move(hs);
    }
    for (int t = 0; t < T; ++t)
        if (in_width[t] > 0 && out_width[t] > 0)
            lp.res[t] = &store.create_glorot(name + ".res" + std::to_string(t),
                                             in_width[t], out_width[t], rng);
    return lp;
}

}  // namespace

std::array<Tape::Id, T> hetgat_layer(Tape& tape, const HeteroGraph& g,
                                     const std::array<Tape::Id, T>& feats,
                                     const LayerParams& layer,
                                     std::vector<AttnRecord>* attn_out) {
    // Per target type, per relation: e_ij = a . lrelu(W_dst h_i + W_src h_j),
    // beta = softmax over the relation-typed in-neighbors, message sum
    // sigma(sum beta W_src h_j), heads concatenated, then mean over relations.
    // The nonlinearity sits inside the attention dot product so beta keeps a
    // genuine dependence on the destination; with the kink outside, softmax
    // cancels the destination term whenever a segment's logits share a sign,
    // and on relations where every destination sees the same source set
    // (visits, d_near_d) that collapses all destination embeddings to one row.
    std::array<std::vector<Tape::Id>, T> per_rel;

    for (const auto& [rel, heads] : layer.rels) {
        const auto& edges = g.rel(rel);
        if (edges.empty()) continue;
        const auto& info = obs::relation_info(rel);
        int ti = idx(info.dst), si = idx(info.src);
        if (feats[si] < 0) throw std::logic_error("hetgat_layer: missing source features");
        int n_t = g.nodes(info.dst);

        std::vector<int> src_ids, dst_ids;
        src_ids.reserve(edges.size());
        dst_ids.reserve(edges.size());
        for (const auto& [s, d] : edges) {
            src_ids.push_back(s);
            dst_ids.push_back(d);
        }

        std::vector<Tape::Id> head_outs;
        for (int h = 0; h < layer.heads; ++h) {
            const RelHead& rh = heads[h];
            Tape::Id proj_src = tape.matmul(feats[si], tape.transpose(tape.param(*rh.w_src)));
            Tape::Id msg = tape.gather_rows(proj_src, src_ids);  // E x w_ph

            Tape::Id weighted;
            if (layer.attention) {
                Tape::Id proj_dst =
                    tape.matmul(feats[ti], tape.transpose(tape.param(*rh.w_dst)));
                Tape::Id ed = tape.gather_rows(proj_dst, dst_ids);
                Tape::Id logits = tape.matmul(
                    tape.leaky_relu(tape.add(ed, msg), kLeakySlope), tape.param(*rh.att));
                Tape::Id beta = tape.segment_softmax(logits, dst_ids);
                if (attn_out) {
                    AttnRecord rec;
                    rec.rel = rel;
                    rec.head = h;
                    rec.dst = dst_ids;
                    rec.beta = tape.value(beta).d;
                    attn_out->push_back(std::move(rec));
                }
                weighted = tape.scale_rows(msg, beta);
            } else {
                // Uniform beta = 1 / in-degree (HetGCN mode).
                std::vector<int> deg(n_t, 0);
                for (int d : dst_ids) ++deg[d];
                std::vector<double> b(dst_ids.size());
                for (size_t e = 0; e < dst_ids.size(); ++e) b[e] = 1.0 / deg[dst_ids[e]];
                if (attn_out) {
                    AttnRecord rec;
                    rec.rel = rel;
                    rec.head = h;
                    rec.dst = dst_ids;
                    rec.beta = b;
                    attn_out->push_back(std::move(rec));
                }
                weighted = tape.scale_rows(msg, tape.input(nn::Matrix::col(b)));
            }

            Tape::Id summed = tape.segment_sum(weighted, dst_ids, n_t);
            head_outs.push_back(layer.raw_output[ti] ? summed
                                                     : tape.leaky_relu(summed, kLeakySlope));
        }
        Tape::Id rel_out =
            layer.heads == 1 ? head_outs[0] : tape.concat_cols(head_outs);
        per_rel[ti].push_back(rel_out);
    }

    std::array<Tape::Id, T> out;
    out.fill(-1);
    for (int t = 0; t < T; ++t) {
        if (per_rel[t].empty()) continue;
        size_t terms = per_rel[t].size();
        Tape::Id acc = per_rel[t][0];
        for (size_t k = 1; k < terms; ++k) acc = tape.add(acc, per_rel[t][k]);
        auto it = layer.res.find(t);
        if (it != layer.res.end() && feats[t] >= 0) {
            Tape::Id self = tape.matmul(feats[t], tape.param(*it->second));
            if (!layer.raw_output[t]) self = tape.leaky_relu(self, kLeakySlope);
            acc = tape.add(acc, self);
            ++terms;
        }
        out[t] = terms == 1 ? acc : tape.scale(acc, 1.0 / terms);
    }
    return out;
}

Arch arch_from_string(const std::string& s) {
    if (s == "encdec") return Arch::EncDec;
    if (s == "hetgat") return Arch::HetGAT;
    if (s == "hetgcn") return Arch::HetGCN;
    throw std::invalid_argument("unknown architecture: " + s);
}

std::string arch_to_string(Arch a) {
    switch (a) {
        case Arch::EncDec: return "encdec";
        case Arch::HetGAT: return "hetgat";
        case Arch::HetGCN: return "hetgcn";
    }
    return "?";
}

void PolicyNet::build(uint64_t seed) {
    util::Rng rng = util::Rng::derive(seed, 77);
    auto widths = [](int v, int d, int p, int g = 0, int val = 0) {
        std::array<int, T> w{};
        w[idx(MetaType::Vehicle)] = v;
        w[idx(MetaType::Depot)] = d;
        w[idx(MetaType::Payload)] = p;
        w[idx(MetaType::GraphEmb)] = g;
        w[idx(MetaType::ValueNode)] = val;
        return w;
    };

    if (arch_ == Arch::EncDec) {
        enc_layers_.push_back(make_layer(store_, rng, "enc1", kHigRelations,
                                         widths(5, 4, 4), widths(32, 32, 32), 8, true));
        enc_layers_.push_back(make_layer(store_, rng, "enc2", kHigRelations,
                                         widths(32, 32, 32), widths(32, 32, 32), 8, true));
        enc_layers_.push_back(make_layer(store_, rng, "enc3", kHigRelations,
                                         widths(32, 32, 32), widths(64, 64, 64), 1, true));
        dec_layers_.push_back(make_layer(store_, rng, "dec1", kHdgRelations,
                                         widths(0, 64, 0, 192, 32), widths(0, 48, 0, 48, 48),
                                         8, true));
        LayerParams d2 = make_layer(store_, rng, "dec2", kHdgRelations,
                                    widths(0, 48, 0, 48, 48), widths(0, 64, 0, 64, 64), 1,
                                    true);
        // Final layer: graph-embedding and depot outputs stay raw (no
        // activation); only the value node goes through sigma.
        d2.raw_output[idx(MetaType::Depot)] = true;
        d2.raw_output[idx(MetaType::GraphEmb)] = true;
        dec_layers_.push_back(std::move(d2));
    } else {
        bool attn = (arch_ == Arch::HetGAT);
        enc_layers_.push_back(make_layer(store_, rng, "l1", kHigRelations, widths(5, 4, 4),
                                         widths(32, 32, 32), 8, attn));
        enc_layers_.push_back(make_layer(store_, rng, "l2", kHigRelations, widths(32, 32, 32),
                                         widths(32, 32, 32), 8, attn));
        LayerParams l3 = make_layer(store_, rng, "l3", kHigRelations, widths(32, 32, 32),
                                    widths(64, 1, 64), 1, attn);
        // Depot output width 1 is the action value of that depot, kept raw.
        l3.raw_output[idx(MetaType::Depot)] = true;
        enc_layers_.push_back(std::move(l3));
    }

    fc_val_[0] = &store_.create_glorot("fc_val.w1", 64, 64, rng);
    fc_val_[1] = &store_.create("fc_val.b1", 1, 64);
    fc_val_[2] = &store_.create_glorot("fc_val.w2", 64, 64, rng);
    fc_val_[3] = &store_.create("fc_val.b2", 1, 64);
    fc_val_[4] = &store_.create_glorot("fc_val.w3", 64, 1, rng);
    fc_val_[5] = &store_.create("fc_val.b3", 1, 1);
}

PolicyNet PolicyNet::make(Arch arch, uint64_t seed) {
    PolicyNet net;
    net.arch_ = arch;
    net.build(seed);
    return net;
}

Tape::Id PolicyNet::fc_val(Tape& tape, Tape::Id row64) const {
    Tape::Id h = tape.leaky_relu(
        tape.add(tape.matmul(row64, tape.param(*fc_val_[0])), tape.param(*fc_val_[1])),
        kLeakySlope);
    h = tape.leaky_relu(
        tape.add(tape.matmul(h, tape.param(*fc_val_[2])), tape.param(*fc_val_[3])),
        kLeakySlope);
    return tape.add(tape.matmul(h, tape.param(*fc_val_[4])), tape.param(*fc_val_[5]));
}

PolicyNet::Encoded PolicyNet::encode(Tape& tape, const HeteroGraph& hig,
                                     std::vector<AttnRecord>* attn_out) const {
    std::array<Tape::Id, T> feats;
    feats.fill(-1);
    for (int t : {idx(MetaType::Vehicle), idx(MetaType::Depot), idx(MetaType::Payload)})
        if (hig.num_nodes[t] > 0) feats[t] = tape.input(hig.features[t]);

    for (const auto& layer : enc_layers_) {
        auto out = hetgat_layer(tape, hig, feats, layer, attn_out);
        for (int t = 0; t < T; ++t)
            if (out[t] >= 0) feats[t] = out[t];
    }

    Encoded enc;
    enc.emb = feats;
    // Graph embedding: concat of per-type means; an empty payload set
    // contributes a zero 64-block.
    Tape::Id mv = tape.mean_rows(feats[idx(MetaType::Vehicle)]);
    Tape::Id md = tape.mean_rows(feats[idx(MetaType::Depot)]);
    Tape::Id mp = hig.nodes(MetaType::Payload) > 0
                      ? tape.mean_rows(feats[idx(MetaType::Payload)])
                      : tape.input(nn::Matrix(1, 64));
    enc.g = tape.concat_cols({mv, md, mp});
    return enc;
}

PolicyNet::ForwardNodes PolicyNet::forward_nodes(Tape& tape, const Observation& ob,
                                                 std::vector<AttnRecord>* attn_out) const {
    ForwardNodes out;
    if (arch_ == Arch::EncDec) {
        Encoded enc = encode(tape, ob.hig, attn_out);
        HeteroGraph hdg = obs::build_hdg(ob.num_depots);
        std::array<Tape::Id, T> feats;
        feats.fill(-1);
        feats[idx(MetaType::GraphEmb)] = enc.g;
        feats[idx(MetaType::Depot)] = enc.emb[idx(MetaType::Depot)];
        feats[idx(MetaType::ValueNode)] = tape.input(nn::Matrix(1, 32));
        for (const auto& layer : dec_layers_) {
            auto o = hetgat_layer(tape, hdg, feats, layer, attn_out);
            for (int t = 0; t < T; ++t)
                if (o[t] >= 0) feats[t] = o[t];
        }
        Tape::Id qg = feats[idx(MetaType::GraphEmb)];    // 1 x 64
        Tape::Id qd = feats[idx(MetaType::Depot)];       // D x 64
        out.q = tape.leaky_relu(tape.matmul(qd, tape.transpose(qg)), kLeakySlope);
        out.value = fc_val(tape, feats[idx(MetaType::ValueNode)]);
    } else {
        std::array<Tape::Id, T> feats;
        feats.fill(-1);
        for (int t : {idx(MetaType::Vehicle), idx(MetaType::Depot), idx(MetaType::Payload)})
            if (ob.hig.num_nodes[t] > 0) feats[t] = tape.input(ob.hig.features[t]);
        for (const auto& layer : enc_layers_) {
            auto o = hetgat_layer(tape, ob.hig, feats, layer, attn_out);
            for (int t = 0; t < T; ++t)
                if (o[t] >= 0) feats[t] = o[t];
        }
        out.q = feats[idx(MetaType::Depot)];  // D x 1 raw action values
        out.value = fc_val(tape, tape.mean_rows(feats[idx(MetaType::Vehicle)]));
    }
    return out;
}

std::vector<int> effective_mask(const std::vector<int>& mask) {
    bool any_open = false;
    for (int m : mask)
        if (!m) { any_open = true; break; }
    if (any_open) return mask;
    return std::vector<int>(mask.size(), 0);  // all-masked fallback: unmask
}

PolicyOutput PolicyNet::forward(const Observation& ob) const {
    Tape tape;
    ForwardNodes fn = forward_nodes(tape, ob);
    PolicyOutput out;
    out.q = tape.value(fn.q).d;
    out.value = tape.value(fn.value).at(0, 0);
    out.mask = effective_mask(ob.mask);
    std::vector<double> logits = out.q;
    for (size_t i = 0; i < logits.size(); ++i)
        if (out.mask[i]) logits[i] = -std::numeric_limits<double>::infinity();
    out.probs = nn::softmax(logits);
    return out;
}

std::pair<PolicyOutput, Observation> policy_forward(const sim::WorldState& w, int vehicle_id,
                                                    const PolicyNet& net, int k_v, int k_d,
                                                    bool use_mask) {
    obs::Neighborhood nb = obs::observe(w, vehicle_id, k_v, k_d);
    Observation ob;
    ob.hig = obs::build_hig(w, nb);
    ob.num_depots = static_cast<int>(w.depots.size());
    ob.mask = use_mask ? obs::rebalancing_mask(w, nb, w.vehicles[vehicle_id].capacity)
                       : std::vector<int>(w.depots.size(), 0);
    ob.mask = effective_mask(ob.mask);
    PolicyOutput out = net.forward(ob);
    return {std::move(out), std::move(ob)};
}

nlohmann::json PolicyNet::checkpoint() const {
    nlohmann::json j;
    j["format"] = "aam-policy";
    j["version"] = 1;
    j["arch"] = arch_to_string(arch_);
    j["params"] = store_.to_json();
    return j;
}

void PolicyNet::load_checkpoint(const nlohmann::json& j) {
    if (j.at("arch").get<std::string>() != arch_to_string(arch_))
        throw std::runtime_error("checkpoint architecture mismatch");
    store_.load_json(j.at("params"));
}

PolicyNet PolicyNet::from_checkpoint(const nlohmann::json& j) {
    PolicyNet net = make(arch_from_string(j.at("arch").get<std::string>()), 0);
    net.load_checkpoint(j);
    return net;
}

std::string PolicyNet::info() const {
    std::ostringstream os;
    os << "architecture: " << arch_to_string(arch_) << "\n";
    auto dump_layer = [&](const LayerParams& lp) {
        os << "layer " << lp.name << " heads=" << lp.heads
           << (lp.attention ? "" : " (uniform beta)") << "\n";
        for (const auto& [rel, heads] : lp.rels) {
            const auto& info = obs::relation_info(rel);
            const RelHead& h = heads[0];
            os << "  " << info.name << ": w_src " << h.w_src->value.rows << "x"
               << h.w_src->value.cols;
            if (h.w_dst)
                os << ", w_dst " << h.w_dst->value.rows << "x" << h.w_dst->value.cols
                   << ", att " << h.att->value.rows << "x1";
            os << " (x" << lp.heads << " heads)\n";
        }
    };
    for (const auto& l : enc_layers_) dump_layer(l);
    for (const auto& l : dec_layers_) dump_layer(l);
    os << "fc_val: 64 -> 64 -> 64 -> 1\n";
    os << "total parameters: " << store_.value_count() << "\n";
    return os.str();
}

}  // namespace aam::policy
