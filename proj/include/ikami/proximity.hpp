#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ikami/graph_pair.hpp"
#include "ikami/param_store.hpp"

namespace ikami {

struct ProximityHyper {
    double gamma_g = 1.0;       // alignment margin
    double beta_g = 1.0;        // relation-transfer weight
    int k_neg = 50;             // nearest-neighbor negatives per seed and side
    double lr = 0.0005;
    double leaky_slope = 0.05;  // attention LeakyReLU
    int layers = 2;             // K
    bool uniform_attention = false;  // ablation: alpha = 1/|N(p)|

    void validate() const;
};

inline constexpr const char* kProxRel0 = "prox.rel0";
inline constexpr const char* kProxWge = "prox.W_ge";
inline constexpr const char* kProxWgr = "prox.W_gr";
std::string prox_layer_param(int layer, const char* which);  // "prox.l{k}.{which}"

// Adds the GNN weights: per layer the three direction projections
// (W_orig/W_inv/W_self), the relation transform W_rel, attention W_att and
// att_vec, and the f_e linear (W_fe, b_fe); plus the layer-0 relation table
// and the output projections W_ge/W_gr.
void init_proximity_params(ParamStore& store, const GraphPair& pair, int dim, int layers, std::uint64_t seed);

// Augmented edges of one graph sorted by (dst, src, rel): message e flows
// src[e] -> dst[e] through rel[e]. offsets give per-dst segments;
// orig/inv/self partition the rows by relation kind.
struct GnnEdgeList {
    std::vector<int> dst, src, rel;
    std::vector<std::int64_t> offsets;  // |V|+1
    std::vector<int> orig_rows, inv_rows, self_rows;
};
GnnEdgeList build_edge_list(const KnowledgeGraph& aug);

struct ProximityForward {
    Tape::Id entity_src = -1;     // final [|Vs|, d]
    Tape::Id entity_tgt = -1;     // final [|Vt|, d]
    Tape::Id relation_all = -1;   // final [(|Rs|+|Rt|), d]
    std::vector<Tensor> attention_src;  // per-layer per-edge alpha (inspection)
    std::vector<Tensor> attention_tgt;
};

// Runs the K-layer forward over both graphs with shared weights.
ProximityForward proximity_forward(Tape& tape, TapeBinder& binder, const GraphPair& pair, const GnnEdgeList& es,
                                   const GnnEdgeList& et, const Tensor& feat_s, const Tensor& feat_t,
                                   const ProximityHyper& hyper);

// 1 - cos(x, y); all-zero vectors count as orthogonal (distance 1).
double cosine_distance(std::span<const double> x, std::span<const double> y);

// Nearest-non-matching-entity negatives for each seed: the k closest target
// entities to p' stand in for p', and symmetrically on the source side.
struct NegativePairSet {
    std::vector<std::pair<int, int>> pairs;  // (source local, target local)
    std::vector<int> owner;                  // seed index per negative
};
NegativePairSet negative_pairs(const AlignmentLinks& seeds, const Tensor& emb_s, const Tensor& emb_t, int k);

Tape::Id mapping_loss_g_node(Tape& tape, Tape::Id entity_src, Tape::Id entity_tgt, const AlignmentLinks& seeds,
                             const NegativePairSet& negatives, double gamma_g);

// Global relation rows taking part in the transfer loss: originals and
// inverses of one side, never the self-loop.
std::vector<int> transferable_relation_rows(const GraphPair& pair, Side side);

// Pairwise cosine-distance matrix between two row subsets of an embedding
// table (plain evaluation; used to snapshot the transitivity-side matrix).
Tensor cosine_distance_matrix(const Tensor& emb, const std::vector<int>& rows_a, const std::vector<int>& rows_b);

// Sum |d_ct - d_cg| over source x target transferable relations; d_ct is a
// frozen snapshot, d_cg is computed from the GNN relation embeddings.
Tape::Id relation_transfer_loss_node(Tape& tape, Tape::Id relation_all, const std::vector<int>& src_rows,
                                     const std::vector<int>& tgt_rows, const Tensor& dct);

// Full Eq.-18-style objective: forward + margin loss + weighted transfer.
struct ProximityLossData {
    const GraphPair& pair;
    const GnnEdgeList& edges_src;
    const GnnEdgeList& edges_tgt;
    const Tensor& feat_s;
    const Tensor& feat_t;
    const AlignmentLinks& seeds;
    const NegativePairSet& negatives;
    const Tensor& dct;  // frozen transitivity relation-distance matrix
};
double proximity_total_loss(const ParamStore& store, const ProximityLossData& data, const ProximityHyper& hyper,
                            std::map<std::string, Tensor>* grads);

}  // namespace ikami
