#include "ikami/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ikami/errors.hpp"

namespace ikami {

void ProximityHyper::validate() const {
    if (gamma_g <= 0.0) throw ConfigError("gamma_g must be positive");
    if (beta_g < 0.0) throw ConfigError("beta_g must be nonnegative");
    if (k_neg < 1) throw ConfigError("proximity k_neg must be at least 1");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (layers < 1) throw ConfigError("at least one GNN layer is required");
    if (leaky_slope <= 0.0 || leaky_slope >= 1.0) throw ConfigError("leaky slope must be in (0,1)");
}

std::string prox_layer_param(int layer, const char* which) {
    return "prox.l" + std::to_string(layer) + "." + which;
}

void init_proximity_params(ParamStore& store, const GraphPair& pair, int dim, int layers, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("proximity embedding dim must be positive");
    Rng streams(seed ^ 0x70726f78ULL);
    store.add(kProxRel0, init_xavier({pair.total_relations(), dim}, streams.next_u64()));
    for (int k = 0; k < layers; ++k) {
        store.add(prox_layer_param(k, "W_orig"), init_xavier({dim, dim}, streams.next_u64()));
        store.add(prox_layer_param(k, "W_inv"), init_xavier({dim, dim}, streams.next_u64()));
        store.add(prox_layer_param(k, "W_self"), init_xavier({dim, dim}, streams.next_u64()));
        store.add(prox_layer_param(k, "W_rel"), init_xavier({dim, dim}, streams.next_u64()));
        store.add(prox_layer_param(k, "W_att"), init_xavier({dim, 2 * dim}, streams.next_u64()));
        store.add(prox_layer_param(k, "att_vec"), init_xavier({1, dim}, streams.next_u64()));
        store.add(prox_layer_param(k, "W_fe"), init_xavier({dim, dim}, streams.next_u64()));
        store.add(prox_layer_param(k, "b_fe"), Tensor::zeros({dim}));
    }
    store.add(kProxWge, init_xavier({dim, (layers + 1) * dim}, streams.next_u64()));
    store.add(kProxWgr, init_xavier({dim, (layers + 1) * dim}, streams.next_u64()));
}

GnnEdgeList build_edge_list(const KnowledgeGraph& aug) {
    if (!aug.augmented()) throw ConfigError("build_edge_list expects an augmented graph");
    struct Edge {
        int dst, src, rel;
    };
    std::vector<Edge> edges;
    edges.reserve(aug.num_triples());
    // message from tail to head for every stored triple <p, r, q>
    for (const Triple& t : aug.triples()) edges.push_back({t.head, t.tail, t.rel});
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.dst, a.src, a.rel) < std::tie(b.dst, b.src, b.rel);
    });

    GnnEdgeList out;
    out.dst.reserve(edges.size());
    out.src.reserve(edges.size());
    out.rel.reserve(edges.size());
    out.offsets.assign(aug.num_entities() + 1, 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out.dst.push_back(edges[e].dst);
        out.src.push_back(edges[e].src);
        out.rel.push_back(edges[e].rel);
        switch (aug.relation_kind(edges[e].rel)) {
            case RelationKind::original: out.orig_rows.push_back(static_cast<int>(e)); break;
            case RelationKind::inverse: out.inv_rows.push_back(static_cast<int>(e)); break;
            case RelationKind::self_loop: out.self_rows.push_back(static_cast<int>(e)); break;
        }
        out.offsets[static_cast<std::size_t>(edges[e].dst) + 1]++;
    }
    for (std::size_t p = 1; p < out.offsets.size(); ++p) out.offsets[p] += out.offsets[p - 1];
    return out;
}

namespace {

// One graph's K-layer stack. Returns the per-layer entity embeddings.
std::vector<Tape::Id> entity_layers(Tape& tape, TapeBinder& binder, const GnnEdgeList& edges,
                                    const std::vector<Tape::Id>& relation_layers, int rel_offset,
                                    const Tensor& features, const ProximityHyper& hyper,
                                    std::vector<Tensor>* attention_out) {
    const std::int64_t n_edges = static_cast<std::int64_t>(edges.dst.size());
    std::vector<int> rel_rows(edges.rel.size());
    for (std::size_t e = 0; e < edges.rel.size(); ++e) rel_rows[e] = rel_offset + edges.rel[e];

    std::vector<Tape::Id> layers;
    layers.push_back(tape.constant(features));
    for (int k = 0; k < hyper.layers; ++k) {
        const Tape::Id h = layers.back();
        auto hq = tape.gather_rows(h, edges.src);
        auto hr = tape.gather_rows(relation_layers[static_cast<std::size_t>(k)], rel_rows);
        auto comp = tape.sub(hq, hr);  // subtraction composition

        // direction-aware projection, per relation-kind block
        Tape::Id messages = -1;
        const std::pair<const std::vector<int>*, const char*> classes[] = {
            {&edges.orig_rows, "W_orig"}, {&edges.inv_rows, "W_inv"}, {&edges.self_rows, "W_self"}};
        for (const auto& [rows, which] : classes) {
            if (rows->empty()) continue;
            auto projected = tape.matmul_nt(tape.gather_rows(comp, *rows), binder.param(prox_layer_param(k, which)));
            auto scattered = tape.scatter_rows(projected, *rows, n_edges);
            messages = messages < 0 ? scattered : tape.add(messages, scattered);
        }

        Tape::Id alpha;
        if (hyper.uniform_attention) {
            Tensor a({n_edges});
            for (std::size_t p = 0; p + 1 < edges.offsets.size(); ++p) {
                const std::int64_t lo = edges.offsets[p], hi = edges.offsets[p + 1];
                for (std::int64_t e = lo; e < hi; ++e) a[e] = 1.0 / static_cast<double>(hi - lo);
            }
            alpha = tape.constant(std::move(a));
        } else {
            auto hp = tape.gather_rows(h, edges.dst);
            auto att_in = tape.concat_cols({hp, comp});
            auto hidden = tape.leaky_relu(tape.matmul_nt(att_in, binder.param(prox_layer_param(k, "W_att"))),
                                          hyper.leaky_slope);
            auto scores = tape.matmul_nt(hidden, binder.param(prox_layer_param(k, "att_vec")));  // [E,1]
            alpha = tape.segment_softmax(scores, edges.offsets);
        }
        if (attention_out) attention_out->push_back(tape.value(alpha));

        auto agg = tape.segment_weighted_rowsum(messages, alpha, edges.offsets);
        auto lin = tape.add_rowvec(tape.matmul_nt(agg, binder.param(prox_layer_param(k, "W_fe"))),
                                   binder.param(prox_layer_param(k, "b_fe")));
        layers.push_back(tape.tanh_op(lin));
    }
    return layers;
}

}  // namespace

ProximityForward proximity_forward(Tape& tape, TapeBinder& binder, const GraphPair& pair, const GnnEdgeList& es,
                                   const GnnEdgeList& et, const Tensor& feat_s, const Tensor& feat_t,
                                   const ProximityHyper& hyper) {
    hyper.validate();
    if (feat_s.rows() != static_cast<std::int64_t>(pair.source.num_entities()) ||
        feat_t.rows() != static_cast<std::int64_t>(pair.target.num_entities()))
        throw ConfigError("feature row count must match entity count");
    if (feat_s.cols() != feat_t.cols()) throw ConfigError("feature dimensions must agree across graphs");

    // shared relation stack: one table covering both graphs
    std::vector<Tape::Id> rel_layers;
    rel_layers.push_back(binder.param(kProxRel0));
    for (int k = 0; k < hyper.layers; ++k)
        rel_layers.push_back(tape.matmul_nt(rel_layers.back(), binder.param(prox_layer_param(k, "W_rel"))));

    ProximityForward out;
    auto src_layers = entity_layers(tape, binder, es, rel_layers, pair.relation_offset(Side::source), feat_s, hyper,
                                    &out.attention_src);
    auto tgt_layers = entity_layers(tape, binder, et, rel_layers, pair.relation_offset(Side::target), feat_t, hyper,
                                    &out.attention_tgt);

    out.entity_src = tape.matmul_nt(tape.concat_cols(src_layers), binder.param(kProxWge));
    out.entity_tgt = tape.matmul_nt(tape.concat_cols(tgt_layers), binder.param(kProxWge));
    out.relation_all = tape.matmul_nt(tape.concat_cols(rel_layers), binder.param(kProxWgr));
    return out;
}

double cosine_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("cosine_distance: dimension mismatch");
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0.0 || ny == 0.0) return 1.0;  // orthogonal convention for zero vectors
    return 1.0 - dot / (std::sqrt(nx) * std::sqrt(ny));
}

NegativePairSet negative_pairs(const AlignmentLinks& seeds, const Tensor& emb_s, const Tensor& emb_t, int k) {
    NegativePairSet out;
    const std::int64_t d = emb_s.cols();
    if (emb_t.cols() != d) throw ConfigError("negative_pairs: dimension mismatch");

    auto nearest = [&](const Tensor& emb, std::int64_t anchor, int exclude) {
        std::vector<std::pair<double, int>> dist;
        dist.reserve(static_cast<std::size_t>(emb.rows()));
        for (std::int64_t i = 0; i < emb.rows(); ++i) {
            if (static_cast<int>(i) == exclude) continue;
            dist.emplace_back(cosine_distance({emb.data() + anchor * d, static_cast<std::size_t>(d)},
                                              {emb.data() + i * d, static_cast<std::size_t>(d)}),
                              static_cast<int>(i));
        }
        const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        std::vector<int> ids(kk);
        for (std::size_t i = 0; i < kk; ++i) ids[i] = dist[i].second;
        return ids;
    };

    for (std::size_t s = 0; s < seeds.pairs.size(); ++s) {
        const auto& [p, pp] = seeds.pairs[s];
        // the anchor is the replaced end: closest wrong targets to p', closest wrong sources to p
        for (int t : nearest(emb_t, pp, pp)) {
            out.pairs.emplace_back(p, t);
            out.owner.push_back(static_cast<int>(s));
        }
        for (int q : nearest(emb_s, p, p)) {
            out.pairs.emplace_back(q, pp);
            out.owner.push_back(static_cast<int>(s));
        }
    }
    return out;
}

namespace {

Tape::Id pair_cosine_distances(Tape& tape, Tape::Id entity_src, Tape::Id entity_tgt,
                               const std::vector<std::pair<int, int>>& pairs) {
    std::vector<int> a, b;
    a.reserve(pairs.size());
    b.reserve(pairs.size());
    for (const auto& [s, t] : pairs) {
        a.push_back(s);
        b.push_back(t);
    }
    auto lhs = tape.rownormalize(tape.gather_rows(entity_src, std::move(a)));
    auto rhs = tape.rownormalize(tape.gather_rows(entity_tgt, std::move(b)));
    return tape.affine(tape.rows_dot(lhs, rhs), -1.0, 1.0);
}

}  // namespace

Tape::Id mapping_loss_g_node(Tape& tape, Tape::Id entity_src, Tape::Id entity_tgt, const AlignmentLinks& seeds,
                             const NegativePairSet& negatives, double gamma_g) {
    if (seeds.pairs.empty() || negatives.pairs.empty()) return tape.constant(Tensor::scalar(0.0));
    auto pos_d = pair_cosine_distances(tape, entity_src, entity_tgt, seeds.pairs);
    auto neg_d = pair_cosine_distances(tape, entity_src, entity_tgt, negatives.pairs);
    auto pos_rep = tape.gather_elems(pos_d, negatives.owner);
    return tape.sum(tape.relu(tape.affine(tape.sub(pos_rep, neg_d), 1.0, gamma_g)));
}

std::vector<int> transferable_relation_rows(const GraphPair& pair, Side side) {
    const KnowledgeGraph& kg = pair.graph(side);
    const int off = pair.relation_offset(side);
    std::vector<int> rows;
    for (int r = 0; r < static_cast<int>(kg.num_relations()); ++r)
        if (kg.relation_kind(r) != RelationKind::self_loop) rows.push_back(off + r);
    return rows;
}

Tensor cosine_distance_matrix(const Tensor& emb, const std::vector<int>& rows_a, const std::vector<int>& rows_b) {
    const std::int64_t d = emb.cols();
    Tensor out({static_cast<std::int64_t>(rows_a.size()), static_cast<std::int64_t>(rows_b.size())});
    for (std::size_t i = 0; i < rows_a.size(); ++i)
        for (std::size_t j = 0; j < rows_b.size(); ++j)
            out.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) =
                cosine_distance({emb.data() + static_cast<std::int64_t>(rows_a[i]) * d, static_cast<std::size_t>(d)},
                                {emb.data() + static_cast<std::int64_t>(rows_b[j]) * d, static_cast<std::size_t>(d)});
    return out;
}

Tape::Id relation_transfer_loss_node(Tape& tape, Tape::Id relation_all, const std::vector<int>& src_rows,
                                     const std::vector<int>& tgt_rows, const Tensor& dct) {
    if (dct.rows() != static_cast<std::int64_t>(src_rows.size()) ||
        dct.cols() != static_cast<std::int64_t>(tgt_rows.size()))
        throw ConfigError("relation_transfer_loss: snapshot shape mismatch");
    auto a = tape.rownormalize(tape.gather_rows(relation_all, src_rows));
    auto b = tape.rownormalize(tape.gather_rows(relation_all, tgt_rows));
    auto dcg = tape.affine(tape.matmul_nt(a, b), -1.0, 1.0);
    return tape.sum(tape.abs_op(tape.sub(dcg, tape.constant(dct))));
}

double proximity_total_loss(const ParamStore& store, const ProximityLossData& data, const ProximityHyper& hyper,
                            std::map<std::string, Tensor>* grads) {
    Tape tape;
    TapeBinder binder(tape, store);
    auto fwd = proximity_forward(tape, binder, data.pair, data.edges_src, data.edges_tgt, data.feat_s, data.feat_t,
                                 hyper);
    auto loss = mapping_loss_g_node(tape, fwd.entity_src, fwd.entity_tgt, data.seeds, data.negatives, hyper.gamma_g);
    if (hyper.beta_g > 0.0) {
        auto transfer = relation_transfer_loss_node(tape, fwd.relation_all,
                                                    transferable_relation_rows(data.pair, Side::source),
                                                    transferable_relation_rows(data.pair, Side::target), data.dct);
        loss = tape.add(loss, tape.affine(transfer, hyper.beta_g, 0.0));
    }
    const double out = tape.scalar_value(loss);
    if (grads) {
        tape.backward(loss);
        binder.collect_grads(*grads);
    }
    return out;
}

}  // namespace ikami
