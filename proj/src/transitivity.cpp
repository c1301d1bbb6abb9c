#include "ikami/transitivity.hpp"

#include <cmath>

#include "ikami/errors.hpp"
#include "ikami/recovery.hpp"

namespace ikami {

void TransitivityHyper::validate() const {
    if (gamma_t <= 0.0) throw ConfigError("gamma_t must be positive");
    if (beta_tm < 0.0 || beta_tc < 0.0) throw ConfigError("transitivity loss weights must be nonnegative");
    if (k_neg < 1) throw ConfigError("k_neg must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
}

double manhattan_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("manhattan_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s;
}

void init_transitivity_params(ParamStore& store, const GraphPair& pair, int dim, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("transitivity embedding dim must be positive");
    store.add(kTransEntity, init_xavier({pair.total_entities(), dim}, seed ^ 0x7261746521ULL));
    store.add(kTransRelation, init_xavier({pair.total_relations(), dim}, seed ^ 0x72656c6174ULL));
}

void project_entity_ball(ParamStore& store) {
    Tensor& ent = store.get(kTransEntity);
    const std::int64_t d = ent.cols();
    for (std::int64_t r = 0; r < ent.rows(); ++r) {
        double norm2 = 0.0;
        for (std::int64_t c = 0; c < d; ++c) norm2 += ent.at(r, c) * ent.at(r, c);
        if (norm2 <= 1.0) continue;
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::int64_t c = 0; c < d; ++c) ent.at(r, c) *= inv;
    }
}

double translation_score(const ParamStore& store, const GraphPair& pair, Side side, const Triple& t) {
    const Tensor& ent = store.get(kTransEntity);
    const Tensor& rel = store.get(kTransRelation);
    const int d = static_cast<int>(ent.cols());
    const double* h = ent.data() + static_cast<std::int64_t>(pair.entity_id(side, t.head)) * d;
    const double* r = rel.data() + static_cast<std::int64_t>(pair.relation_id(side, t.rel)) * d;
    const double* tail = ent.data() + static_cast<std::int64_t>(pair.entity_id(side, t.tail)) * d;
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += std::abs(h[i] + r[i] - tail[i]);
    return s;
}

std::vector<Triple> sample_negatives(const Triple& triple, const KnowledgeGraph& kg, int k, Rng& rng) {
    if (k < 1) throw ConfigError("sample_negatives: k must be at least 1");
    const std::size_t nv = kg.num_entities();
    std::vector<Triple> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int slot = 0; slot < k; ++slot) {
        bool found = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            const bool corrupt_head = rng.next_below(2) == 0;
            const int e = rng.index(nv);
            Triple cand = triple;
            (corrupt_head ? cand.head : cand.tail) = e;
            if (cand == triple) continue;
            if (kg.has_triple(cand)) continue;
            out.push_back(cand);
            found = true;
            break;
        }
        if (!found) throw Error("sample_negatives: no valid corruption found after 100 attempts");
    }
    return out;
}

TripleBatch make_triple_batch(const GraphPair& pair, const std::vector<std::pair<Side, Triple>>& positives, int k_neg,
                              Rng& rng) {
    TripleBatch batch;
    batch.k = k_neg;
    batch.pos.reserve(positives.size());
    batch.neg.reserve(positives.size() * static_cast<std::size_t>(k_neg));
    for (const auto& [side, t] : positives) {
        batch.pos.push_back({pair.entity_id(side, t.head), pair.relation_id(side, t.rel), pair.entity_id(side, t.tail)});
        for (const Triple& n : sample_negatives(t, pair.graph(side), k_neg, rng))
            batch.neg.push_back({pair.entity_id(side, n.head), pair.relation_id(side, n.rel), pair.entity_id(side, n.tail)});
    }
    return batch;
}

namespace {

Tape::Id triple_scores_node(Tape& tape, Tape::Id entity_emb, Tape::Id relation_emb,
                            const std::vector<std::array<int, 3>>& triples) {
    std::vector<int> h, r, t;
    h.reserve(triples.size());
    r.reserve(triples.size());
    t.reserve(triples.size());
    for (const auto& x : triples) {
        h.push_back(x[0]);
        r.push_back(x[1]);
        t.push_back(x[2]);
    }
    auto heads = tape.gather_rows(entity_emb, std::move(h));
    auto rels = tape.gather_rows(relation_emb, std::move(r));
    auto tails = tape.gather_rows(entity_emb, std::move(t));
    return tape.rows_l1_dist(tape.add(heads, rels), tails);
}

}  // namespace

Tape::Id translation_loss_node(Tape& tape, Tape::Id entity_emb, Tape::Id relation_emb, const TripleBatch& batch,
                               double gamma_t) {
    if (batch.pos.empty()) return tape.constant(Tensor::scalar(0.0));
    auto pos_scores = triple_scores_node(tape, entity_emb, relation_emb, batch.pos);
    auto neg_scores = triple_scores_node(tape, entity_emb, relation_emb, batch.neg);
    std::vector<int> rep(batch.neg.size());
    for (std::size_t i = 0; i < batch.neg.size(); ++i) rep[i] = static_cast<int>(i / static_cast<std::size_t>(batch.k));
    auto pos_rep = tape.gather_elems(pos_scores, std::move(rep));
    auto margin = tape.affine(tape.sub(pos_rep, neg_scores), 1.0, gamma_t);
    return tape.sum(tape.relu(margin));
}

Tape::Id mapping_loss_node(Tape& tape, Tape::Id entity_emb, const std::vector<std::pair<int, int>>& seed_rows) {
    if (seed_rows.empty()) return tape.constant(Tensor::scalar(0.0));
    std::vector<int> a, b;
    a.reserve(seed_rows.size());
    b.reserve(seed_rows.size());
    for (const auto& [s, t] : seed_rows) {
        a.push_back(s);
        b.push_back(t);
    }
    auto lhs = tape.gather_rows(entity_emb, std::move(a));
    auto rhs = tape.gather_rows(entity_emb, std::move(b));
    return tape.sum(tape.rows_l1_dist(lhs, rhs));
}

double translation_loss(const ParamStore& store, const TripleBatch& batch, double gamma_t) {
    Tape tape;
    TapeBinder binder(tape, store);
    return tape.scalar_value(
        translation_loss_node(tape, binder.param(kTransEntity), binder.param(kTransRelation), batch, gamma_t));
}

std::vector<std::pair<int, int>> seed_rows(const GraphPair& pair, const AlignmentLinks& seeds) {
    std::vector<std::pair<int, int>> rows;
    rows.reserve(seeds.size());
    for (const auto& [s, t] : seeds.pairs)
        rows.emplace_back(pair.entity_id(Side::source, s), pair.entity_id(Side::target, t));
    return rows;
}

double mapping_loss(const ParamStore& store, const GraphPair& pair, const AlignmentLinks& seeds) {
    Tape tape;
    TapeBinder binder(tape, store);
    return tape.scalar_value(mapping_loss_node(tape, binder.param(kTransEntity), seed_rows(pair, seeds)));
}

Tape::Id transitivity_total_loss_node(Tape& tape, TapeBinder& binder, const TripleBatch& batch,
                                      const std::vector<std::pair<int, int>>& seed_rows,
                                      const RecoveryBatch& recovery_batch, const TransitivityHyper& hyper,
                                      bool bce_negatives) {
    auto entity = binder.param(kTransEntity);
    auto relation = binder.param(kTransRelation);
    auto loss = translation_loss_node(tape, entity, relation, batch, hyper.gamma_t);
    auto tc = recovery_loss_node(tape, binder, entity, recovery_batch, bce_negatives);
    loss = tape.add(loss, tape.affine(tc, hyper.beta_tc, 0.0));
    auto tm = mapping_loss_node(tape, entity, seed_rows);
    return tape.add(loss, tape.affine(tm, hyper.beta_tm, 0.0));
}

double transitivity_total_loss(const ParamStore& store, const TripleBatch& batch,
                               const std::vector<std::pair<int, int>>& seed_rows,
                               const RecoveryBatch& recovery_batch, const TransitivityHyper& hyper,
                               bool bce_negatives) {
    Tape tape;
    TapeBinder binder(tape, store);
    return tape.scalar_value(
        transitivity_total_loss_node(tape, binder, batch, seed_rows, recovery_batch, hyper, bce_negatives));
}

}  // namespace ikami
