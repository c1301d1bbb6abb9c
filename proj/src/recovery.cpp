#include "ikami/recovery.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ikami/errors.hpp"
#include "ikami/transitivity.hpp"

namespace ikami {

namespace {
constexpr double kLeakySlope = 0.05;
constexpr double kProbClamp = 1e-7;

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}  // namespace

void RecoveryHyper::validate() const {
    if (k_neg < 0) throw ConfigError("recovery k_neg must be nonnegative");
    if (sample_size < 1) throw ConfigError("recovery sample_size must be positive");
    if (permanence < 0) throw ConfigError("recovery permanence must be nonnegative");
}

void init_recovery_params(ParamStore& store, int dim_t, std::uint64_t seed) {
    if (dim_t < 1) throw ConfigError("recovery MLP dim must be positive");
    store.add(kRecW1, init_xavier({dim_t, 2 * dim_t}, seed ^ 0x6d6c7031ULL));
    store.add(kRecB1, Tensor::zeros({dim_t}));
    store.add(kRecW2, init_xavier({1, dim_t}, seed ^ 0x6d6c7032ULL));
    store.add(kRecB2, Tensor::zeros({1}));
}

std::vector<double> edge_probabilities(const ParamStore& store, const std::vector<std::pair<int, int>>& pairs) {
    const Tensor& ent = store.get(kTransEntity);
    const Tensor& w1 = store.get(kRecW1);
    const Tensor& b1 = store.get(kRecB1);
    const Tensor& w2 = store.get(kRecW2);
    const Tensor& b2 = store.get(kRecB2);
    const std::int64_t d = ent.cols();
    const std::int64_t n = static_cast<std::int64_t>(pairs.size());

    EMat x(n, 2 * d);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& [p, q] = pairs[static_cast<std::size_t>(i)];
        for (std::int64_t c = 0; c < d; ++c) {
            x(i, c) = ent.at(p, c);
            x(i, d + c) = ent.at(q, c);
        }
    }
    Eigen::Map<const EMat> mw1(w1.data(), d, 2 * d);
    Eigen::Map<const EMat> mw2(w2.data(), 1, d);
    EMat h = x * mw1.transpose();
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t c = 0; c < d; ++c) {
            const double v = h(i, c) + b1[c];
            h(i, c) = v > 0.0 ? v : kLeakySlope * v;
        }
    EMat z = h * mw2.transpose();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double v = z(i, 0) + b2[0];
        out[static_cast<std::size_t>(i)] =
            v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return out;
}

double edge_probability(const ParamStore& store, int p_row, int q_row) {
    return edge_probabilities(store, {{p_row, q_row}})[0];
}

std::vector<std::pair<int, int>> connected_pairs(const KnowledgeGraph& kg) {
    std::vector<std::pair<int, int>> out;
    std::unordered_set<std::uint64_t> seen;
    for (const Triple& t : kg.triples()) {
        if (kg.relation_kind(t.rel) != RelationKind::original) continue;
        const std::uint64_t key = (static_cast<std::uint64_t>(t.head) << 32) | static_cast<std::uint64_t>(t.tail);
        if (seen.insert(key).second) out.emplace_back(t.head, t.tail);
    }
    return out;
}

RecoveryBatch sample_recovery_batch(const GraphPair& pair, Side side,
                                    const std::vector<std::pair<int, int>>& connected_local, int k_neg, Rng& rng) {
    const KnowledgeGraph& kg = pair.graph(side);
    const int off = pair.entity_offset(side);
    const std::size_t nv = kg.num_entities();
    RecoveryBatch batch;
    batch.pos.reserve(connected_local.size());
    for (std::size_t i = 0; i < connected_local.size(); ++i) {
        const auto& [p, q] = connected_local[i];
        batch.pos.emplace_back(off + p, off + q);
        // Non-neighbor negatives for p; skip the term when p touches everyone.
        const auto& nbrs = kg.neighbor_entities(p);
        if (nbrs.size() >= nv) continue;
        for (int s = 0; s < k_neg; ++s) {
            bool ok = false;
            for (int attempt = 0; attempt < 100; ++attempt) {
                const int cand = rng.index(nv);
                if (cand == p || kg.is_neighbor(p, cand)) continue;
                batch.neg.emplace_back(off + p, off + cand);
                batch.neg_owner.push_back(static_cast<int>(i));
                ok = true;
                break;
            }
            if (!ok) {
                // Dense neighborhood: fall back to the explicit complement.
                std::vector<int> complement;
                for (int e = 0; e < static_cast<int>(nv); ++e)
                    if (e != p && !kg.is_neighbor(p, e)) complement.push_back(e);
                if (complement.empty()) break;
                const int cand = complement[static_cast<std::size_t>(rng.index(complement.size()))];
                batch.neg.emplace_back(off + p, off + cand);
                batch.neg_owner.push_back(static_cast<int>(i));
            }
        }
    }
    return batch;
}

namespace {

Tape::Id probabilities_node(Tape& tape, TapeBinder& binder, Tape::Id entity_emb,
                            const std::vector<std::pair<int, int>>& pairs) {
    std::vector<int> a, b;
    a.reserve(pairs.size());
    b.reserve(pairs.size());
    for (const auto& [p, q] : pairs) {
        a.push_back(p);
        b.push_back(q);
    }
    auto x = tape.concat_cols({tape.gather_rows(entity_emb, std::move(a)), tape.gather_rows(entity_emb, std::move(b))});
    auto h = tape.leaky_relu(tape.add_rowvec(tape.matmul_nt(x, binder.param(kRecW1)), binder.param(kRecB1)),
                             kLeakySlope);
    auto z = tape.add_rowvec(tape.matmul_nt(h, binder.param(kRecW2)), binder.param(kRecB2));
    return tape.clamp(tape.sigmoid(z), kProbClamp, 1.0 - kProbClamp);
}

}  // namespace

Tape::Id recovery_loss_node(Tape& tape, TapeBinder& binder, Tape::Id entity_emb, const RecoveryBatch& batch,
                            bool bce_negatives) {
    if (batch.pos.empty()) return tape.constant(Tensor::scalar(0.0));
    auto pos_p = probabilities_node(tape, binder, entity_emb, batch.pos);
    auto loss = tape.affine(tape.sum(tape.log_op(pos_p)), -1.0, 0.0);
    if (!batch.neg.empty()) {
        auto neg_p = probabilities_node(tape, binder, entity_emb, batch.neg);
        if (bce_negatives) {
            // -log(1 - p) on negatives (the standard cross-entropy reading)
            auto one_minus = tape.affine(neg_p, -1.0, 1.0);
            loss = tape.add(loss, tape.affine(tape.sum(tape.log_op(one_minus)), -1.0, 0.0));
        } else {
            // +log(p) as printed
            loss = tape.add(loss, tape.sum(tape.log_op(neg_p)));
        }
    }
    return loss;
}

double recovery_loss(const ParamStore& store, const RecoveryBatch& batch, bool bce_negatives) {
    Tape tape;
    TapeBinder binder(tape, store);
    return tape.scalar_value(
        recovery_loss_node(tape, binder, binder.param(kTransEntity), batch, bce_negatives));
}

Thresholds compute_thresholds(const GraphPair& pair, Side side, const ParamStore& store) {
    const KnowledgeGraph& kg = pair.graph(side);
    const auto originals = kg.original_triples();
    if (originals.empty()) throw ConfigError("compute_thresholds: graph has no original triples");

    const int off = pair.entity_offset(side);
    auto pairs_local = connected_pairs(kg);
    std::vector<std::pair<int, int>> rows;
    rows.reserve(pairs_local.size());
    for (const auto& [p, q] : pairs_local) rows.emplace_back(off + p, off + q);
    const auto probs = edge_probabilities(store, rows);

    Thresholds th;
    for (double p : probs) th.nu += p;
    th.nu /= static_cast<double>(probs.size());
    for (const Triple& t : originals) th.eta += translation_score(store, pair, side, t);
    th.eta /= static_cast<double>(originals.size());
    return th;
}

std::vector<Triple> propose_and_fill(GraphPair& pair, Side side, const ParamStore& store, const Thresholds& th,
                                     int sample_size, int epoch, RecoveryLedger& ledger, Rng& rng) {
    KnowledgeGraph& kg = pair.graph(side);
    const int off = pair.entity_offset(side);
    const std::size_t nv = kg.num_entities();
    const auto sample = rng.sample_without_replacement(nv, static_cast<std::size_t>(sample_size));

    // Direction-specific original adjacency for the "no existing triple p->q" guard.
    std::unordered_set<std::uint64_t> existing;
    for (const Triple& t : kg.triples())
        if (kg.relation_kind(t.rel) == RelationKind::original)
            existing.insert((static_cast<std::uint64_t>(t.head) << 32) | static_cast<std::uint64_t>(t.tail));

    std::vector<std::pair<int, int>> cand;
    for (int p : sample)
        for (int q : sample) {
            if (p == q) continue;
            if (existing.count((static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint64_t>(q))) continue;
            cand.emplace_back(p, q);
        }

    std::vector<std::pair<int, int>> rows;
    rows.reserve(cand.size());
    for (const auto& [p, q] : cand) rows.emplace_back(off + p, off + q);
    const auto probs = rows.empty() ? std::vector<double>{} : edge_probabilities(store, rows);

    const auto original_rels = kg.relation_indices(RelationKind::original);
    std::vector<Triple> filled;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (probs[i] < th.nu) continue;
        const auto& [p, q] = cand[i];
        for (int r : original_rels) {
            const Triple t{p, r, q};
            if (translation_score(store, pair, side, t) > th.eta) continue;
            const Triple inv{q, kg.paired_relation(r), p};
            if (!kg.insert_triple(t)) continue;
            kg.insert_triple(inv);
            ledger.entries.push_back({t, inv, 0, false, epoch});
            filled.push_back(t);
        }
    }
    if (!filled.empty()) kg.rebuild_neighbor_index();
    return filled;
}

void correct_false_links(GraphPair& pair, Side side, const ParamStore& store, const Thresholds& th, int permanence,
                         RecoveryLedger& ledger) {
    KnowledgeGraph& kg = pair.graph(side);
    const int off = pair.entity_offset(side);
    std::vector<LedgerEntry> kept;
    kept.reserve(ledger.entries.size());
    bool mutated = false;
    for (LedgerEntry entry : ledger.entries) {
        if (entry.permanent) {
            kept.push_back(entry);
            continue;
        }
        const double dissim = translation_score(store, pair, side, entry.triple);
        const double prob = edge_probability(store, off + entry.triple.head, off + entry.triple.tail);
        if (dissim > th.eta || prob < th.nu) {
            kg.erase_triple(entry.triple);
            kg.erase_triple(entry.inverse);
            mutated = true;
            continue;
        }
        entry.passes += 1;
        if (entry.passes > permanence) entry.permanent = true;
        kept.push_back(entry);
    }
    ledger.entries = std::move(kept);
    if (mutated) kg.rebuild_neighbor_index();
}

}  // namespace ikami
