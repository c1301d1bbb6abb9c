#include "ikami/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "ikami/checkpoint.hpp"
#include "ikami/errors.hpp"
#include "ikami/proximity.hpp"
#include "ikami/transitivity.hpp"

namespace ikami {

namespace {

void split_links(const std::vector<std::pair<int, int>>& gold, const TrainingConfig& cfg, Rng& rng,
                 AlignmentLinks& train, AlignmentLinks& dev, AlignmentLinks& test) {
    std::vector<std::size_t> order(gold.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto n = gold.size();
    const auto n_train = static_cast<std::size_t>(std::llround(cfg.split_train * static_cast<double>(n)));
    const auto n_dev = static_cast<std::size_t>(std::llround(cfg.split_dev * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [s, t] = gold[order[i]];
        if (i < n_train)
            train.add(s, t, LinkOrigin::given_seed);
        else if (i < n_train + n_dev)
            dev.add(s, t, LinkOrigin::gold_eval);
        else
            test.add(s, t, LinkOrigin::gold_eval);
    }
}

void split_eval(const AlignmentLinks& eval, const TrainingConfig& cfg, AlignmentLinks& dev, AlignmentLinks& test) {
    const double dev_share = cfg.split_dev + cfg.split_test > 0.0
                                 ? cfg.split_dev / (cfg.split_dev + cfg.split_test)
                                 : 0.0;
    const auto n_dev = static_cast<std::size_t>(std::llround(dev_share * static_cast<double>(eval.size())));
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const auto& [s, t] = eval.pairs[i];
        (i < n_dev ? dev : test).add(s, t, LinkOrigin::gold_eval);
    }
}

}  // namespace

DataBundle prepare_data(const TrainingConfig& cfg) {
    cfg.validate();
    DataBundle data;
    Rng rng = Rng(cfg.seed).fork(0xDA7A);

    KnowledgeGraph raw_s, raw_t;
    if (cfg.synthetic) {
        SyntheticPair pair = synthesize_pair(cfg.synth_entities, cfg.synth_relations, cfg.synth_avg_degree,
                                             cfg.synth_removal_s, cfg.synth_removal_t, cfg.synth_seed_fraction,
                                             cfg.seed);
        raw_s = std::move(pair.source);
        raw_t = std::move(pair.target);
        data.train_seeds = std::move(pair.seeds);
        split_eval(pair.eval, cfg, data.dev_links, data.test_links);
        data.removed_source = std::move(pair.removed_source);
        data.removed_target = std::move(pair.removed_target);
    } else {
        raw_s = load_triples(cfg.source_triples);
        raw_t = load_triples(cfg.target_triples);
        if (!cfg.links.empty()) {
            AlignmentLinks gold = load_links(cfg.links, raw_s, raw_t, LinkOrigin::gold_eval);
            split_links(gold.pairs, cfg, rng, data.train_seeds, data.dev_links, data.test_links);
        } else {
            data.train_seeds = load_links(cfg.seed_links, raw_s, raw_t, LinkOrigin::given_seed);
            if (!cfg.eval_links.empty()) {
                AlignmentLinks eval = load_links(cfg.eval_links, raw_s, raw_t, LinkOrigin::gold_eval);
                split_eval(eval, cfg, data.dev_links, data.test_links);
            }
        }
    }
    if (data.train_seeds.size() == 0) throw ConfigError("training requires at least one seed link");
    if (data.dev_links.size() == 0 || data.test_links.size() == 0)
        throw ConfigError("dev and test link splits must be nonempty");

    data.pair.source = augment(raw_s);
    data.pair.target = augment(raw_t);

    std::optional<WordVectors> vectors;
    if (!cfg.vectors.empty()) vectors = WordVectors::load(cfg.vectors);
    auto fs = name_features(data.pair.source, vectors ? &*vectors : nullptr, cfg.dim_g, cfg.seed);
    auto ft = name_features(data.pair.target, vectors ? &*vectors : nullptr, cfg.dim_g, cfg.seed);
    data.feat_s = std::move(fs.rows);
    data.feat_t = std::move(ft.rows);
    data.provenance = fs.provenance;
    return data;
}

namespace {

struct BestState {
    double dev_mrr = -1.0;
    int epoch = 0;
    Tensor S, S_t, S_g;
    AlignmentLinks seeds;
    RecoveryLedger ledger_s, ledger_t;
    GraphPair pair;
    ParamStore params;
};

struct Channels {
    bool trans = false;
    bool prox = false;
    bool recovery = false;
};

class TrainLoop {
public:
    TrainLoop(const TrainingConfig& cfg)
        : cfg_(cfg),
          data_(prepare_data(cfg)),
          rng_(Rng(cfg.seed).fork(0x7261696eULL)),
          seeds_(data_.train_seeds) {
        ch_.trans = cfg.transitivity_channel;
        ch_.prox = cfg.proximity_channel;
        ch_.recovery = cfg.recovery && ch_.trans;

        if (ch_.trans) {
            init_transitivity_params(store_, data_.pair, cfg.dim_t, cfg.seed);
            init_recovery_params(store_, cfg.dim_t, cfg.seed);
        }
        if (ch_.prox) {
            init_proximity_params(store_, data_.pair, cfg.dim_g, cfg.gnn_layers, cfg.seed);
            rebuild_edges();
        }

        thyper_.gamma_t = cfg.gamma_t;
        thyper_.beta_tm = cfg.beta_tm;
        thyper_.beta_tc = cfg.beta_tc;
        thyper_.k_neg = cfg.k_neg_t;
        thyper_.lr = cfg.lr_t;
        thyper_.batch_size = cfg.batch_size;
        thyper_.validate();
        ghyper_.gamma_g = cfg.gamma_g;
        ghyper_.beta_g = ch_.trans ? cfg.beta_g : 0.0;  // no transfer target without the other channel
        ghyper_.k_neg = cfg.k_neg_g;
        ghyper_.lr = cfg.lr_g;
        ghyper_.leaky_slope = cfg.leaky_slope;
        ghyper_.layers = cfg.gnn_layers;
        ghyper_.uniform_attention = cfg.uniform_attention;
        ghyper_.validate();
        rhyper_.k_neg = cfg.rec_k_neg;
        rhyper_.sample_size = cfg.rec_sample_size;
        rhyper_.permanence = cfg.rec_permanence;
        rhyper_.bce_negatives = cfg.bce_negatives;
        rhyper_.validate();
    }

    TrainResult run() {
        evaluate_step(0);
        for (int epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
            if (ch_.trans) transitivity_epoch(epoch);
            if (ch_.prox) proximity_epoch();
            if (epoch % cfg_.eval_step == 0) {
                evaluate_step(epoch);
                if (early_stop(dev_mrr_history_, cfg_.patience)) break;
            }
        }
        return finish();
    }

    const ParamStore& store() const { return store_; }

private:
    void rebuild_edges() {
        edges_s_ = build_edge_list(data_.pair.source);
        edges_t_ = build_edge_list(data_.pair.target);
    }

    int effective_nominate_c() const {
        if (cfg_.nominate_c >= 0) return cfg_.nominate_c;
        return std::max(1, static_cast<int>(std::llround(0.05 * static_cast<double>(data_.pair.source.num_entities()))));
    }

    void transitivity_epoch(int epoch) {
        (void)epoch;
        // phase 1: translation + detector over shuffled batches
        std::vector<std::pair<Side, Triple>> pool;
        for (Side side : {Side::source, Side::target})
            for (const Triple& t : data_.pair.graph(side).triples()) pool.emplace_back(side, t);
        rng_.shuffle(pool);

        std::vector<std::pair<Side, std::pair<int, int>>> pairs_pool;
        if (ch_.recovery && thyper_.beta_tc > 0.0) {
            for (Side side : {Side::source, Side::target})
                for (const auto& pq : connected_pairs(data_.pair.graph(side))) pairs_pool.emplace_back(side, pq);
            rng_.shuffle(pairs_pool);
        }

        const auto n_batches =
            (pool.size() + static_cast<std::size_t>(thyper_.batch_size) - 1) / static_cast<std::size_t>(thyper_.batch_size);
        double loss_acc = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t lo = b * static_cast<std::size_t>(thyper_.batch_size);
            const std::size_t hi = std::min(pool.size(), lo + static_cast<std::size_t>(thyper_.batch_size));
            std::vector<std::pair<Side, Triple>> slice(pool.begin() + static_cast<std::ptrdiff_t>(lo),
                                                       pool.begin() + static_cast<std::ptrdiff_t>(hi));
            TripleBatch tb = make_triple_batch(data_.pair, slice, thyper_.k_neg, rng_);

            RecoveryBatch rb;
            if (!pairs_pool.empty()) {
                const std::size_t plo = b * pairs_pool.size() / n_batches;
                const std::size_t phi = (b + 1) * pairs_pool.size() / n_batches;
                for (Side side : {Side::source, Side::target}) {
                    std::vector<std::pair<int, int>> local;
                    for (std::size_t i = plo; i < phi; ++i)
                        if (pairs_pool[i].first == side) local.push_back(pairs_pool[i].second);
                    RecoveryBatch part = sample_recovery_batch(data_.pair, side, local, rhyper_.k_neg, rng_);
                    const int base = static_cast<int>(rb.pos.size());
                    rb.pos.insert(rb.pos.end(), part.pos.begin(), part.pos.end());
                    rb.neg.insert(rb.neg.end(), part.neg.begin(), part.neg.end());
                    for (int owner : part.neg_owner) rb.neg_owner.push_back(base + owner);
                }
            }

            Tape tape;
            TapeBinder binder(tape, store_);
            auto entity = binder.param(kTransEntity);
            auto relation = binder.param(kTransRelation);
            auto loss = translation_loss_node(tape, entity, relation, tb, thyper_.gamma_t);
            if (!rb.pos.empty()) {
                // detached embeddings: the detector term updates only rec.*
                auto frozen_entity = binder.frozen(kTransEntity);
                auto tc = recovery_loss_node(tape, binder, frozen_entity, rb, rhyper_.bce_negatives);
                loss = tape.add(loss, tape.affine(tc, thyper_.beta_tc, 0.0));
            }
            loss_acc += tape.scalar_value(loss);
            tape.backward(loss);
            std::map<std::string, Tensor> grads;
            binder.collect_grads(grads);
            std::map<std::string, Tensor> rec_grads;
            for (auto it = grads.begin(); it != grads.end();) {
                if (it->first.rfind("rec.", 0) == 0) {
                    rec_grads.insert(*it);
                    it = grads.erase(it);
                } else {
                    ++it;
                }
            }
            store_.adam_step(grads, thyper_.lr);
            if (!rec_grads.empty()) store_.adam_step(rec_grads, cfg_.rec_lr);
            project_entity_ball(store_);
        }

        // phase 2: the seed mapping term
        {
            Tape tape;
            TapeBinder binder(tape, store_);
            auto tm = mapping_loss_node(tape, binder.param(kTransEntity), seed_rows(data_.pair, seeds_));
            auto loss = tape.affine(tm, thyper_.beta_tm, 0.0);
            loss_acc += tape.scalar_value(loss);
            if (tape.value(loss)[0] != 0.0 || !seeds_.pairs.empty()) {
                tape.backward(loss);
                std::map<std::string, Tensor> grads;
                binder.collect_grads(grads);
                store_.adam_step(grads, thyper_.lr);
                project_entity_ball(store_);
            }
        }
        last_loss_t_ = loss_acc;
    }

    void proximity_epoch() {
        ProximityLossData ldata{data_.pair, edges_s_, edges_t_, data_.feat_s, data_.feat_t,
                                seeds_,     gmm_negatives_, dct_};
        std::map<std::string, Tensor> grads;
        last_loss_g_ = proximity_total_loss(store_, ldata, ghyper_, &grads);
        store_.adam_step(grads, ghyper_.lr);
    }

    // S_g plus the final embeddings the negatives are mined from.
    void proximity_snapshot(Tensor& emb_s, Tensor& emb_t, Tensor& s_g) {
        Tape tape;
        TapeBinder binder(tape, store_);
        auto fwd = proximity_forward(tape, binder, data_.pair, edges_s_, edges_t_, data_.feat_s, data_.feat_t,
                                     ghyper_);
        emb_s = tape.value(fwd.entity_src);
        emb_t = tape.value(fwd.entity_tgt);
        s_g = similarity_matrix(emb_s, emb_t, cfg_.threads);
    }

    Tensor transitivity_similarity() const {
        const Tensor& ent = store_.get(kTransEntity);
        const std::int64_t ns = static_cast<std::int64_t>(data_.pair.source.num_entities());
        const std::int64_t nt = static_cast<std::int64_t>(data_.pair.target.num_entities());
        const std::int64_t d = ent.cols();
        Tensor src({ns, d}), tgt({nt, d});
        for (std::int64_t i = 0; i < ns; ++i)
            for (std::int64_t c = 0; c < d; ++c) src.at(i, c) = ent.at(i, c);
        const std::int64_t off = data_.pair.entity_offset(Side::target);
        for (std::int64_t i = 0; i < nt; ++i)
            for (std::int64_t c = 0; c < d; ++c) tgt.at(i, c) = ent.at(off + i, c);
        return similarity_matrix(src, tgt, cfg_.threads);
    }

    void evaluate_step(int epoch) {
        Tensor emb_s, emb_t, s_g, s_t;
        if (ch_.prox) proximity_snapshot(emb_s, emb_t, s_g);
        if (ch_.trans) s_t = transitivity_similarity();

        Tensor S;
        if (ch_.trans && ch_.prox)
            S = fuse(s_t, s_g, cfg_.beta_tg);
        else if (ch_.trans)
            S = s_t;
        else
            S = s_g;

        const EvalMetrics dev = evaluate(S, data_.dev_links);
        EvalRow row;
        row.epoch = epoch;
        row.metrics = dev;
        row.seeds_total = static_cast<int>(seeds_.size());
        row.seeds_bootstrapped = static_cast<int>(std::count(seeds_.origins.begin(), seeds_.origins.end(),
                                                             LinkOrigin::bootstrapped));
        row.filled_source = static_cast<int>(ledger_s_.size());
        row.filled_target = static_cast<int>(ledger_t_.size());
        row.loss_t = last_loss_t_;
        row.loss_g = last_loss_g_;
        history_.push_back(row);
        dev_mrr_history_.push_back(dev.mrr);

        if (epoch > 0) {
            // Nomination may pair unlabeled (test-side) entities freely; only
            // the dev pairs consulted for early stopping are off limits.
            if (cfg_.seed_update)
                nominate_and_update_seeds(nominations_, S, effective_nominate_c(), cfg_.nominate_n, seeds_,
                                          data_.dev_links);
            if (ch_.recovery && epoch >= cfg_.rec_start_epoch) {
                bool mutated = false;
                for (Side side : {Side::source, Side::target}) {
                    RecoveryLedger& ledger = side == Side::source ? ledger_s_ : ledger_t_;
                    const Thresholds th = compute_thresholds(data_.pair, side, store_);
                    const auto before = data_.pair.graph(side).num_triples();
                    const auto filled = propose_and_fill(data_.pair, side, store_, th, rhyper_.sample_size,
                                                         epoch, ledger, rng_);
                    const auto before_correct = ledger.size();
                    correct_false_links(data_.pair, side, store_, th, rhyper_.permanence, ledger);
                    if (std::getenv("IKAMI_TRACE"))
                        std::fprintf(stderr,
                                     "[recovery] epoch=%d side=%d nu=%.4f eta=%.4f proposed=%zu pruned=%zu "
                                     "ledger=%zu\n",
                                     epoch, side == Side::source ? 0 : 1, th.nu, th.eta, filled.size(),
                                     before_correct - ledger.size(), ledger.size());
                    mutated = mutated || data_.pair.graph(side).num_triples() != before;
                }
                if (mutated && ch_.prox) rebuild_edges();
            }
        }

        if (ch_.prox) gmm_negatives_ = negative_pairs(seeds_, emb_s, emb_t, ghyper_.k_neg);
        if (ch_.trans && ch_.prox && ghyper_.beta_g > 0.0)
            dct_ = cosine_distance_matrix(store_.get(kTransRelation),
                                          transferable_relation_rows(data_.pair, Side::source),
                                          transferable_relation_rows(data_.pair, Side::target));

        // ties prefer the later epoch: more training at equal dev quality
        if (dev.mrr >= best_.dev_mrr) {
            best_.dev_mrr = dev.mrr;
            best_.epoch = epoch;
            best_.S = S;
            best_.S_t = s_t;
            best_.S_g = s_g;
            best_.seeds = seeds_;
            best_.ledger_s = ledger_s_;
            best_.ledger_t = ledger_t_;
            best_.pair = data_.pair;
            best_.params = store_;
        }
    }

    TrainResult finish() {
        TrainResult result;
        result.S = best_.S;
        result.S_t = best_.S_t;
        result.S_g = best_.S_g;
        result.seeds = best_.seeds;
        result.ledger_source = best_.ledger_s;
        result.ledger_target = best_.ledger_t;
        result.pair = best_.pair;
        result.params = best_.params;
        result.history = history_;
        result.best_epoch = best_.epoch;
        result.dev_links = data_.dev_links;
        result.test_links = data_.test_links;
        result.removed_source = data_.removed_source;
        result.removed_target = data_.removed_target;

        EvalRow final_row;
        final_row.epoch = best_.epoch;
        final_row.metrics = evaluate(best_.S, data_.test_links);
        final_row.seeds_total = static_cast<int>(best_.seeds.size());
        final_row.seeds_bootstrapped = static_cast<int>(std::count(best_.seeds.origins.begin(),
                                                                   best_.seeds.origins.end(),
                                                                   LinkOrigin::bootstrapped));
        final_row.filled_source = static_cast<int>(best_.ledger_s.size());
        final_row.filled_target = static_cast<int>(best_.ledger_t.size());
        result.final_row = final_row;
        result.recovery_report = score_recovery(result);
        return result;
    }

    TrainingConfig cfg_;
    DataBundle data_;
    Rng rng_;
    ParamStore store_;
    Channels ch_;
    TransitivityHyper thyper_;
    ProximityHyper ghyper_;
    RecoveryHyper rhyper_;

    GnnEdgeList edges_s_, edges_t_;
    AlignmentLinks seeds_;
    NominationState nominations_;
    RecoveryLedger ledger_s_, ledger_t_;
    NegativePairSet gmm_negatives_;
    Tensor dct_;
    double last_loss_t_ = 0.0;
    double last_loss_g_ = 0.0;

    std::vector<EvalRow> history_;
    std::vector<double> dev_mrr_history_;
    BestState best_;
};

}  // namespace

TrainResult train(const TrainingConfig& config, const std::optional<std::string>& diagnostic_path) {
    TrainLoop loop(config);
    try {
        return loop.run();
    } catch (const NonFiniteError&) {
        if (diagnostic_path) {
            nlohmann::json sidecar{{"config", config.to_json()}, {"diagnostic", true}};
            save_checkpoint(*diagnostic_path, loop.store(), sidecar);
        }
        throw;
    }
}

KgcMetrics kgc_evaluate(const GraphPair& pair, Side side, const std::vector<Triple>& removed,
                        const ParamStore& params) {
    if (removed.empty()) throw ConfigError("kgc_evaluate: empty removed set");
    const KnowledgeGraph& kg = pair.graph(side);
    const int nv = static_cast<int>(kg.num_entities());

    std::set<Triple> known(removed.begin(), removed.end());
    for (const Triple& t : kg.triples()) known.insert(t);

    KgcMetrics m;
    auto score = [&](const Triple& t) { return translation_score(params, pair, side, t); };
    auto rank_of = [&](const Triple& query, bool tail_side) {
        const double gold = score(query);
        const int gold_idx = tail_side ? query.tail : query.head;
        std::int64_t rank = 1;
        for (int cand = 0; cand < nv; ++cand) {
            if (cand == gold_idx) continue;
            Triple probe = query;
            (tail_side ? probe.tail : probe.head) = cand;
            if (known.count(probe)) continue;  // filtered setting
            const double v = score(probe);
            if (v < gold || (v == gold && cand < gold_idx)) ++rank;
        }
        return rank;
    };

    for (const Triple& t : removed) {
        for (bool tail_side : {true, false}) {
            const auto rank = rank_of(t, tail_side);
            m.hit1 += rank == 1 ? 1.0 : 0.0;
            m.mrr += 1.0 / static_cast<double>(rank);
            m.queries += 1;
        }
    }
    m.hit1 /= static_cast<double>(m.queries);
    m.mrr /= static_cast<double>(m.queries);
    return m;
}

RecoveryReport score_recovery(const TrainResult& result) {
    RecoveryReport report;
    report.filled_source = static_cast<int>(result.ledger_source.size());
    report.filled_target = static_cast<int>(result.ledger_target.size());
    if (result.removed_source.empty() && result.removed_target.empty()) return report;

    report.gold_known = true;
    std::set<Triple> gold_s(result.removed_source.begin(), result.removed_source.end());
    std::set<Triple> gold_t(result.removed_target.begin(), result.removed_target.end());
    int matched = 0;
    for (const LedgerEntry& e : result.ledger_source.entries) matched += gold_s.count(e.triple) ? 1 : 0;
    for (const LedgerEntry& e : result.ledger_target.entries) matched += gold_t.count(e.triple) ? 1 : 0;
    const int filled = report.filled_source + report.filled_target;
    const auto total_removed = result.removed_source.size() + result.removed_target.size();
    report.precision = filled > 0 ? static_cast<double>(matched) / filled : 1.0;
    report.recall = total_removed > 0 ? static_cast<double>(matched) / static_cast<double>(total_removed) : 0.0;
    return report;
}

}  // namespace ikami
