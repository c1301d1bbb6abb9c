#pragma once

#include <cstdint>
#include <vector>

#include "ikami/graph_pair.hpp"
#include "ikami/param_store.hpp"

namespace ikami {

struct RecoveryHyper {
    int k_neg = 5;          // non-neighbor negatives per connected pair
    int sample_size = 200;  // |V'| cap per proposal sweep
    int permanence = 3;     // consecutive passes before a fill becomes permanent
    bool bce_negatives = false;  // +log(1-p) on negatives instead of +log(p)

    void validate() const;
};

inline constexpr const char* kRecW1 = "rec.W1";
inline constexpr const char* kRecB1 = "rec.b1";
inline constexpr const char* kRecW2 = "rec.W2";
inline constexpr const char* kRecB2 = "rec.b2";

// 2-layer detector MLP over concatenated transitivity embeddings:
// sigmoid(W2 LeakyReLU(W1 [h_p || h_q] + b1) + b2), slope 0.05.
void init_recovery_params(ParamStore& store, int dim_t, std::uint64_t seed);

// Batched detector probabilities; pairs are shared-entity-table rows.
std::vector<double> edge_probabilities(const ParamStore& store, const std::vector<std::pair<int, int>>& pairs);
double edge_probability(const ParamStore& store, int p_row, int q_row);

// Connected pairs plus frozen non-neighbor negatives for the detector loss.
struct RecoveryBatch {
    std::vector<std::pair<int, int>> pos;      // global rows
    std::vector<std::pair<int, int>> neg;      // grouped: k consecutive per positive (possibly fewer)
    std::vector<int> neg_owner;                // index into pos for each negative
};

// Unique (head, tail) pairs of original-kind triples, direction as stored.
std::vector<std::pair<int, int>> connected_pairs(const KnowledgeGraph& kg);

RecoveryBatch sample_recovery_batch(const GraphPair& pair, Side side,
                                    const std::vector<std::pair<int, int>>& connected_local, int k_neg, Rng& rng);

// Detector loss over the batch. As printed the negative term is +log(p);
// probabilities are clamped into [1e-7, 1-1e-7] before logs. With
// bce_negatives the negative term becomes -log(1-p). The training loop
// feeds the MLP a detached copy of the embeddings (the loss trains the
// detector, and its saturating log terms otherwise crush the translation
// geometry the detector reads); pass the entity leaf directly to
// differentiate through the embeddings as well.
Tape::Id recovery_loss_node(Tape& tape, TapeBinder& binder, Tape::Id entity_emb, const RecoveryBatch& batch,
                            bool bce_negatives);
double recovery_loss(const ParamStore& store, const RecoveryBatch& batch, bool bce_negatives);

struct Thresholds {
    double nu = 0.0;   // mean detector probability over connected pairs
    double eta = 0.0;  // mean translation dissimilarity over original triples
};

Thresholds compute_thresholds(const GraphPair& pair, Side side, const ParamStore& store);

struct LedgerEntry {
    Triple triple;    // original-kind fill (local ids)
    Triple inverse;   // derived inverse fill
    int passes = 0;   // consecutive successful checks
    bool permanent = false;
    int filled_epoch = 0;
};

struct RecoveryLedger {
    std::vector<LedgerEntry> entries;
    std::size_t size() const { return entries.size(); }
};

// Scans ordered pairs of a uniform entity sample; pairs passing the nu
// detector threshold get every original relation whose translation residual
// is within eta filled (inverse derived alongside). Returns the new fills.
std::vector<Triple> propose_and_fill(GraphPair& pair, Side side, const ParamStore& store, const Thresholds& th,
                                     int sample_size, int epoch, RecoveryLedger& ledger, Rng& rng);

// Re-checks non-permanent fills against fresh thresholds; failures are
// removed together with their inverses, survivors past `permanence`
// consecutive passes stop being checked.
void correct_false_links(GraphPair& pair, Side side, const ParamStore& store, const Thresholds& th, int permanence,
                         RecoveryLedger& ledger);

}  // namespace ikami
