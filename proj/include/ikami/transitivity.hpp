#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ikami/graph_pair.hpp"
#include "ikami/param_store.hpp"

namespace ikami {

struct TransitivityHyper {
    double gamma_t = 1.0;   // translation margin
    double beta_tm = 50.0;  // mapping weight
    double beta_tc = 1.0;   // recovery-loss weight
    int k_neg = 5;          // negatives per positive
    double lr = 0.1;
    int batch_size = 1000;

    void validate() const;
};

// Manhattan distance (the channel's dissimilarity).
double manhattan_distance(std::span<const double> x, std::span<const double> y);

// Parameter table names used by checkpoints.
inline constexpr const char* kTransEntity = "trans.entity";
inline constexpr const char* kTransRelation = "trans.relation";

// Adds trans.entity [(|Vs|+|Vt|) x dim] and trans.relation
// [(|Rs|+|Rt|) x dim] to the store, Xavier-initialized.
void init_transitivity_params(ParamStore& store, const GraphPair& pair, int dim, std::uint64_t seed);

// Projects entity rows with L2 norm above 1 back onto the unit ball, the
// usual translation-embedding constraint that blocks the degenerate
// inflate-all-norms optimum of the margin loss.
void project_entity_ball(ParamStore& store);

// d_t(h_h + h_r, h_t) for one triple of one graph.
double translation_score(const ParamStore& store, const GraphPair& pair, Side side, const Triple& t);

// k corrupted triples with head xor tail replaced by a uniform entity of the
// same graph; never an existing triple. Throws after 100 failed resamples
// for one slot.
std::vector<Triple> sample_negatives(const Triple& triple, const KnowledgeGraph& kg, int k, Rng& rng);

// Positives paired with their frozen negatives, in shared-table ids.
struct TripleBatch {
    std::vector<std::array<int, 3>> pos;  // (entity, relation, entity) global rows
    std::vector<std::array<int, 3>> neg;  // pos.size() * k entries, grouped by positive
    int k = 0;
};

TripleBatch make_triple_batch(const GraphPair& pair, const std::vector<std::pair<Side, Triple>>& positives, int k_neg,
                              Rng& rng);

// Tape builders (shared by training and the finite-difference suite).
Tape::Id translation_loss_node(Tape& tape, Tape::Id entity_emb, Tape::Id relation_emb, const TripleBatch& batch,
                               double gamma_t);
Tape::Id mapping_loss_node(Tape& tape, Tape::Id entity_emb, const std::vector<std::pair<int, int>>& seed_rows);

// Convenience scalar evaluations.
double translation_loss(const ParamStore& store, const TripleBatch& batch, double gamma_t);
double mapping_loss(const ParamStore& store, const GraphPair& pair, const AlignmentLinks& seeds);

// Global-row view of the seed set for tape builders.
std::vector<std::pair<int, int>> seed_rows(const GraphPair& pair, const AlignmentLinks& seeds);

struct RecoveryBatch;  // recovery.hpp

// L_ts + beta_tc * L_tc + beta_tm * L_tm on one tape. Training applies the
// first two and the mapping term in separate optimizer phases; this combined
// form backs the gradient checks and tests.
Tape::Id transitivity_total_loss_node(Tape& tape, TapeBinder& binder, const TripleBatch& batch,
                                      const std::vector<std::pair<int, int>>& seed_rows,
                                      const RecoveryBatch& recovery_batch, const TransitivityHyper& hyper,
                                      bool bce_negatives = false);
double transitivity_total_loss(const ParamStore& store, const TripleBatch& batch,
                               const std::vector<std::pair<int, int>>& seed_rows,
                               const RecoveryBatch& recovery_batch, const TransitivityHyper& hyper,
                               bool bce_negatives = false);

}  // namespace ikami
