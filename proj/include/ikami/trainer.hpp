#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ikami/alignment.hpp"
#include "ikami/config.hpp"
#include "ikami/graph_pair.hpp"
#include "ikami/name_features.hpp"
#include "ikami/param_store.hpp"
#include "ikami/recovery.hpp"
#include "ikami/report.hpp"

namespace ikami {

struct DataBundle {
    GraphPair pair;  // augmented working graphs
    Tensor feat_s;
    Tensor feat_t;
    FeatureProvenance provenance = FeatureProvenance::hashed_fallback;
    AlignmentLinks train_seeds;
    AlignmentLinks dev_links;
    AlignmentLinks test_links;
    std::vector<Triple> removed_source;  // gold removals when known
    std::vector<Triple> removed_target;
};

// Loads or synthesizes the KG pair, augments both graphs, builds name
// features, and splits the gold links (70/10/20 by default when a single
// links file is given; a provided seed/eval split keeps seeds for training
// and divides eval into dev/test by the configured ratio).
DataBundle prepare_data(const TrainingConfig& config);

struct TrainResult {
    Tensor S, S_t, S_g;  // best-dev-MRR state
    AlignmentLinks seeds;
    RecoveryLedger ledger_source, ledger_target;
    GraphPair pair;     // working graphs at the best state (fills applied)
    ParamStore params;  // best parameters
    std::vector<EvalRow> history;
    EvalRow final_row;  // test metrics of the best state
    int best_epoch = 0;
    RecoveryReport recovery_report;
    AlignmentLinks dev_links, test_links;
    std::vector<Triple> removed_source, removed_target;
};

// Full training loop: per epoch a two-phase transitivity update and a
// proximity update; every eval_step epochs fusion, dev evaluation, seed
// nomination, triple recovery, and the early-stopping check. Returns the
// historical best-dev-MRR state. A non-finite loss aborts after writing a
// diagnostic checkpoint to `diagnostic_path` (when given).
TrainResult train(const TrainingConfig& config, const std::optional<std::string>& diagnostic_path = std::nullopt);

struct KgcMetrics {
    double hit1 = 0.0;
    double mrr = 0.0;
    int queries = 0;
};

// Filtered link-prediction ranking of the removed triples under the
// transitivity embeddings: tails given (h, r) and heads given (r, t), both
// directions averaged. Candidates forming a known true triple (working set
// or another removed triple) are skipped.
KgcMetrics kgc_evaluate(const GraphPair& pair, Side side, const std::vector<Triple>& removed,
                        const ParamStore& params);

// Ledger fills scored against the gold removed set (original direction).
RecoveryReport score_recovery(const TrainResult& result);

}  // namespace ikami
