#pragma once

#include <map>
#include <vector>

#include "ikami/kg.hpp"
#include "ikami/tensor.hpp"

namespace ikami {

// Row-wise cosine similarity between two embedding tables; rows that are
// all-zero get similarity 0. Row computation parallelizes across
// IKAMI_THREADS workers (the result does not depend on the thread count).
Tensor similarity_matrix(const Tensor& emb_s, const Tensor& emb_t, int threads = 1);

// Convex combination beta*St + (1-beta)*Sg.
Tensor fuse(const Tensor& s_t, const Tensor& s_g, double beta_tg);

struct MatchPair {
    int src;
    int tgt;
    double score;
};

// Descending-score greedy matching; ties break on (lower src, lower tgt).
// Output order is acceptance order (also descending by score).
std::vector<MatchPair> greedy_match(const Tensor& s);

struct EvalMetrics {
    double hit1 = 0.0;
    double hit10 = 0.0;
    double mrr = 0.0;
    double mr = 0.0;
};

// Left-to-right ranking of each gold pair's target among all columns;
// ties rank the lower index first.
EvalMetrics evaluate(const Tensor& s, const AlignmentLinks& gold);

// True when the last two evaluations both failed to exceed the running best.
bool early_stop(const std::vector<double>& dev_metric_history, int patience = 2);

// Consecutive-nomination bookkeeping for seed bootstrapping.
struct NominationState {
    std::map<std::pair<int, int>, int> counts;
};

// Takes the top-c greedy pairs (skipping pairs that reuse a seeded entity
// or that equal an eval pair), bumps their consecutive counts, resets
// everyone else, and adopts pairs reaching n as bootstrapped seeds.
// Returns the newly adopted pairs.
std::vector<std::pair<int, int>> nominate_and_update_seeds(NominationState& state, const Tensor& s, int c, int n,
                                                           AlignmentLinks& seeds, const AlignmentLinks& eval_pairs);

}  // namespace ikami
