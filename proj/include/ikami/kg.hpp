#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ikami/rng.hpp"

namespace ikami {

enum class RelationKind { original, inverse, self_loop };

struct Triple {
    int head = 0;
    int rel = 0;
    int tail = 0;
    bool operator==(const Triple&) const = default;
    auto operator<=>(const Triple&) const = default;
};

// Interned KG: dense entity/relation indices in first-seen order, a
// deduplicated triple list, and an outgoing neighbor index over the stored
// triples. After augmentation (inverse + self-loop triples) the outgoing
// index covers both edge directions.
class KnowledgeGraph {
public:
    int intern_entity(const std::string& name);
    int intern_relation(const std::string& name, RelationKind kind = RelationKind::original);
    std::optional<int> entity_index(const std::string& name) const;

    // Returns false (and leaves the graph unchanged) for duplicates.
    bool insert_triple(const Triple& t);
    bool erase_triple(const Triple& t);
    bool has_triple(const Triple& t) const;
    bool has_original_edge(int head, int tail) const;  // any original-kind relation head->tail

    void rebuild_neighbor_index();

    std::size_t num_entities() const { return entity_names_.size(); }
    std::size_t num_relations() const { return relation_names_.size(); }
    std::size_t num_triples() const { return triples_.size(); }
    const std::vector<Triple>& triples() const { return triples_; }
    const std::string& entity_name(int i) const { return entity_names_.at(static_cast<std::size_t>(i)); }
    const std::string& relation_name(int i) const { return relation_names_.at(static_cast<std::size_t>(i)); }
    RelationKind relation_kind(int i) const { return relation_kinds_.at(static_cast<std::size_t>(i)); }
    // inverse index of an original relation / original index of an inverse; -1 otherwise
    int paired_relation(int i) const { return paired_relation_.at(static_cast<std::size_t>(i)); }
    int self_loop_relation() const { return self_loop_rel_; }
    bool augmented() const { return augmented_; }

    // (q, r) pairs with a stored triple <p, r, q>, sorted ascending.
    const std::vector<std::pair<int, int>>& neighbors(int p) const;
    // Distinct neighbor entity ids of p (sorted); includes p itself once
    // the self-loop exists.
    const std::vector<int>& neighbor_entities(int p) const;
    bool is_neighbor(int p, int q) const;

    std::vector<Triple> original_triples() const;
    std::vector<int> relation_indices(RelationKind kind) const;

private:
    friend KnowledgeGraph augment(const KnowledgeGraph& kg);

    static std::uint64_t triple_key(const Triple& t);

    std::vector<std::string> entity_names_;
    std::unordered_map<std::string, int> entity_index_;
    std::vector<std::string> relation_names_;
    std::vector<RelationKind> relation_kinds_;
    std::vector<int> paired_relation_;
    int self_loop_rel_ = -1;
    bool augmented_ = false;

    std::vector<Triple> triples_;
    std::unordered_set<std::uint64_t> triple_set_;
    std::vector<std::vector<std::pair<int, int>>> neighbor_index_;
    std::vector<std::vector<int>> neighbor_entities_;
    bool index_dirty_ = true;
};

enum class LinkOrigin { given_seed, bootstrapped, gold_eval };

// Cross-graph entity correspondences (source index, target index).
struct AlignmentLinks {
    std::vector<std::pair<int, int>> pairs;
    std::vector<LinkOrigin> origins;

    void add(int src, int tgt, LinkOrigin origin);
    bool contains(int src, int tgt) const;
    std::size_t size() const { return pairs.size(); }
};

// --- file formats -------------------------------------------------------
// Triples: UTF-8 lines "head<TAB>relation<TAB>tail"; '#' lines ignored.
// Links:   "source_entity<TAB>target_entity" per line.

KnowledgeGraph load_triples(const std::string& path);
void save_triples(const KnowledgeGraph& kg, const std::string& path);

AlignmentLinks load_links(const std::string& path, const KnowledgeGraph& source, const KnowledgeGraph& target,
                          LinkOrigin origin);
void save_links(const AlignmentLinks& links, const KnowledgeGraph& source, const KnowledgeGraph& target,
                const std::string& path);

// --- graph operations ---------------------------------------------------

// Adds one inverse triple per original triple and one self-loop per entity.
// Rejects already-augmented input.
KnowledgeGraph augment(const KnowledgeGraph& kg);

// Removes exactly round(ratio*|E|) triples uniformly without replacement
// from an un-augmented graph. Returns the new graph and the removed set.
std::pair<KnowledgeGraph, std::vector<Triple>> sparsify(const KnowledgeGraph& kg, double ratio,
                                                        std::uint64_t rng_seed);

struct SyntheticPair {
    KnowledgeGraph source;
    KnowledgeGraph target;
    AlignmentLinks seeds;      // given-seed pairs
    AlignmentLinks eval;       // gold-eval pairs (the remaining entities)
    std::vector<Triple> removed_source;  // triples dropped from the source copy
    std::vector<Triple> removed_target;  // triples dropped from the target copy
};

// Generates a preferential-attachment-style base KG, clones it, removes the
// given triple fractions independently, and permutes the target's entity
// indices. Gold alignment is the identity correspondence.
SyntheticPair synthesize_pair(int n_entities, int n_relations, double avg_degree, double removal_ratio_s,
                              double removal_ratio_t, double seed_fraction, std::uint64_t rng_seed);

}  // namespace ikami
