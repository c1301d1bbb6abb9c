#include "ikami/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ikami/errors.hpp"

namespace ikami {

std::uint64_t KnowledgeGraph::triple_key(const Triple& t) {
    // Entities/relations stay far below 2^21 at the scales this toolkit targets.
    return (static_cast<std::uint64_t>(t.head) << 42) | (static_cast<std::uint64_t>(t.rel) << 21) |
           static_cast<std::uint64_t>(t.tail);
}

int KnowledgeGraph::intern_entity(const std::string& name) {
    auto it = entity_index_.find(name);
    if (it != entity_index_.end()) return it->second;
    const int id = static_cast<int>(entity_names_.size());
    entity_names_.push_back(name);
    entity_index_.emplace(name, id);
    index_dirty_ = true;
    return id;
}

int KnowledgeGraph::intern_relation(const std::string& name, RelationKind kind) {
    for (std::size_t i = 0; i < relation_names_.size(); ++i)
        if (relation_kinds_[i] == kind && relation_names_[i] == name) return static_cast<int>(i);
    relation_names_.push_back(name);
    relation_kinds_.push_back(kind);
    paired_relation_.push_back(-1);
    if (kind == RelationKind::self_loop) {
        if (self_loop_rel_ >= 0) throw ConfigError("self-loop relation already present");
        self_loop_rel_ = static_cast<int>(relation_names_.size()) - 1;
    }
    return static_cast<int>(relation_names_.size()) - 1;
}

std::optional<int> KnowledgeGraph::entity_index(const std::string& name) const {
    auto it = entity_index_.find(name);
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

bool KnowledgeGraph::insert_triple(const Triple& t) {
    const int nv = static_cast<int>(entity_names_.size());
    const int nr = static_cast<int>(relation_names_.size());
    if (t.head < 0 || t.head >= nv || t.tail < 0 || t.tail >= nv || t.rel < 0 || t.rel >= nr)
        throw ConfigError("triple index out of range");
    if (!triple_set_.insert(triple_key(t)).second) return false;
    triples_.push_back(t);
    index_dirty_ = true;
    return true;
}

bool KnowledgeGraph::erase_triple(const Triple& t) {
    if (triple_set_.erase(triple_key(t)) == 0) return false;
    auto it = std::find(triples_.begin(), triples_.end(), t);
    triples_.erase(it);
    index_dirty_ = true;
    return true;
}

bool KnowledgeGraph::has_triple(const Triple& t) const { return triple_set_.count(triple_key(t)) > 0; }

bool KnowledgeGraph::has_original_edge(int head, int tail) const {
    for (std::size_t r = 0; r < relation_names_.size(); ++r) {
        if (relation_kinds_[r] != RelationKind::original) continue;
        if (has_triple({head, static_cast<int>(r), tail})) return true;
    }
    return false;
}

void KnowledgeGraph::rebuild_neighbor_index() {
    neighbor_index_.assign(entity_names_.size(), {});
    neighbor_entities_.assign(entity_names_.size(), {});
    for (const Triple& t : triples_) neighbor_index_[static_cast<std::size_t>(t.head)].emplace_back(t.tail, t.rel);
    for (std::size_t p = 0; p < neighbor_index_.size(); ++p) {
        auto& nb = neighbor_index_[p];
        std::sort(nb.begin(), nb.end());
        auto& ents = neighbor_entities_[p];
        for (const auto& [q, r] : nb) ents.push_back(q);
        std::sort(ents.begin(), ents.end());
        ents.erase(std::unique(ents.begin(), ents.end()), ents.end());
    }
    index_dirty_ = false;
}

const std::vector<std::pair<int, int>>& KnowledgeGraph::neighbors(int p) const {
    if (index_dirty_) throw ConfigError("neighbor index is stale; call rebuild_neighbor_index()");
    return neighbor_index_.at(static_cast<std::size_t>(p));
}

const std::vector<int>& KnowledgeGraph::neighbor_entities(int p) const {
    if (index_dirty_) throw ConfigError("neighbor index is stale; call rebuild_neighbor_index()");
    return neighbor_entities_.at(static_cast<std::size_t>(p));
}

bool KnowledgeGraph::is_neighbor(int p, int q) const {
    const auto& ents = neighbor_entities(p);
    return std::binary_search(ents.begin(), ents.end(), q);
}

std::vector<Triple> KnowledgeGraph::original_triples() const {
    std::vector<Triple> out;
    for (const Triple& t : triples_)
        if (relation_kinds_[static_cast<std::size_t>(t.rel)] == RelationKind::original) out.push_back(t);
    return out;
}

std::vector<int> KnowledgeGraph::relation_indices(RelationKind kind) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < relation_kinds_.size(); ++i)
        if (relation_kinds_[i] == kind) out.push_back(static_cast<int>(i));
    return out;
}

void AlignmentLinks::add(int src, int tgt, LinkOrigin origin) {
    if (contains(src, tgt)) throw ConfigError("duplicate alignment link");
    pairs.emplace_back(src, tgt);
    origins.push_back(origin);
}

bool AlignmentLinks::contains(int src, int tgt) const {
    return std::find(pairs.begin(), pairs.end(), std::make_pair(src, tgt)) != pairs.end();
}

KnowledgeGraph load_triples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open triple file: " + path);
    KnowledgeGraph kg;
    std::string line;
    std::size_t lineno = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 3 TAB-separated fields, got " +
                             std::to_string(fields.size()));
        const int h = kg.intern_entity(fields[0]);
        const int r = kg.intern_relation(fields[1]);
        const int t = kg.intern_entity(fields[2]);
        kg.insert_triple({h, r, t});
        any = true;
    }
    if (!any) throw ParseError("empty triple file: " + path);
    kg.rebuild_neighbor_index();
    return kg;
}

void save_triples(const KnowledgeGraph& kg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write triple file: " + path);
    for (const Triple& t : kg.triples())
        out << kg.entity_name(t.head) << '\t' << kg.relation_name(t.rel) << '\t' << kg.entity_name(t.tail) << '\n';
}

AlignmentLinks load_links(const std::string& path, const KnowledgeGraph& source, const KnowledgeGraph& target,
                          LinkOrigin origin) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open links file: " + path);
    AlignmentLinks links;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 2 TAB-separated fields");
        const auto s = source.entity_index(line.substr(0, tab));
        const auto t = target.entity_index(line.substr(tab + 1));
        if (!s) throw ParseError(path + ":" + std::to_string(lineno) + ": unknown source entity");
        if (!t) throw ParseError(path + ":" + std::to_string(lineno) + ": unknown target entity");
        links.add(*s, *t, origin);
    }
    return links;
}

void save_links(const AlignmentLinks& links, const KnowledgeGraph& source, const KnowledgeGraph& target,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write links file: " + path);
    for (const auto& [s, t] : links.pairs) out << source.entity_name(s) << '\t' << target.entity_name(t) << '\n';
}

KnowledgeGraph augment(const KnowledgeGraph& kg) {
    if (kg.augmented_) throw ConfigError("graph is already augmented");
    for (RelationKind k : kg.relation_kinds_)
        if (k != RelationKind::original) throw ConfigError("augment expects only original-kind relations");

    KnowledgeGraph out = kg;
    out.paired_relation_.assign(kg.relation_names_.size(), -1);
    for (std::size_t r = 0; r < kg.relation_names_.size(); ++r) {
        const int inv = out.intern_relation(kg.relation_names_[r] + "⁻¹", RelationKind::inverse);
        out.paired_relation_[r] = inv;
        out.paired_relation_[static_cast<std::size_t>(inv)] = static_cast<int>(r);
    }
    const int top = out.intern_relation("⊤", RelationKind::self_loop);
    for (const Triple& t : kg.triples_) out.insert_triple({t.tail, out.paired_relation_[static_cast<std::size_t>(t.rel)], t.head});
    for (int p = 0; p < static_cast<int>(kg.entity_names_.size()); ++p) out.insert_triple({p, top, p});
    out.augmented_ = true;
    out.rebuild_neighbor_index();
    return out;
}

std::pair<KnowledgeGraph, std::vector<Triple>> sparsify(const KnowledgeGraph& kg, double ratio,
                                                        std::uint64_t rng_seed) {
    if (kg.augmented()) throw ConfigError("sparsify expects an un-augmented graph");
    if (ratio < 0.0 || ratio >= 1.0) throw ConfigError("sparsify ratio must be in [0,1)");
    const std::size_t n = kg.num_triples();
    const std::size_t k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    Rng rng(rng_seed);
    std::vector<int> chosen = rng.sample_without_replacement(n, k);
    std::sort(chosen.begin(), chosen.end());

    std::vector<Triple> removed;
    KnowledgeGraph out = kg;
    for (int idx : chosen) removed.push_back(kg.triples()[static_cast<std::size_t>(idx)]);
    for (const Triple& t : removed) out.erase_triple(t);
    out.rebuild_neighbor_index();
    return {std::move(out), std::move(removed)};
}

namespace {

// Zipf-ish relation pick: relation k with weight 1/(k+1).
int pick_relation(Rng& rng, int n_relations) {
    std::vector<double> cum(static_cast<std::size_t>(n_relations));
    double s = 0.0;
    for (int k = 0; k < n_relations; ++k) {
        s += 1.0 / static_cast<double>(k + 1);
        cum[static_cast<std::size_t>(k)] = s;
    }
    const double u = rng.next_double() * s;
    return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
}

int pick_degree_weighted(Rng& rng, const std::vector<int>& degree, long long total) {
    long long u = static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(total)));
    for (std::size_t i = 0; i < degree.size(); ++i) {
        u -= degree[i] + 1;  // +1 keeps zero-degree entities reachable
        if (u < 0) return static_cast<int>(i);
    }
    return static_cast<int>(degree.size()) - 1;
}

}  // namespace

SyntheticPair synthesize_pair(int n_entities, int n_relations, double avg_degree, double removal_ratio_s,
                              double removal_ratio_t, double seed_fraction, std::uint64_t rng_seed) {
    if (n_entities < 2 || n_relations < 1) throw ConfigError("synthesize_pair needs >=2 entities and >=1 relation");
    if (removal_ratio_s < 0.0 || removal_ratio_s >= 1.0 || removal_ratio_t < 0.0 || removal_ratio_t >= 1.0)
        throw ConfigError("removal ratios must be in [0,1)");
    if (seed_fraction < 0.0 || seed_fraction > 1.0) throw ConfigError("seed_fraction must be in [0,1]");

    Rng rng(rng_seed);
    KnowledgeGraph base;
    for (int i = 0; i < n_entities; ++i) base.intern_entity("e" + std::to_string(i));
    for (int k = 0; k < n_relations; ++k) base.intern_relation("r" + std::to_string(k));

    std::vector<int> degree(static_cast<std::size_t>(n_entities), 0);
    long long deg_total = n_entities;  // sum of (degree+1)
    auto add_edge = [&](int h, int r, int t) {
        if (base.insert_triple({h, r, t})) {
            degree[static_cast<std::size_t>(h)]++;
            degree[static_cast<std::size_t>(t)]++;
            deg_total += 2;
            return true;
        }
        return false;
    };

    // Random spine keeps the base connected, then preferential attachment
    // drives the degree skew.
    std::vector<int> order(static_cast<std::size_t>(n_entities));
    for (int i = 0; i < n_entities; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    for (int i = 0; i + 1 < n_entities; ++i)
        add_edge(order[static_cast<std::size_t>(i)], pick_relation(rng, n_relations),
                 order[static_cast<std::size_t>(i) + 1]);

    const auto target_edges =
        static_cast<std::size_t>(std::llround(avg_degree * static_cast<double>(n_entities) / 2.0));
    int stall = 0;
    while (base.num_triples() < target_edges && stall < 1000) {
        const int h = rng.index(static_cast<std::size_t>(n_entities));
        const int t = pick_degree_weighted(rng, degree, deg_total);
        if (h == t) {
            ++stall;
            continue;
        }
        stall = add_edge(h, pick_relation(rng, n_relations), t) ? 0 : stall + 1;
    }

    SyntheticPair out;
    // Source copy: same indexing as the base.
    auto [src, removed_s] = sparsify(base, removal_ratio_s, rng.next_u64());
    out.source = std::move(src);
    out.removed_source = std::move(removed_s);

    // Target copy: permuted entity indices, then its own removal.
    std::vector<int> perm(static_cast<std::size_t>(n_entities));
    for (int i = 0; i < n_entities; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);  // perm[old] = new target index
    KnowledgeGraph tgt;
    {
        std::vector<std::string> names(static_cast<std::size_t>(n_entities));
        for (int i = 0; i < n_entities; ++i) names[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
            base.entity_name(i);
        for (const auto& nm : names) tgt.intern_entity(nm);
        for (int k = 0; k < n_relations; ++k) tgt.intern_relation(base.relation_name(k));
        for (const Triple& t : base.triples())
            tgt.insert_triple({perm[static_cast<std::size_t>(t.head)], t.rel, perm[static_cast<std::size_t>(t.tail)]});
    }
    auto [tgt2, removed_t] = sparsify(tgt, removal_ratio_t, rng.next_u64());
    out.target = std::move(tgt2);
    out.removed_target = std::move(removed_t);
    out.source.rebuild_neighbor_index();
    out.target.rebuild_neighbor_index();

    const auto n_seeds = static_cast<std::size_t>(std::llround(seed_fraction * static_cast<double>(n_entities)));
    std::vector<int> seed_entities = rng.sample_without_replacement(static_cast<std::size_t>(n_entities), n_seeds);
    std::vector<bool> is_seed(static_cast<std::size_t>(n_entities), false);
    for (int e : seed_entities) is_seed[static_cast<std::size_t>(e)] = true;
    for (int e : seed_entities) out.seeds.add(e, perm[static_cast<std::size_t>(e)], LinkOrigin::given_seed);
    for (int e = 0; e < n_entities; ++e)
        if (!is_seed[static_cast<std::size_t>(e)]) out.eval.add(e, perm[static_cast<std::size_t>(e)], LinkOrigin::gold_eval);
    return out;
}

}  // namespace ikami
