#pragma once

#include "ikami/kg.hpp"

namespace ikami {

enum class Side { source, target };

// Both augmented working graphs plus the offset arithmetic that places
// their entities/relations in shared embedding tables (source block first).
struct GraphPair {
    KnowledgeGraph source;
    KnowledgeGraph target;

    KnowledgeGraph& graph(Side s) { return s == Side::source ? source : target; }
    const KnowledgeGraph& graph(Side s) const { return s == Side::source ? source : target; }

    int entity_offset(Side s) const { return s == Side::source ? 0 : static_cast<int>(source.num_entities()); }
    int relation_offset(Side s) const { return s == Side::source ? 0 : static_cast<int>(source.num_relations()); }
    int total_entities() const { return static_cast<int>(source.num_entities() + target.num_entities()); }
    int total_relations() const { return static_cast<int>(source.num_relations() + target.num_relations()); }

    int entity_id(Side s, int local) const { return entity_offset(s) + local; }
    int relation_id(Side s, int local) const { return relation_offset(s) + local; }
};

}  // namespace ikami
