#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ikami/kg.hpp"
#include "ikami/tensor.hpp"

namespace ikami {

// "token v1 v2 ... vd" lines, optional "count dim" header.
class WordVectors {
public:
    static WordVectors load(const std::string& path);

    int dim() const { return dim_; }
    const std::vector<double>* find(const std::string& token) const;
    void insert(const std::string& token, std::vector<double> vec);
    explicit WordVectors(int dim) : dim_(dim) {}

private:
    int dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vecs_;
};

enum class FeatureProvenance { loaded_vectors, hashed_fallback };

struct NameFeatureMatrix {
    Tensor rows;  // |V| x dim
    FeatureProvenance provenance = FeatureProvenance::hashed_fallback;
};

// URL tail after the last '/', underscores to spaces, lowercased.
std::string normalize_entity_name(const std::string& name);
std::vector<std::string> tokenize_name(const std::string& name);

// Per-entity feature = mean of token vectors. Tokens absent from the source
// (or every token when no source is given) get a deterministic unit-norm
// pseudo-vector hashed from the token string and the seed.
NameFeatureMatrix name_features(const KnowledgeGraph& kg, const WordVectors* vectors, int dim,
                                std::uint64_t seed);

}  // namespace ikami
