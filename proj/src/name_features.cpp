#include "ikami/name_features.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ikami/errors.hpp"

namespace ikami {

WordVectors WordVectors::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open word-vector file: " + path);
    std::string line;
    std::size_t lineno = 0;
    int dim = -1;
    WordVectors wv(0);
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream is(line);
        std::vector<std::string> parts;
        std::string tok;
        while (is >> tok) parts.push_back(tok);
        if (first && parts.size() == 2) {
            // "count dim" header
            try {
                dim = std::stoi(parts[1]);
            } catch (...) {
                throw ParseError(path + ":1: malformed header");
            }
            first = false;
            continue;
        }
        first = false;
        if (parts.size() < 2) throw ParseError(path + ":" + std::to_string(lineno) + ": malformed vector line");
        std::vector<double> v;
        v.reserve(parts.size() - 1);
        for (std::size_t i = 1; i < parts.size(); ++i) {
            try {
                v.push_back(std::stod(parts[i]));
            } catch (...) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad float '" + parts[i] + "'");
            }
        }
        if (dim < 0) dim = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != dim)
            throw ParseError(path + ":" + std::to_string(lineno) + ": vector dimension " +
                             std::to_string(v.size()) + " != " + std::to_string(dim));
        wv.insert(parts[0], std::move(v));
    }
    if (dim <= 0) throw ParseError("word-vector file has no vectors: " + path);
    wv.dim_ = dim;
    return wv;
}

const std::vector<double>* WordVectors::find(const std::string& token) const {
    auto it = vecs_.find(token);
    return it == vecs_.end() ? nullptr : &it->second;
}

void WordVectors::insert(const std::string& token, std::vector<double> vec) {
    dim_ = static_cast<int>(vec.size());
    vecs_[token] = std::move(vec);
}

std::string normalize_entity_name(const std::string& name) {
    std::string s = name;
    const std::size_t slash = s.find_last_of('/');
    if (slash != std::string::npos) s = s.substr(slash + 1);
    for (char& c : s) {
        if (c == '_') c = ' ';
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

std::vector<std::string> tokenize_name(const std::string& name) {
    std::vector<std::string> toks;
    std::istringstream is(normalize_entity_name(name));
    std::string t;
    while (is >> t) toks.push_back(t);
    if (toks.empty()) toks.push_back("");  // nameless entity hashes the empty token
    return toks;
}

namespace {
std::vector<double> hashed_token_vector(const std::string& token, int dim, std::uint64_t seed) {
    Rng rng(fnv1a64(token) ^ (seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.uniform(-1.0, 1.0);
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (norm > 0.0)
        for (auto& x : v) x /= norm;
    else
        v[0] = 1.0;
    return v;
}
}  // namespace

NameFeatureMatrix name_features(const KnowledgeGraph& kg, const WordVectors* vectors, int dim,
                                std::uint64_t seed) {
    if (dim <= 0) throw ConfigError("name_features: dim must be positive");
    if (vectors && vectors->dim() != dim)
        throw ConfigError("name_features: vector source dimension " + std::to_string(vectors->dim()) +
                          " != requested dim " + std::to_string(dim));

    NameFeatureMatrix out;
    out.provenance = vectors ? FeatureProvenance::loaded_vectors : FeatureProvenance::hashed_fallback;
    out.rows = Tensor({static_cast<std::int64_t>(kg.num_entities()), dim});
    for (int p = 0; p < static_cast<int>(kg.num_entities()); ++p) {
        const auto toks = tokenize_name(kg.entity_name(p));
        for (const auto& tok : toks) {
            const std::vector<double>* v = vectors ? vectors->find(tok) : nullptr;
            std::vector<double> fallback;
            if (!v) {
                fallback = hashed_token_vector(tok, dim, seed);
                v = &fallback;
            }
            for (int c = 0; c < dim; ++c) out.rows.at(p, c) += (*v)[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < dim; ++c) out.rows.at(p, c) /= static_cast<double>(toks.size());
    }
    out.rows.ensure_finite("name features");
    return out;
}

}  // namespace ikami
