#include "ikami/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <thread>
#include <tuple>

#include "ikami/errors.hpp"

namespace ikami {

Tensor similarity_matrix(const Tensor& emb_s, const Tensor& emb_t, int threads) {
    if (emb_s.cols() != emb_t.cols()) throw ConfigError("similarity_matrix: dimension mismatch");
    const std::int64_t ns = emb_s.rows(), nt = emb_t.rows(), d = emb_s.cols();

    std::vector<double> norm_s(static_cast<std::size_t>(ns)), norm_t(static_cast<std::size_t>(nt));
    for (std::int64_t i = 0; i < ns; ++i) {
        double s = 0.0;
        for (std::int64_t c = 0; c < d; ++c) s += emb_s.at(i, c) * emb_s.at(i, c);
        norm_s[static_cast<std::size_t>(i)] = std::sqrt(s);
    }
    for (std::int64_t j = 0; j < nt; ++j) {
        double s = 0.0;
        for (std::int64_t c = 0; c < d; ++c) s += emb_t.at(j, c) * emb_t.at(j, c);
        norm_t[static_cast<std::size_t>(j)] = std::sqrt(s);
    }

    Tensor out({ns, nt});
    auto compute_rows = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            if (norm_s[static_cast<std::size_t>(i)] == 0.0) continue;  // zero row -> similarity 0
            for (std::int64_t j = 0; j < nt; ++j) {
                if (norm_t[static_cast<std::size_t>(j)] == 0.0) continue;
                double dot = 0.0;
                for (std::int64_t c = 0; c < d; ++c) dot += emb_s.at(i, c) * emb_t.at(j, c);
                out.at(i, j) = dot / (norm_s[static_cast<std::size_t>(i)] * norm_t[static_cast<std::size_t>(j)]);
            }
        }
    };

    if (threads <= 1 || ns < 2 * threads) {
        compute_rows(0, ns);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (ns + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            const std::int64_t lo = w * chunk, hi = std::min<std::int64_t>(ns, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(compute_rows, lo, hi);
        }
        for (auto& t : pool) t.join();
    }
    out.ensure_finite("similarity matrix");
    return out;
}

Tensor fuse(const Tensor& s_t, const Tensor& s_g, double beta_tg) {
    if (!s_t.same_shape(s_g)) throw ConfigError("fuse: shape mismatch");
    if (beta_tg < 0.0 || beta_tg > 1.0) throw ConfigError("fuse: beta_tg must be in [0,1]");
    Tensor out = s_t;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = beta_tg * s_t[i] + (1.0 - beta_tg) * s_g[i];
    return out;
}

std::vector<MatchPair> greedy_match(const Tensor& s) {
    s.ensure_finite("greedy_match scores");
    const std::int64_t ns = s.rows(), nt = s.cols();
    std::vector<std::tuple<double, int, int>> entries;
    entries.reserve(static_cast<std::size_t>(ns * nt));
    for (std::int64_t i = 0; i < ns; ++i)
        for (std::int64_t j = 0; j < nt; ++j)
            entries.emplace_back(-s.at(i, j), static_cast<int>(i), static_cast<int>(j));
    std::sort(entries.begin(), entries.end());

    std::vector<bool> used_s(static_cast<std::size_t>(ns), false), used_t(static_cast<std::size_t>(nt), false);
    std::vector<MatchPair> out;
    const std::int64_t limit = std::min(ns, nt);
    for (const auto& [negscore, i, j] : entries) {
        if (static_cast<std::int64_t>(out.size()) == limit) break;
        if (used_s[static_cast<std::size_t>(i)] || used_t[static_cast<std::size_t>(j)]) continue;
        used_s[static_cast<std::size_t>(i)] = used_t[static_cast<std::size_t>(j)] = true;
        out.push_back({i, j, -negscore});
    }
    return out;
}

EvalMetrics evaluate(const Tensor& s, const AlignmentLinks& gold) {
    if (gold.pairs.empty()) throw ConfigError("evaluate: empty gold link set");
    EvalMetrics m;
    for (const auto& [p, t] : gold.pairs) {
        if (p < 0 || p >= s.rows()) throw ConfigError("evaluate: gold source entity has no row");
        if (t < 0 || t >= s.cols()) throw ConfigError("evaluate: gold target entity missing from matrix");
        const double gold_score = s.at(p, t);
        std::int64_t rank = 1;
        for (std::int64_t j = 0; j < s.cols(); ++j) {
            if (j == t) continue;
            const double v = s.at(p, j);
            if (v > gold_score || (v == gold_score && j < t)) ++rank;
        }
        m.hit1 += rank <= 1 ? 1.0 : 0.0;
        m.hit10 += rank <= 10 ? 1.0 : 0.0;
        m.mrr += 1.0 / static_cast<double>(rank);
        m.mr += static_cast<double>(rank);
    }
    const double n = static_cast<double>(gold.pairs.size());
    m.hit1 /= n;
    m.hit10 /= n;
    m.mrr /= n;
    m.mr /= n;
    return m;
}

bool early_stop(const std::vector<double>& history, int patience) {
    if (patience < 1) throw ConfigError("early_stop: patience must be positive");
    if (history.empty()) throw ConfigError("early_stop: empty history");
    double best = -std::numeric_limits<double>::infinity();
    int failures = 0;
    for (double v : history) {
        if (v > best) {
            best = v;
            failures = 0;
        } else {
            ++failures;
        }
    }
    return failures >= patience;
}

std::vector<std::pair<int, int>> nominate_and_update_seeds(NominationState& state, const Tensor& s, int c, int n,
                                                           AlignmentLinks& seeds, const AlignmentLinks& eval_pairs) {
    std::vector<std::pair<int, int>> adopted;
    if (c <= 0) {
        state.counts.clear();
        return adopted;
    }

    std::set<int> seeded_src, seeded_tgt;
    for (const auto& [p, t] : seeds.pairs) {
        seeded_src.insert(p);
        seeded_tgt.insert(t);
    }
    std::set<std::pair<int, int>> eval_set(eval_pairs.pairs.begin(), eval_pairs.pairs.end());

    std::vector<std::pair<int, int>> nominated;
    for (const MatchPair& mp : greedy_match(s)) {
        if (static_cast<int>(nominated.size()) == c) break;
        if (seeded_src.count(mp.src) || seeded_tgt.count(mp.tgt)) continue;  // keep seeds injective per side
        if (eval_set.count({mp.src, mp.tgt})) continue;                      // never adopt a gold eval pair
        nominated.emplace_back(mp.src, mp.tgt);
    }

    std::map<std::pair<int, int>, int> next;
    for (const auto& pr : nominated) {
        auto it = state.counts.find(pr);
        const int count = (it == state.counts.end() ? 0 : it->second) + 1;
        if (count >= n) {
            adopted.push_back(pr);
        } else {
            next[pr] = count;  // absence resets everyone else to zero
        }
    }
    state.counts = std::move(next);

    for (const auto& [p, t] : adopted) seeds.add(p, t, LinkOrigin::bootstrapped);
    return adopted;
}

}  // namespace ikami
