#include "ikami/autodiff.hpp"

#include <Eigen/Core>
#include <cmath>
#include <utility>

#include "ikami/errors.hpp"

namespace ikami {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

MapC cmap(const Tensor& t) { return MapC(t.data(), t.rows(), t.cols()); }
MapM mmap(Tensor& t) { return MapM(t.data(), t.rows(), t.cols()); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ConfigError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

Tape::Id Tape::push(Tensor value, bool requires_grad, std::function<void()> back, const char* what) {
    value.ensure_finite(what);
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Tensor& Tape::grad_buf(Id id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad_ready) {
        n.grad = Tensor::zeros(n.value.shape());
        n.grad_ready = true;
    }
    return n.grad;
}

const Tensor& Tape::grad(Id id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad_ready) throw ConfigError("gradient not computed; call backward() first");
    return n.grad;
}

double Tape::scalar_value(Id id) const {
    const Tensor& v = value(id);
    if (v.numel() != 1) throw ConfigError("node is not a scalar");
    return v[0];
}

Tape::Id Tape::leaf(Tensor value) { return push(std::move(value), true, nullptr, "leaf"); }

Tape::Id Tape::constant(Tensor value) { return push(std::move(value), false, nullptr, "constant"); }

Tape::Id Tape::add(Id a, Id b) {
    check_same_shape(value(a), value(b), "add");
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
    Id id = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr, "add");
    nodes_.back().back = [this, a, b, id] {
        const Tensor& g = grad(id);
        if (needs_grad(a)) {
            Tensor& ga = grad_buf(a);
            for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
        }
        if (needs_grad(b)) {
            Tensor& gb = grad_buf(b);
            for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] += g[i];
        }
    };
    return id;
}

Tape::Id Tape::sub(Id a, Id b) {
    check_same_shape(value(a), value(b), "sub");
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
    Id id = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr, "sub");
    nodes_.back().back = [this, a, b, id] {
        const Tensor& g = grad(id);
        if (needs_grad(a)) {
            Tensor& ga = grad_buf(a);
            for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
        }
        if (needs_grad(b)) {
            Tensor& gb = grad_buf(b);
            for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
        }
    };
    return id;
}

Tape::Id Tape::affine(Id a, double scale, double shift) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = scale * out[i] + shift;
    Id id = push(std::move(out), needs_grad(a), nullptr, "affine");
    nodes_.back().back = [this, a, scale, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += scale * g[i];
    };
    return id;
}

Tape::Id Tape::add_rowvec(Id a, Id v) {
    const Tensor& va = value(a);
    const Tensor& vv = value(v);
    if (vv.numel() != va.cols()) throw ConfigError("add_rowvec: vector length must equal column count");
    Tensor out = va;
    const std::int64_t n = va.rows(), d = va.cols();
    for (std::int64_t r = 0; r < n; ++r)
        for (std::int64_t c = 0; c < d; ++c) out[r * d + c] += vv[c];
    Id id = push(std::move(out), needs_grad(a) || needs_grad(v), nullptr, "add_rowvec");
    nodes_.back().back = [this, a, v, n, d, id] {
        const Tensor& g = grad(id);
        if (needs_grad(a)) {
            Tensor& ga = grad_buf(a);
            for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
        }
        if (needs_grad(v)) {
            Tensor& gv = grad_buf(v);
            for (std::int64_t r = 0; r < n; ++r)
                for (std::int64_t c = 0; c < d; ++c) gv[c] += g[r * d + c];
        }
    };
    return id;
}

Tape::Id Tape::concat_cols(const std::vector<Id>& xs) {
    if (xs.empty()) throw ConfigError("concat_cols: empty input list");
    const std::int64_t n = value(xs[0]).rows();
    std::int64_t total = 0;
    bool rg = false;
    for (Id x : xs) {
        if (value(x).rows() != n) throw ConfigError("concat_cols: row count mismatch");
        total += value(x).cols();
        rg = rg || needs_grad(x);
    }
    Tensor out({n, total});
    std::int64_t off = 0;
    for (Id x : xs) {
        const Tensor& v = value(x);
        const std::int64_t d = v.cols();
        for (std::int64_t r = 0; r < n; ++r)
            for (std::int64_t c = 0; c < d; ++c) out[r * total + off + c] = v[r * d + c];
        off += d;
    }
    Id id = push(std::move(out), rg, nullptr, "concat_cols");
    std::vector<Id> parents = xs;
    nodes_.back().back = [this, parents, n, total, id] {
        const Tensor& g = grad(id);
        std::int64_t off2 = 0;
        for (Id x : parents) {
            const std::int64_t d = value(x).cols();
            if (needs_grad(x)) {
                Tensor& gx = grad_buf(x);
                for (std::int64_t r = 0; r < n; ++r)
                    for (std::int64_t c = 0; c < d; ++c) gx[r * d + c] += g[r * total + off2 + c];
            }
            off2 += d;
        }
    };
    return id;
}

Tape::Id Tape::relu(Id a) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    Id id = push(std::move(out), needs_grad(a), nullptr, "relu");
    nodes_.back().back = [this, a, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& x = value(a);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i)
            if (x[i] > 0.0) ga[i] += g[i];  // subgradient 0 at the kink
    };
    return id;
}

Tape::Id Tape::leaky_relu(Id a, double slope) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : slope * out[i];
    Id id = push(std::move(out), needs_grad(a), nullptr, "leaky_relu");
    nodes_.back().back = [this, a, slope, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& x = value(a);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += (x[i] > 0.0 ? 1.0 : slope) * g[i];
    };
    return id;
}

Tape::Id Tape::tanh_op(Id a) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    Id id = push(std::move(out), needs_grad(a), nullptr, "tanh");
    nodes_.back().back = [this, a, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& y = value(id);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += (1.0 - y[i] * y[i]) * g[i];
    };
    return id;
}

Tape::Id Tape::sigmoid(Id a) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const double x = out[i];
        out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    Id id = push(std::move(out), needs_grad(a), nullptr, "sigmoid");
    nodes_.back().back = [this, a, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& y = value(id);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += y[i] * (1.0 - y[i]) * g[i];
    };
    return id;
}

Tape::Id Tape::log_op(Id a) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(out[i]);
    Id id = push(std::move(out), needs_grad(a), nullptr, "log");
    nodes_.back().back = [this, a, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& x = value(a);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] / x[i];
    };
    return id;
}

Tape::Id Tape::abs_op(Id a) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::abs(out[i]);
    Id id = push(std::move(out), needs_grad(a), nullptr, "abs");
    nodes_.back().back = [this, a, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& x = value(a);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i) {
            if (x[i] > 0.0)
                ga[i] += g[i];
            else if (x[i] < 0.0)
                ga[i] -= g[i];
        }
    };
    return id;
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
    Tensor out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::min(hi, std::max(lo, out[i]));
    Id id = push(std::move(out), needs_grad(a), nullptr, "clamp");
    nodes_.back().back = [this, a, lo, hi, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& x = value(a);
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < g.numel(); ++i)
            if (x[i] > lo && x[i] < hi) ga[i] += g[i];
    };
    return id;
}

Tape::Id Tape::gather_rows(Id a, std::vector<int> idx) {
    const Tensor& v = value(a);
    const std::int64_t d = v.cols(), n = v.rows();
    for (int i : idx)
        if (i < 0 || i >= n) throw ConfigError("gather_rows: index out of range");
    Tensor out({static_cast<std::int64_t>(idx.size()), d});
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::int64_t c = 0; c < d; ++c) out[static_cast<std::int64_t>(r) * d + c] = v[idx[r] * d + c];
    Id id = push(std::move(out), needs_grad(a), nullptr, "gather_rows");
    nodes_.back().back = [this, a, idx = std::move(idx), d, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        Tensor& ga = grad_buf(a);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::int64_t c = 0; c < d; ++c) ga[idx[r] * d + c] += g[static_cast<std::int64_t>(r) * d + c];
    };
    return id;
}

Tape::Id Tape::gather_elems(Id a, std::vector<int> idx) {
    const Tensor& v = value(a);
    for (int i : idx)
        if (i < 0 || i >= v.numel()) throw ConfigError("gather_elems: index out of range");
    Tensor out({static_cast<std::int64_t>(idx.size())});
    for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<std::int64_t>(r)] = v[idx[r]];
    Id id = push(std::move(out), needs_grad(a), nullptr, "gather_elems");
    nodes_.back().back = [this, a, idx = std::move(idx), id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        Tensor& ga = grad_buf(a);
        for (std::size_t r = 0; r < idx.size(); ++r) ga[idx[r]] += g[static_cast<std::int64_t>(r)];
    };
    return id;
}

Tape::Id Tape::scatter_rows(Id a, std::vector<int> idx, std::int64_t n_rows) {
    const Tensor& v = value(a);
    const std::int64_t d = v.cols();
    if (static_cast<std::int64_t>(idx.size()) != v.rows())
        throw ConfigError("scatter_rows: index count must equal row count");
    for (int i : idx)
        if (i < 0 || i >= n_rows) throw ConfigError("scatter_rows: index out of range");
    Tensor out({n_rows, d});
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::int64_t c = 0; c < d; ++c) out[idx[r] * d + c] += v[static_cast<std::int64_t>(r) * d + c];
    Id id = push(std::move(out), needs_grad(a), nullptr, "scatter_rows");
    nodes_.back().back = [this, a, idx = std::move(idx), d, id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        Tensor& ga = grad_buf(a);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::int64_t c = 0; c < d; ++c) ga[static_cast<std::int64_t>(r) * d + c] += g[idx[r] * d + c];
    };
    return id;
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.cols() != vb.cols())
        throw ConfigError("matmul_nt: inner dimensions differ, " + va.shape_str() + " vs " + vb.shape_str());
    Tensor out({va.rows(), vb.rows()});
    mmap(out).noalias() = cmap(va) * cmap(vb).transpose();
    Id id = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr, "matmul_nt");
    nodes_.back().back = [this, a, b, id] {
        const Tensor& g = grad(id);
        if (needs_grad(a)) {
            Tensor& ga = grad_buf(a);
            mmap(ga).noalias() += cmap(g) * cmap(value(b));
        }
        if (needs_grad(b)) {
            Tensor& gb = grad_buf(b);
            mmap(gb).noalias() += cmap(g).transpose() * cmap(value(a));
        }
    };
    return id;
}

Tape::Id Tape::rows_l1_dist(Id a, Id b) {
    check_same_shape(value(a), value(b), "rows_l1_dist");
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    const std::int64_t n = va.rows(), d = va.cols();
    Tensor out({n});
    for (std::int64_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::int64_t c = 0; c < d; ++c) s += std::abs(va[r * d + c] - vb[r * d + c]);
        out[r] = s;
    }
    Id id = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr, "rows_l1_dist");
    nodes_.back().back = [this, a, b, n, d, id] {
        const Tensor& g = grad(id);
        const Tensor& va2 = value(a);
        const Tensor& vb2 = value(b);
        for (std::int64_t r = 0; r < n; ++r) {
            for (std::int64_t c = 0; c < d; ++c) {
                const double diff = va2[r * d + c] - vb2[r * d + c];
                if (diff == 0.0) continue;  // subgradient 0 at the kink
                const double s = diff > 0.0 ? g[r] : -g[r];
                if (needs_grad(a)) grad_buf(a)[r * d + c] += s;
                if (needs_grad(b)) grad_buf(b)[r * d + c] -= s;
            }
        }
    };
    return id;
}

Tape::Id Tape::rows_dot(Id a, Id b) {
    check_same_shape(value(a), value(b), "rows_dot");
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    const std::int64_t n = va.rows(), d = va.cols();
    Tensor out({n});
    for (std::int64_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::int64_t c = 0; c < d; ++c) s += va[r * d + c] * vb[r * d + c];
        out[r] = s;
    }
    Id id = push(std::move(out), needs_grad(a) || needs_grad(b), nullptr, "rows_dot");
    nodes_.back().back = [this, a, b, n, d, id] {
        const Tensor& g = grad(id);
        const Tensor& va2 = value(a);
        const Tensor& vb2 = value(b);
        for (std::int64_t r = 0; r < n; ++r) {
            for (std::int64_t c = 0; c < d; ++c) {
                if (needs_grad(a)) grad_buf(a)[r * d + c] += g[r] * vb2[r * d + c];
                if (needs_grad(b)) grad_buf(b)[r * d + c] += g[r] * va2[r * d + c];
            }
        }
    };
    return id;
}

Tape::Id Tape::rownormalize(Id a) {
    const Tensor& v = value(a);
    const std::int64_t n = v.rows(), d = v.cols();
    Tensor out = v;
    std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::int64_t c = 0; c < d; ++c) s += v[r * d + c] * v[r * d + c];
        const double nrm = std::sqrt(s);
        norms[static_cast<std::size_t>(r)] = nrm;
        if (nrm > 0.0)
            for (std::int64_t c = 0; c < d; ++c) out[r * d + c] /= nrm;
    }
    Id id = push(std::move(out), needs_grad(a), nullptr, "rownormalize");
    nodes_.back().back = [this, a, n, d, norms = std::move(norms), id] {
        if (!needs_grad(a)) return;
        const Tensor& g = grad(id);
        const Tensor& y = value(id);
        Tensor& ga = grad_buf(a);
        for (std::int64_t r = 0; r < n; ++r) {
            const double nrm = norms[static_cast<std::size_t>(r)];
            if (nrm == 0.0) continue;
            double yg = 0.0;
            for (std::int64_t c = 0; c < d; ++c) yg += y[r * d + c] * g[r * d + c];
            for (std::int64_t c = 0; c < d; ++c) ga[r * d + c] += (g[r * d + c] - y[r * d + c] * yg) / nrm;
        }
    };
    return id;
}

namespace {
void check_offsets(const std::vector<std::int64_t>& offsets, std::int64_t n) {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != n)
        throw ConfigError("segment offsets must start at 0 and end at the element count");
    for (std::size_t s = 1; s < offsets.size(); ++s)
        if (offsets[s] < offsets[s - 1]) throw ConfigError("segment offsets must be nondecreasing");
}
}  // namespace

Tape::Id Tape::segment_softmax(Id scores, std::vector<std::int64_t> offsets) {
    const Tensor& v = value(scores);
    const std::int64_t n = v.numel();
    check_offsets(offsets, n);
    Tensor out({n});
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        const std::int64_t lo = offsets[s], hi = offsets[s + 1];
        if (lo == hi) continue;
        double mx = v[lo];
        for (std::int64_t i = lo + 1; i < hi; ++i) mx = std::max(mx, v[i]);
        double z = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
            out[i] = std::exp(v[i] - mx);
            z += out[i];
        }
        for (std::int64_t i = lo; i < hi; ++i) out[i] /= z;
    }
    Id id = push(std::move(out), needs_grad(scores), nullptr, "segment_softmax");
    nodes_.back().back = [this, scores, offsets = std::move(offsets), id] {
        if (!needs_grad(scores)) return;
        const Tensor& g = grad(id);
        const Tensor& y = value(id);
        Tensor& ga = grad_buf(scores);
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            const std::int64_t lo = offsets[s], hi = offsets[s + 1];
            double dot = 0.0;
            for (std::int64_t i = lo; i < hi; ++i) dot += y[i] * g[i];
            for (std::int64_t i = lo; i < hi; ++i) ga[i] += y[i] * (g[i] - dot);
        }
    };
    return id;
}

Tape::Id Tape::segment_weighted_rowsum(Id m, Id w, std::vector<std::int64_t> offsets) {
    const Tensor& vm = value(m);
    const Tensor& vw = value(w);
    const std::int64_t n = vm.rows(), d = vm.cols();
    if (vw.numel() != n) throw ConfigError("segment_weighted_rowsum: weight count must equal row count");
    check_offsets(offsets, n);
    const std::int64_t segs = static_cast<std::int64_t>(offsets.size()) - 1;
    Tensor out({segs, d});
    for (std::int64_t s = 0; s < segs; ++s)
        for (std::int64_t i = offsets[static_cast<std::size_t>(s)]; i < offsets[static_cast<std::size_t>(s) + 1]; ++i)
            for (std::int64_t c = 0; c < d; ++c) out[s * d + c] += vw[i] * vm[i * d + c];
    Id id = push(std::move(out), needs_grad(m) || needs_grad(w), nullptr, "segment_weighted_rowsum");
    nodes_.back().back = [this, m, w, d, offsets = std::move(offsets), id] {
        const Tensor& g = grad(id);
        const Tensor& vm2 = value(m);
        const Tensor& vw2 = value(w);
        const std::int64_t segs2 = static_cast<std::int64_t>(offsets.size()) - 1;
        for (std::int64_t s = 0; s < segs2; ++s) {
            for (std::int64_t i = offsets[static_cast<std::size_t>(s)]; i < offsets[static_cast<std::size_t>(s) + 1];
                 ++i) {
                if (needs_grad(m)) {
                    Tensor& gm = grad_buf(m);
                    for (std::int64_t c = 0; c < d; ++c) gm[i * d + c] += vw2[i] * g[s * d + c];
                }
                if (needs_grad(w)) {
                    double dot = 0.0;
                    for (std::int64_t c = 0; c < d; ++c) dot += vm2[i * d + c] * g[s * d + c];
                    grad_buf(w)[i] += dot;
                }
            }
        }
    };
    return id;
}

Tape::Id Tape::sum(Id a) {
    const Tensor& v = value(a);
    double s = 0.0;
    for (std::int64_t i = 0; i < v.numel(); ++i) s += v[i];
    Id id = push(Tensor::scalar(s), needs_grad(a), nullptr, "sum");
    nodes_.back().back = [this, a, id] {
        if (!needs_grad(a)) return;
        const double g = grad(id)[0];
        Tensor& ga = grad_buf(a);
        for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    };
    return id;
}

void Tape::backward(Id root) {
    if (value(root).numel() != 1) throw ConfigError("backward root must be a scalar");
    grad_buf(root)[0] = 1.0;
    for (Id id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.grad_ready || !n.back) continue;
        n.back();
    }
    // Make sure every node that participates has a buffer so grad() is safe.
    for (auto& n : nodes_)
        if (n.requires_grad && !n.grad_ready) {
            n.grad = Tensor::zeros(n.value.shape());
            n.grad_ready = true;
        }
}

}  // namespace ikami
