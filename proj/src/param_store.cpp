#include "ikami/param_store.hpp"

#include <cmath>

#include "ikami/errors.hpp"

namespace ikami {

Tensor init_xavier(const std::vector<std::int64_t>& shape, std::uint64_t rng_seed) {
    Tensor t(shape);  // validates nonempty/positive dims
    double fan_in, fan_out;
    if (shape.size() == 1) {
        fan_in = static_cast<double>(shape[0]);
        fan_out = 1.0;
    } else {
        fan_out = static_cast<double>(shape[0]);
        fan_in = static_cast<double>(t.numel()) / fan_out;
    }
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(rng_seed);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

void ParamStore::add(const std::string& name, Tensor value) {
    if (params_.count(name)) throw ConfigError("parameter already exists: " + name);
    value.ensure_finite("parameter " + name);
    AdamState st;
    st.m = Tensor::zeros(value.shape());
    st.v = Tensor::zeros(value.shape());
    adam_[name] = std::move(st);
    params_[name] = std::move(value);
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("no such parameter: " + name);
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("no such parameter: " + name);
    return it->second;
}

std::int64_t ParamStore::step_count(const std::string& name) const {
    auto it = adam_.find(name);
    if (it == adam_.end()) throw ConfigError("no such parameter: " + name);
    return it->second.step;
}

void ParamStore::adam_step(const std::map<std::string, Tensor>& grads, double lr, const AdamHyper& hyper) {
    for (const auto& [name, g] : grads) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ConfigError("gradient for unknown parameter: " + name);
        Tensor& p = it->second;
        if (!p.same_shape(g))
            throw ConfigError("gradient shape mismatch for " + name + ": " + g.shape_str() + " vs " + p.shape_str());
        g.ensure_finite("gradient of " + name);

        AdamState& st = adam_[name];
        st.step += 1;
        const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(st.step));
        const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(st.step));
        for (std::int64_t i = 0; i < p.numel(); ++i) {
            st.m[i] = hyper.beta1 * st.m[i] + (1.0 - hyper.beta1) * g[i];
            st.v[i] = hyper.beta2 * st.v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
            const double mhat = st.m[i] / bc1;
            const double vhat = st.v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + hyper.eps);
        }
        p.ensure_finite("parameter " + name + " after adam step");
    }
}

Tape::Id TapeBinder::param(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const Tape::Id id = tape_.leaf(store_.get(name));
    bound_.emplace(name, id);
    return id;
}

Tape::Id TapeBinder::frozen(const std::string& name) { return tape_.constant(store_.get(name)); }

void TapeBinder::collect_grads(std::map<std::string, Tensor>& grads) const {
    for (const auto& [name, id] : bound_) {
        const Tensor& g = tape_.grad(id);
        auto it = grads.find(name);
        if (it == grads.end()) {
            grads.emplace(name, g);
        } else {
            for (std::int64_t i = 0; i < g.numel(); ++i) it->second[i] += g[i];
        }
    }
}

double finite_difference_check(const LossFn& loss, ParamStore store, int probes, double step,
                               std::uint64_t rng_seed) {
    if (probes <= 0) throw ConfigError("finite_difference_check: probes must be positive");
    if (step <= 0.0) throw ConfigError("finite_difference_check: step must be positive");

    std::map<std::string, Tensor> grads;
    const double base = loss(store, &grads);
    if (!std::isfinite(base)) throw NonFiniteError("finite_difference_check: non-finite loss");

    // Flatten coordinates in name order for deterministic probe selection.
    std::vector<std::pair<std::string, std::int64_t>> coords;
    for (const auto& [name, p] : store.params()) coords.emplace_back(name, p.numel());
    std::int64_t total = 0;
    for (const auto& [_, n] : coords) total += n;
    if (total == 0) throw ConfigError("finite_difference_check: empty parameter store");

    Rng rng(rng_seed);
    double max_rel = 0.0;
    for (int k = 0; k < probes; ++k) {
        std::int64_t flat = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(total)));
        std::string name;
        std::int64_t off = flat;
        for (const auto& [nm, n] : coords) {
            if (off < n) {
                name = nm;
                break;
            }
            off -= n;
        }
        Tensor& p = store.get(name);
        const double saved = p[off];
        p[off] = saved + step;
        const double up = loss(store, nullptr);
        p[off] = saved - step;
        const double dn = loss(store, nullptr);
        p[off] = saved;
        if (!std::isfinite(up) || !std::isfinite(dn))
            throw NonFiniteError("finite_difference_check: non-finite perturbed loss");

        const double numeric = (up - dn) / (2.0 * step);
        const auto git = grads.find(name);
        const double analytic = git == grads.end() ? 0.0 : git->second[off];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
    return max_rel;
}

}  // namespace ikami
