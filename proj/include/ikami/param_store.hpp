#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "ikami/autodiff.hpp"
#include "ikami/rng.hpp"
#include "ikami/tensor.hpp"

namespace ikami {

// Xavier/Glorot uniform init: entries in +-sqrt(6/(fan_in+fan_out)).
// For a [m,n] matrix the fans are the two dims; a rank-1 [d] vector is
// treated as [1,d].
Tensor init_xavier(const std::vector<std::int64_t>& shape, std::uint64_t rng_seed);

struct AdamState {
    Tensor m;
    Tensor v;
    std::int64_t step = 0;
};

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Named parameter tensors plus per-parameter Adam state.
class ParamStore {
public:
    void add(const std::string& name, Tensor value);
    bool has(const std::string& name) const { return params_.count(name) > 0; }
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    const std::map<std::string, Tensor>& params() const { return params_; }

    // One Adam update per named gradient; unnamed parameters are untouched.
    // Each updated parameter's step counter advances exactly once.
    void adam_step(const std::map<std::string, Tensor>& grads, double lr, const AdamHyper& hyper = {});

    std::int64_t step_count(const std::string& name) const;

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, AdamState> adam_;
};

// Loss callback contract: evaluate the loss at the given store; when grads
// is non-null also populate analytic gradients (zero tensors for untouched
// parameters may be omitted). Must be deterministic in the store (freeze
// any sampled negatives before checking).
using LossFn = std::function<double(const ParamStore&, std::map<std::string, Tensor>* grads)>;

// Binds store parameters to tape leaves on demand and collects their
// gradients back out after backward().
class TapeBinder {
public:
    TapeBinder(Tape& tape, const ParamStore& store) : tape_(tape), store_(store) {}

    Tape::Id param(const std::string& name);   // trainable leaf
    Tape::Id frozen(const std::string& name);  // constant copy, no gradient

    // grads[name] += tape gradient of every bound trainable leaf
    void collect_grads(std::map<std::string, Tensor>& grads) const;

private:
    Tape& tape_;
    const ParamStore& store_;
    std::map<std::string, Tape::Id> bound_;
};

// Central-difference validation of analytic gradients on `probes` randomly
// chosen scalar coordinates. Returns the max relative error with
// denominator max(|analytic|, |numeric|, 1e-8).
double finite_difference_check(const LossFn& loss, ParamStore store, int probes, double step,
                               std::uint64_t rng_seed);

}  // namespace ikami
