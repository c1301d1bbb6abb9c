#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ikami/tensor.hpp"

namespace ikami {

// Reverse-mode tape over dense tensors. Ops are vectorized (whole matrices,
// index lists, contiguous segments), so a full GNN forward is a few dozen
// nodes. Creation order doubles as the topological order for the backward
// sweep; any op that produces NaN/Inf throws immediately.
class Tape {
public:
    using Id = int;

    Id leaf(Tensor value);      // trainable input; receives a gradient
    Id constant(Tensor value);  // frozen input; gradient not propagated into it

    // elementwise and shaping
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id affine(Id a, double scale, double shift);
    Id add_rowvec(Id a, Id v);  // [n,d] + broadcast [d]
    Id concat_cols(const std::vector<Id>& xs);
    Id relu(Id a);
    Id leaky_relu(Id a, double slope);
    Id tanh_op(Id a);
    Id sigmoid(Id a);
    Id log_op(Id a);
    Id abs_op(Id a);
    Id clamp(Id a, double lo, double hi);

    // gather / scatter
    Id gather_rows(Id a, std::vector<int> idx);
    Id gather_elems(Id a, std::vector<int> idx);
    Id scatter_rows(Id a, std::vector<int> idx, std::int64_t n_rows);

    // A [n,k] times B [m,k] transposed -> [n,m]
    Id matmul_nt(Id a, Id b);

    // row-paired reductions, both inputs [n,d] -> [n]
    Id rows_l1_dist(Id a, Id b);
    Id rows_dot(Id a, Id b);
    Id rownormalize(Id a);  // unit L2 rows; all-zero rows stay zero

    // contiguous segments given by offsets (size S+1)
    Id segment_softmax(Id scores, std::vector<std::int64_t> offsets);
    Id segment_weighted_rowsum(Id m, Id w, std::vector<std::int64_t> offsets);

    Id sum(Id a);  // all elements -> scalar [1]

    const Tensor& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad(Id id) const;
    double scalar_value(Id id) const;

    // Seeds d(root)=1 and sweeps the tape in reverse creation order.
    void backward(Id root);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_ready = false;
        std::function<void()> back;  // empty for leaves/constants
    };

    Id push(Tensor value, bool requires_grad, std::function<void()> back, const char* what);
    Tensor& grad_buf(Id id);
    bool needs_grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

    std::vector<Node> nodes_;
};

}  // namespace ikami
