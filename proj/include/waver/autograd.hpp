#pragma once

#include "waver/matrix.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace waver {

class tape;

// Cheap handle into a tape node.
class var {
public:
    var() = default;

    const matrix & value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    bool valid() const { return owner_ != nullptr; }

private:
    friend class tape;
    friend class tape_ops;
    var(tape * owner, std::size_t index) : owner_(owner), index_(index) {}

    tape * owner_ = nullptr;
    std::size_t index_ = 0;
};

// Reverse-mode tape over dense matrices. One tape per training step; nodes
// are appended in evaluation order, so reverse creation order is a valid
// topological order for the backward sweep. Not thread-safe; a tape must
// stay on the thread that builds it.
class tape {
public:
    var param(matrix value);    // trainable leaf, gradient reported
    var constant(matrix value); // frozen leaf, gradient suppressed

    // Runs the backward sweep from a scalar loss (throws not_scalar
    // otherwise). Parameters not reachable from the loss keep zero gradient.
    void backward(var loss);

    // Gradient accumulated by the last backward(); zeros if untouched.
    matrix grad(var v) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    friend class tape_ops;
    friend class var;

    struct node {
        matrix value;
        matrix grad;         // empty until backward touches it
        bool requires_grad = false;
        std::function<void(tape &)> backprop; // empty for leaves
    };

    var emit(matrix value, bool requires_grad, std::function<void(tape &)> backprop);
    node & at(const var & v);
    const node & at(const var & v) const;
    matrix & grad_buffer(std::size_t index);

    std::vector<node> nodes_;
};

// Differentiable operations. Inputs must live on the same tape.
var matmul(var a, var b);
var matmul_nt(var a, var b); // a * b^T
var transpose(var a);
var add(var a, var b);
var sub(var a, var b);
var mul(var a, var b); // elementwise
var neg(var a);
var scale(var a, double s);
var add_row(var m, var row_vec);   // broadcast a 1xC row over every row of m
var div_by_scalar(var m, var s);   // s is 1x1
var relu(var a);
var softmax_rows(var a);
var l2_normalize_rows(var a);
var mean_pool_rows(var a);         // NxD -> 1xD
var row_logsumexp(var a);          // NxK -> Nx1, max-subtracted
var diagonal(var a);               // BxB -> Bx1
var sum_all(var a);                // -> 1x1
var mean_all(var a);               // -> 1x1
var concat_rows(std::span<const var> parts); // vertical stack
var last_row(var a);               // NxD -> 1xD
var detach(var a);                 // identity forward, stops gradients

} // namespace waver
