#include "waver/autograd.hpp"

#include "waver/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

namespace waver {

namespace {

void check_same_tape(const tape * a, const tape * b) {
    if (a != b || a == nullptr) {
        throw error(errc::invalid_config, "autograd: vars must come from one live tape");
    }
}

} // namespace

// Accessor shim so op implementations can reach tape internals without
// befriending every free function individually.
class tape_ops {
public:
    static tape * owner(const var & v) { return v.owner_; }
    static std::size_t index(const var & v) { return v.index_; }

    static const matrix & value(const var & v) { return v.owner_->at(v).value; }
    static bool requires_grad(const var & v) { return v.owner_->at(v).requires_grad; }

    static var emit(tape & t, matrix value, bool requires_grad,
                    std::function<void(tape &)> backprop) {
        return t.emit(std::move(value), requires_grad, std::move(backprop));
    }

    static const matrix * grad_if_any(tape & t, std::size_t index) {
        return t.nodes_[index].grad.empty() ? nullptr : &t.nodes_[index].grad;
    }

    static const matrix & value_at(tape & t, std::size_t index) { return t.nodes_[index].value; }

    static matrix & grad_buffer(tape & t, std::size_t index) { return t.grad_buffer(index); }
};

const matrix & var::value() const {
    if (owner_ == nullptr) {
        throw error(errc::invalid_config, "var: default-constructed handle");
    }
    return owner_->at(*this).value;
}

var tape::param(matrix value) {
    return emit(std::move(value), true, {});
}

var tape::constant(matrix value) {
    return emit(std::move(value), false, {});
}

var tape::emit(matrix value, bool requires_grad, std::function<void(tape &)> backprop) {
    nodes_.push_back(node{std::move(value), matrix(), requires_grad, std::move(backprop)});
    return var(this, nodes_.size() - 1);
}

tape::node & tape::at(const var & v) {
    return nodes_[v.index_];
}

const tape::node & tape::at(const var & v) const {
    return nodes_[v.index_];
}

matrix & tape::grad_buffer(std::size_t index) {
    node & n = nodes_[index];
    if (n.grad.empty()) {
        n.grad = matrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

void tape::backward(var loss) {
    check_same_tape(this, loss.owner_);
    if (at(loss).value.size() != 1) {
        throw error(errc::not_scalar, "backward: loss has " +
                                          std::to_string(at(loss).value.size()) + " elements");
    }
    for (node & n : nodes_) {
        n.grad = matrix();
    }
    grad_buffer(loss.index_)(0, 0) = 1.0;
    for (std::size_t i = loss.index_ + 1; i-- > 0;) {
        node & n = nodes_[i];
        if (n.backprop && n.requires_grad && !n.grad.empty()) {
            n.backprop(*this);
        }
    }
}

matrix tape::grad(var v) const {
    check_same_tape(this, v.owner_);
    const node & n = at(v);
    if (n.grad.empty()) {
        return matrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

namespace {

using ops = tape_ops;

// Adds src into the grad buffer of node `index` if that node wants gradients.
void accumulate(tape & t, var target, const matrix & src) {
    if (!ops::requires_grad(target)) {
        return;
    }
    matrix & g = ops::grad_buffer(t, ops::index(target));
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.flat()[i] += src.flat()[i];
    }
}

const matrix & out_grad(tape & t, std::size_t index) {
    const matrix * g = ops::grad_if_any(t, index);
    // backward() only invokes backprop when the buffer exists
    return *g;
}

var unary_op(var a, matrix value, std::function<void(tape &, std::size_t)> pull) {
    tape * t = ops::owner(a);
    check_same_tape(t, t);
    const bool rg = ops::requires_grad(a);
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    // self index is known only after emit; capture via shared state
    auto fn = std::make_shared<std::function<void(tape &, std::size_t)>>(std::move(pull));
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    ops::owner(out)->at(out).backprop = [fn, self](tape & tp) { (*fn)(tp, self); };
    return out;
}

} // namespace

var matmul(var a, var b) {
    tape * t = ops::owner(a);
    check_same_tape(t, ops::owner(b));
    matrix value = matmul(ops::value(a), ops::value(b));
    const bool rg = ops::requires_grad(a) || ops::requires_grad(b);
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    t->at(out).backprop = [a, b, self](tape & tp) {
        const matrix & g = out_grad(tp, self);
        accumulate(tp, a, matmul_nt(g, ops::value(b)));                  // dA = G * B^T
        accumulate(tp, b, matmul(transpose(ops::value(a)), g));          // dB = A^T * G
    };
    return out;
}

var matmul_nt(var a, var b) {
    tape * t = ops::owner(a);
    check_same_tape(t, ops::owner(b));
    matrix value = matmul_nt(ops::value(a), ops::value(b));
    const bool rg = ops::requires_grad(a) || ops::requires_grad(b);
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    t->at(out).backprop = [a, b, self](tape & tp) {
        const matrix & g = out_grad(tp, self);
        accumulate(tp, a, matmul(g, ops::value(b)));                     // dA = G * B
        accumulate(tp, b, matmul(transpose(g), ops::value(a)));          // dB = G^T * A
    };
    return out;
}

var transpose(var a) {
    return unary_op(a, transpose(ops::value(a)), [a](tape & tp, std::size_t self) {
        accumulate(tp, a, transpose(out_grad(tp, self)));
    });
}

var add(var a, var b) {
    tape * t = ops::owner(a);
    check_same_tape(t, ops::owner(b));
    const matrix & va = ops::value(a);
    const matrix & vb = ops::value(b);
    if (!va.same_shape(vb)) {
        throw error(errc::dimension_mismatch, "add: shape mismatch");
    }
    matrix value = va;
    for (std::size_t i = 0; i < value.size(); ++i) {
        value.flat()[i] += vb.flat()[i];
    }
    const bool rg = ops::requires_grad(a) || ops::requires_grad(b);
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    t->at(out).backprop = [a, b, self](tape & tp) {
        const matrix & g = out_grad(tp, self);
        accumulate(tp, a, g);
        accumulate(tp, b, g);
    };
    return out;
}

var sub(var a, var b) {
    return add(a, neg(b));
}

var mul(var a, var b) {
    tape * t = ops::owner(a);
    check_same_tape(t, ops::owner(b));
    const matrix & va = ops::value(a);
    const matrix & vb = ops::value(b);
    if (!va.same_shape(vb)) {
        throw error(errc::dimension_mismatch, "mul: shape mismatch");
    }
    matrix value = va;
    for (std::size_t i = 0; i < value.size(); ++i) {
        value.flat()[i] *= vb.flat()[i];
    }
    const bool rg = ops::requires_grad(a) || ops::requires_grad(b);
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    t->at(out).backprop = [a, b, self](tape & tp) {
        const matrix & g = out_grad(tp, self);
        matrix da = g;
        matrix db = g;
        for (std::size_t i = 0; i < g.size(); ++i) {
            da.flat()[i] *= ops::value(b).flat()[i];
            db.flat()[i] *= ops::value(a).flat()[i];
        }
        accumulate(tp, a, da);
        accumulate(tp, b, db);
    };
    return out;
}

var neg(var a) {
    return scale(a, -1.0);
}

var scale(var a, double s) {
    matrix value = ops::value(a);
    for (double & v : value.flat()) {
        v *= s;
    }
    return unary_op(a, std::move(value), [a, s](tape & tp, std::size_t self) {
        matrix g = out_grad(tp, self);
        for (double & v : g.flat()) {
            v *= s;
        }
        accumulate(tp, a, g);
    });
}

var add_row(var m, var row_vec) {
    tape * t = ops::owner(m);
    check_same_tape(t, ops::owner(row_vec));
    const matrix & vm = ops::value(m);
    const matrix & vr = ops::value(row_vec);
    if (vr.rows() != 1 || vr.cols() != vm.cols()) {
        throw error(errc::dimension_mismatch, "add_row: bias must be 1x" +
                                                  std::to_string(vm.cols()));
    }
    matrix value = vm;
    for (std::size_t i = 0; i < vm.rows(); ++i) {
        for (std::size_t j = 0; j < vm.cols(); ++j) {
            value(i, j) += vr(0, j);
        }
    }
    const bool rg = ops::requires_grad(m) || ops::requires_grad(row_vec);
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    t->at(out).backprop = [m, row_vec, self](tape & tp) {
        const matrix & g = out_grad(tp, self);
        accumulate(tp, m, g);
        matrix dr(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) {
                dr(0, j) += g(i, j);
            }
        }
        accumulate(tp, row_vec, dr);
    };
    return out;
}

var div_by_scalar(var m, var s) {
    tape * t = ops::owner(m);
    check_same_tape(t, ops::owner(s));
    const matrix & vs = ops::value(s);
    if (vs.size() != 1) {
        throw error(errc::not_scalar, "div_by_scalar: divisor must be 1x1");
    }
    const double sv = vs(0, 0);
    matrix value = ops::value(m);
    for (double & v : value.flat()) {
        v /= sv;
    }
    const bool rg = ops::requires_grad(m) || ops::requires_grad(s);
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    t->at(out).backprop = [m, s, sv, self](tape & tp) {
        const matrix & g = out_grad(tp, self);
        matrix dm = g;
        for (double & v : dm.flat()) {
            v /= sv;
        }
        accumulate(tp, m, dm);
        // d/ds (M/s) = -M/s^2
        double ds = 0.0;
        const matrix & vm = ops::value(m);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ds -= g.flat()[i] * vm.flat()[i];
        }
        accumulate(tp, s, matrix::scalar(ds / (sv * sv)));
    };
    return out;
}

var relu(var a) {
    matrix value = ops::value(a);
    for (double & v : value.flat()) {
        v = std::max(0.0, v);
    }
    return unary_op(a, std::move(value), [a](tape & tp, std::size_t self) {
        matrix g = out_grad(tp, self);
        const matrix & va = ops::value(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (va.flat()[i] <= 0.0) {
                g.flat()[i] = 0.0;
            }
        }
        accumulate(tp, a, g);
    });
}

var softmax_rows(var a) {
    matrix value = softmax_rows(ops::value(a));
    return unary_op(a, std::move(value), [a](tape & tp, std::size_t self) {
        const matrix & g = out_grad(tp, self);
        const matrix & sm = ops::value_at(tp, self); // forward output is the softmax itself
        matrix da(sm.rows(), sm.cols());
        for (std::size_t i = 0; i < sm.rows(); ++i) {
            double weighted = 0.0;
            for (std::size_t j = 0; j < sm.cols(); ++j) {
                weighted += g(i, j) * sm(i, j);
            }
            for (std::size_t j = 0; j < sm.cols(); ++j) {
                da(i, j) = sm(i, j) * (g(i, j) - weighted);
            }
        }
        accumulate(tp, a, da);
    });
}

var l2_normalize_rows(var a) {
    matrix value = l2_normalize_rows(ops::value(a));
    return unary_op(a, std::move(value), [a](tape & tp, std::size_t self) {
        const matrix & g = out_grad(tp, self);
        const matrix & va = ops::value(a);
        matrix da(va.rows(), va.cols());
        for (std::size_t i = 0; i < va.rows(); ++i) {
            const double n = l2_norm(va.row(i));
            double y_dot_g = 0.0;
            for (std::size_t j = 0; j < va.cols(); ++j) {
                y_dot_g += (va(i, j) / n) * g(i, j);
            }
            for (std::size_t j = 0; j < va.cols(); ++j) {
                da(i, j) = (g(i, j) - (va(i, j) / n) * y_dot_g) / n;
            }
        }
        accumulate(tp, a, da);
    });
}

var mean_pool_rows(var a) {
    const matrix & va = ops::value(a);
    matrix value = matrix::row_vector(mean_pool_rows(va));
    const std::size_t n_rows = va.rows();
    return unary_op(a, std::move(value), [a, n_rows](tape & tp, std::size_t self) {
        const matrix & g = out_grad(tp, self);
        matrix da(n_rows, g.cols());
        const double inv = 1.0 / static_cast<double>(n_rows);
        for (std::size_t i = 0; i < n_rows; ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) {
                da(i, j) = g(0, j) * inv;
            }
        }
        accumulate(tp, a, da);
    });
}

var row_logsumexp(var a) {
    const matrix & va = ops::value(a);
    if (va.cols() == 0) {
        throw error(errc::empty_input, "row_logsumexp: no columns");
    }
    matrix value(va.rows(), 1);
    for (std::size_t i = 0; i < va.rows(); ++i) {
        double mx = va(i, 0);
        for (std::size_t j = 1; j < va.cols(); ++j) {
            mx = std::max(mx, va(i, j));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < va.cols(); ++j) {
            sum += std::exp(va(i, j) - mx);
        }
        value(i, 0) = mx + std::log(sum);
    }
    return unary_op(a, std::move(value), [a](tape & tp, std::size_t self) {
        const matrix & g = out_grad(tp, self);
        const matrix sm = softmax_rows(ops::value(a));
        matrix da(sm.rows(), sm.cols());
        for (std::size_t i = 0; i < sm.rows(); ++i) {
            for (std::size_t j = 0; j < sm.cols(); ++j) {
                da(i, j) = g(i, 0) * sm(i, j);
            }
        }
        accumulate(tp, a, da);
    });
}

var diagonal(var a) {
    const matrix & va = ops::value(a);
    if (va.rows() != va.cols()) {
        throw error(errc::non_square, "diagonal: matrix is " + std::to_string(va.rows()) + "x" +
                                          std::to_string(va.cols()));
    }
    matrix value(va.rows(), 1);
    for (std::size_t i = 0; i < va.rows(); ++i) {
        value(i, 0) = va(i, i);
    }
    return unary_op(a, std::move(value), [a](tape & tp, std::size_t self) {
        const matrix & g = out_grad(tp, self);
        matrix da(g.rows(), g.rows());
        for (std::size_t i = 0; i < g.rows(); ++i) {
            da(i, i) = g(i, 0);
        }
        accumulate(tp, a, da);
    });
}

var sum_all(var a) {
    const matrix & va = ops::value(a);
    double total = 0.0;
    for (double v : va.flat()) {
        total += v;
    }
    return unary_op(a, matrix::scalar(total), [a](tape & tp, std::size_t self) {
        const matrix & g = out_grad(tp, self);
        const matrix & va = ops::value(a);
        matrix da(va.rows(), va.cols());
        for (double & v : da.flat()) {
            v = g(0, 0);
        }
        accumulate(tp, a, da);
    });
}

var mean_all(var a) {
    const std::size_t n = ops::value(a).size();
    if (n == 0) {
        throw error(errc::empty_input, "mean_all: empty matrix");
    }
    return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

var concat_rows(std::span<const var> parts) {
    if (parts.empty()) {
        throw error(errc::empty_input, "concat_rows: no parts");
    }
    tape * t = ops::owner(parts[0]);
    const std::size_t cols = ops::value(parts[0]).cols();
    std::size_t rows = 0;
    bool rg = false;
    for (const var & p : parts) {
        check_same_tape(t, ops::owner(p));
        if (ops::value(p).cols() != cols) {
            throw error(errc::dimension_mismatch, "concat_rows: column mismatch");
        }
        rows += ops::value(p).rows();
        rg = rg || ops::requires_grad(p);
    }
    matrix value(rows, cols);
    std::size_t r = 0;
    for (const var & p : parts) {
        const matrix & vp = ops::value(p);
        for (std::size_t i = 0; i < vp.rows(); ++i, ++r) {
            for (std::size_t j = 0; j < cols; ++j) {
                value(r, j) = vp(i, j);
            }
        }
    }
    if (!rg) {
        return ops::emit(*t, std::move(value), false, {});
    }
    std::vector<var> owned(parts.begin(), parts.end());
    var out = ops::emit(*t, std::move(value), true, {});
    const std::size_t self = ops::index(out);
    t->at(out).backprop = [owned, self](tape & tp) {
        const matrix & g = out_grad(tp, self);
        std::size_t r = 0;
        for (const var & p : owned) {
            const matrix & vp = ops::value(p);
            matrix dp(vp.rows(), vp.cols());
            for (std::size_t i = 0; i < vp.rows(); ++i, ++r) {
                for (std::size_t j = 0; j < vp.cols(); ++j) {
                    dp(i, j) = g(r, j);
                }
            }
            accumulate(tp, p, dp);
        }
    };
    return out;
}

var last_row(var a) {
    const matrix & va = ops::value(a);
    if (va.rows() == 0) {
        throw error(errc::empty_input, "last_row: no rows");
    }
    matrix value(1, va.cols());
    for (std::size_t j = 0; j < va.cols(); ++j) {
        value(0, j) = va(va.rows() - 1, j);
    }
    return unary_op(a, std::move(value), [a](tape & tp, std::size_t self) {
        const matrix & g = out_grad(tp, self);
        const matrix & va = ops::value(a);
        matrix da(va.rows(), va.cols());
        for (std::size_t j = 0; j < va.cols(); ++j) {
            da(va.rows() - 1, j) = g(0, j);
        }
        accumulate(tp, a, da);
    });
}

var detach(var a) {
    tape * t = ops::owner(a);
    check_same_tape(t, t);
    return ops::emit(*t, ops::value(a), false, {});
}

} // namespace waver
