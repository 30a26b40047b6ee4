#include "moca/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "moca/error.hpp"

namespace moca {

const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::scale: return "scale";
        case OpKind::softmax_rows: return "softmax-rows";
        case OpKind::log_softmax_rows: return "log-softmax-rows";
        case OpKind::layer_norm: return "layer-norm";
        case OpKind::gelu: return "gelu";
        case OpKind::relu: return "relu";
        case OpKind::embedding_lookup: return "embedding-lookup";
        case OpKind::concat: return "concat";
        case OpKind::slice: return "slice";
        case OpKind::transpose: return "transpose";
        case OpKind::cross_entropy_from_logprobs: return "cross-entropy-from-logprobs";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
    }
    return "?";
}

namespace {

[[noreturn]] void shape_error(OpKind kind, const Tensor& a, const Tensor& b) {
    throw ContractError(std::string(op_name(kind)) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

[[noreturn]] void shape_error(OpKind kind, const Tensor& a, const char* what) {
    throw ContractError(std::string(op_name(kind)) + ": " + what + " (got " + a.shape_str() + ")");
}

void expect_arity(OpKind kind, const std::vector<const Tensor*>& in, size_t lo, size_t hi) {
    if (in.size() < lo || in.size() > hi) {
        throw ContractError(std::string(op_name(kind)) + ": expects " + std::to_string(lo) +
                            (hi == lo ? "" : ".." + std::to_string(hi)) + " inputs, got " +
                            std::to_string(in.size()));
    }
    for (const Tensor* t : in) {
        if (t == nullptr) throw ContractError(std::string(op_name(kind)) + ": null input");
    }
    for (size_t i = 1; i < in.size(); ++i) {
        if (in[i]->dtype() != in[0]->dtype()) {
            throw ContractError(std::string(op_name(kind)) + ": mixed precision inputs");
        }
    }
}

// Rows/cols view treating rank-1 [n] as a single row.
size_t row_count(const Tensor& t) { return t.rank() <= 1 ? 1 : t.dim(0); }
size_t col_count(const Tensor& t) { return t.rank() == 0 ? 1 : t.dim(t.rank() - 1); }

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

Tensor forward_matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error(OpKind::matmul, a, b);
    const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n}, a.dtype());
    // ikj order: per-element accumulation still runs k ascending.
    for (size_t i = 0; i < m; ++i) {
        double* orow = out.data() + i * n;
        const double* arow = a.data() + i * k;
        for (size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b.data() + kk * n;
            for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor forward_add(const Tensor& a, const Tensor& b) {
    if (a.same_shape(b)) {
        Tensor out(a.shape(), a.dtype());
        for (size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
        return out;
    }
    // Trailing bias broadcast: [m x n] + [n].
    if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) {
        Tensor out(a.shape(), a.dtype());
        const size_t m = a.dim(0), n = a.dim(1);
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < n; ++j) out.at(i, j) = a.at(i, j) + b[j];
        return out;
    }
    shape_error(OpKind::add, a, b);
}

Tensor forward_scale(const Tensor& a, double factor) {
    Tensor out(a.shape(), a.dtype());
    for (size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * factor;
    return out;
}

Tensor forward_softmax(const Tensor& a, bool log_form) {
    if (a.rank() > 2) shape_error(log_form ? OpKind::log_softmax_rows : OpKind::softmax_rows, a, "rank <= 2 required");
    const size_t rows = row_count(a), cols = col_count(a);
    if (cols == 0) shape_error(log_form ? OpKind::log_softmax_rows : OpKind::softmax_rows, a, "empty rows");
    Tensor out(a.shape(), a.dtype());
    for (size_t r = 0; r < rows; ++r) {
        const double* x = a.data() + r * cols;
        double* y = out.data() + r * cols;
        double mx = x[0];
        for (size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
        double denom = 0.0;
        for (size_t j = 0; j < cols; ++j) denom += std::exp(x[j] - mx);
        if (log_form) {
            const double lse = std::log(denom);
            for (size_t j = 0; j < cols; ++j) y[j] = x[j] - mx - lse;
        } else {
            for (size_t j = 0; j < cols; ++j) y[j] = std::exp(x[j] - mx) / denom;
        }
    }
    return out;
}

Tensor forward_layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const size_t rows = row_count(x), cols = col_count(x);
    if (gain.rank() != 1 || gain.dim(0) != cols) shape_error(OpKind::layer_norm, x, gain);
    if (bias.rank() != 1 || bias.dim(0) != cols) shape_error(OpKind::layer_norm, x, bias);
    Tensor out(x.shape(), x.dtype());
    for (size_t r = 0; r < rows; ++r) {
        const double* xi = x.data() + r * cols;
        double* y = out.data() + r * cols;
        double mean = 0.0;
        for (size_t j = 0; j < cols; ++j) mean += xi[j];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            const double d = xi[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (size_t j = 0; j < cols; ++j) y[j] = gain[j] * ((xi[j] - mean) * inv) + bias[j];
    }
    return out;
}

Tensor forward_gelu(const Tensor& a) {
    Tensor out(a.shape(), a.dtype());
    for (size_t i = 0; i < a.numel(); ++i) {
        const double x = a[i];
        const double u = kGeluC * (x + kGeluA * x * x * x);
        out[i] = 0.5 * x * (1.0 + std::tanh(u));
    }
    return out;
}

Tensor forward_relu(const Tensor& a) {
    Tensor out(a.shape(), a.dtype());
    for (size_t i = 0; i < a.numel(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
    return out;
}

Tensor forward_embedding(const Tensor& table, const std::vector<int>& ids) {
    if (table.rank() != 2) shape_error(OpKind::embedding_lookup, table, "rank-2 table required");
    const size_t v = table.dim(0), d = table.dim(1);
    Tensor out({ids.size(), d}, table.dtype());
    for (size_t r = 0; r < ids.size(); ++r) {
        const int id = ids[r];
        if (id < 0 || static_cast<size_t>(id) >= v) {
            throw ContractError("embedding-lookup: id " + std::to_string(id) + " outside table of " +
                                std::to_string(v) + " rows");
        }
        std::copy_n(table.data() + static_cast<size_t>(id) * d, d, out.data() + r * d);
    }
    return out;
}

Tensor forward_concat(const std::vector<const Tensor*>& in, int dim) {
    const size_t rank = in[0]->rank();
    if (rank == 0 || rank > 2 || dim < 0 || static_cast<size_t>(dim) >= rank) {
        shape_error(OpKind::concat, *in[0], "rank-1/2 tensors with valid axis required");
    }
    std::vector<size_t> shape = in[0]->shape();
    for (size_t i = 1; i < in.size(); ++i) {
        if (in[i]->rank() != rank) shape_error(OpKind::concat, *in[0], *in[i]);
        for (size_t d = 0; d < rank; ++d) {
            if (d != static_cast<size_t>(dim) && in[i]->dim(d) != shape[d]) shape_error(OpKind::concat, *in[0], *in[i]);
        }
        shape[dim] += in[i]->dim(dim);
    }
    Tensor out(shape, in[0]->dtype());
    if (rank == 1 || dim == 0) {
        size_t off = 0;
        for (const Tensor* t : in) {
            std::copy_n(t->data(), t->numel(), out.data() + off);
            off += t->numel();
        }
    } else {  // rank 2, dim 1
        const size_t rows = shape[0];
        size_t col_off = 0;
        for (const Tensor* t : in) {
            const size_t c = t->dim(1);
            for (size_t r = 0; r < rows; ++r) std::copy_n(t->data() + r * c, c, out.data() + r * shape[1] + col_off);
            col_off += c;
        }
    }
    return out;
}

Tensor forward_slice(const Tensor& a, int dim, size_t start, size_t len) {
    if (a.rank() == 0 || a.rank() > 2 || dim < 0 || static_cast<size_t>(dim) >= a.rank()) {
        shape_error(OpKind::slice, a, "rank-1/2 tensor with valid axis required");
    }
    if (start + len > a.dim(dim) || len == 0) {
        throw ContractError(std::string("slice: range [") + std::to_string(start) + ", " +
                            std::to_string(start + len) + ") outside axis of size " + std::to_string(a.dim(dim)));
    }
    if (a.rank() == 1) {
        Tensor out({len}, a.dtype());
        std::copy_n(a.data() + start, len, out.data());
        return out;
    }
    const size_t rows = a.dim(0), cols = a.dim(1);
    if (dim == 0) {
        Tensor out({len, cols}, a.dtype());
        std::copy_n(a.data() + start * cols, len * cols, out.data());
        return out;
    }
    Tensor out({rows, len}, a.dtype());
    for (size_t r = 0; r < rows; ++r) std::copy_n(a.data() + r * cols + start, len, out.data() + r * len);
    return out;
}

Tensor forward_transpose(const Tensor& a) {
    if (a.rank() != 2) shape_error(OpKind::transpose, a, "rank-2 tensor required");
    const size_t m = a.dim(0), n = a.dim(1);
    Tensor out({n, m}, a.dtype());
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor forward_cross_entropy(const Tensor& logp, const std::vector<int>& ids) {
    if (logp.rank() != 2) shape_error(OpKind::cross_entropy_from_logprobs, logp, "rank-2 log-prob matrix required");
    if (ids.size() != logp.dim(0)) {
        throw ContractError("cross-entropy-from-logprobs: " + std::to_string(ids.size()) + " targets for " +
                            std::to_string(logp.dim(0)) + " rows");
    }
    const size_t v = logp.dim(1);
    Tensor out({ids.size(), 1}, logp.dtype());  // column vector, composes with matmul weighting
    for (size_t t = 0; t < ids.size(); ++t) {
        const int id = ids[t];
        if (id < 0 || static_cast<size_t>(id) >= v) {
            throw ContractError("cross-entropy-from-logprobs: target id " + std::to_string(id) +
                                " outside vocab of " + std::to_string(v));
        }
        out[t] = -logp.at(t, static_cast<size_t>(id));
    }
    return out;
}

Tensor forward_reduce(const Tensor& a, bool take_mean) {
    double acc = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) acc += a[i];
    if (take_mean) acc /= static_cast<double>(a.numel());
    return Tensor::scalar(acc, a.dtype());
}

}  // namespace

Tensor apply_primitive(OpKind kind, const std::vector<const Tensor*>& inputs, const OpAttrs& attrs) {
    Tensor out;
    switch (kind) {
        case OpKind::matmul:
            expect_arity(kind, inputs, 2, 2);
            out = forward_matmul(*inputs[0], *inputs[1]);
            break;
        case OpKind::add:
            expect_arity(kind, inputs, 2, 2);
            out = forward_add(*inputs[0], *inputs[1]);
            break;
        case OpKind::scale:
            expect_arity(kind, inputs, 1, 1);
            out = forward_scale(*inputs[0], attrs.factor);
            break;
        case OpKind::softmax_rows:
            expect_arity(kind, inputs, 1, 1);
            out = forward_softmax(*inputs[0], false);
            break;
        case OpKind::log_softmax_rows:
            expect_arity(kind, inputs, 1, 1);
            out = forward_softmax(*inputs[0], true);
            break;
        case OpKind::layer_norm:
            expect_arity(kind, inputs, 3, 3);
            out = forward_layer_norm(*inputs[0], *inputs[1], *inputs[2], attrs.eps);
            break;
        case OpKind::gelu:
            expect_arity(kind, inputs, 1, 1);
            out = forward_gelu(*inputs[0]);
            break;
        case OpKind::relu:
            expect_arity(kind, inputs, 1, 1);
            out = forward_relu(*inputs[0]);
            break;
        case OpKind::embedding_lookup:
            expect_arity(kind, inputs, 1, 1);
            out = forward_embedding(*inputs[0], attrs.ids);
            break;
        case OpKind::concat:
            expect_arity(kind, inputs, 1, 64);
            out = forward_concat(inputs, attrs.dim);
            break;
        case OpKind::slice:
            expect_arity(kind, inputs, 1, 1);
            out = forward_slice(*inputs[0], attrs.dim, attrs.start, attrs.len);
            break;
        case OpKind::transpose:
            expect_arity(kind, inputs, 1, 1);
            out = forward_transpose(*inputs[0]);
            break;
        case OpKind::cross_entropy_from_logprobs:
            expect_arity(kind, inputs, 1, 1);
            out = forward_cross_entropy(*inputs[0], attrs.ids);
            break;
        case OpKind::sum:
            expect_arity(kind, inputs, 1, 1);
            out = forward_reduce(*inputs[0], false);
            break;
        case OpKind::mean:
            expect_arity(kind, inputs, 1, 1);
            out = forward_reduce(*inputs[0], true);
            break;
    }
    out.quantize();
    if (!out.all_finite()) {
        throw NumericFault(std::string(op_name(kind)) + ": non-finite output");
    }
    return out;
}

namespace {

void backward_matmul(const Tensor& a, const Tensor& b, const Tensor& g, Tensor* da, Tensor* db) {
    const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (da) {
        for (size_t i = 0; i < m; ++i)
            for (size_t kk = 0; kk < k; ++kk) {
                double acc = 0.0;
                const double* grow = g.data() + i * n;
                const double* brow = b.data() + kk * n;
                for (size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                da->at(i, kk) += acc;
            }
    }
    if (db) {
        for (size_t kk = 0; kk < k; ++kk)
            for (size_t i = 0; i < m; ++i) {
                const double av = a.at(i, kk);
                const double* grow = g.data() + i * n;
                double* drow = db->data() + kk * n;
                for (size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
            }
    }
}

void backward_softmax(const Tensor& out, const Tensor& g, Tensor* dx) {
    const size_t rows = row_count(out), cols = col_count(out);
    for (size_t r = 0; r < rows; ++r) {
        const double* s = out.data() + r * cols;
        const double* gr = g.data() + r * cols;
        double dot = 0.0;
        for (size_t j = 0; j < cols; ++j) dot += gr[j] * s[j];
        double* d = dx->data() + r * cols;
        for (size_t j = 0; j < cols; ++j) d[j] += s[j] * (gr[j] - dot);
    }
}

void backward_log_softmax(const Tensor& out, const Tensor& g, Tensor* dx) {
    const size_t rows = row_count(out), cols = col_count(out);
    for (size_t r = 0; r < rows; ++r) {
        const double* l = out.data() + r * cols;
        const double* gr = g.data() + r * cols;
        double gsum = 0.0;
        for (size_t j = 0; j < cols; ++j) gsum += gr[j];
        double* d = dx->data() + r * cols;
        for (size_t j = 0; j < cols; ++j) d[j] += gr[j] - std::exp(l[j]) * gsum;
    }
}

void backward_layer_norm(const Tensor& x, const Tensor& gain, double eps, const Tensor& g, Tensor* dx,
                         Tensor* dgain, Tensor* dbias) {
    const size_t rows = row_count(x), cols = col_count(x);
    const double nc = static_cast<double>(cols);
    std::vector<double> xhat(cols);
    for (size_t r = 0; r < rows; ++r) {
        const double* xi = x.data() + r * cols;
        const double* gr = g.data() + r * cols;
        double mean = 0.0;
        for (size_t j = 0; j < cols; ++j) mean += xi[j];
        mean /= nc;
        double var = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            const double d = xi[j] - mean;
            var += d * d;
        }
        var /= nc;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (size_t j = 0; j < cols; ++j) xhat[j] = (xi[j] - mean) * inv;
        if (dgain)
            for (size_t j = 0; j < cols; ++j) (*dgain)[j] += gr[j] * xhat[j];
        if (dbias)
            for (size_t j = 0; j < cols; ++j) (*dbias)[j] += gr[j];
        if (dx) {
            double m1 = 0.0, m2 = 0.0;  // mean(dxhat), mean(dxhat * xhat)
            for (size_t j = 0; j < cols; ++j) {
                const double dxh = gr[j] * gain[j];
                m1 += dxh;
                m2 += dxh * xhat[j];
            }
            m1 /= nc;
            m2 /= nc;
            double* d = dx->data() + r * cols;
            for (size_t j = 0; j < cols; ++j) {
                const double dxh = gr[j] * gain[j];
                d[j] += inv * (dxh - m1 - xhat[j] * m2);
            }
        }
    }
}

}  // namespace

void backward_primitive(OpKind kind, const std::vector<const Tensor*>& inputs, const Tensor& output,
                        const Tensor& grad_out, const OpAttrs& attrs,
                        const std::vector<Tensor*>& grad_inputs) {
    switch (kind) {
        case OpKind::matmul:
            backward_matmul(*inputs[0], *inputs[1], grad_out, grad_inputs[0], grad_inputs[1]);
            break;
        case OpKind::add: {
            const Tensor& a = *inputs[0];
            const Tensor& b = *inputs[1];
            if (grad_inputs[0])
                for (size_t i = 0; i < a.numel(); ++i) (*grad_inputs[0])[i] += grad_out[i];
            if (grad_inputs[1]) {
                if (a.same_shape(b)) {
                    for (size_t i = 0; i < b.numel(); ++i) (*grad_inputs[1])[i] += grad_out[i];
                } else {  // bias broadcast: column sums
                    const size_t m = a.dim(0), n = a.dim(1);
                    for (size_t i = 0; i < m; ++i)
                        for (size_t j = 0; j < n; ++j) (*grad_inputs[1])[j] += grad_out.at(i, j);
                }
            }
            break;
        }
        case OpKind::scale:
            if (grad_inputs[0])
                for (size_t i = 0; i < grad_out.numel(); ++i) (*grad_inputs[0])[i] += attrs.factor * grad_out[i];
            break;
        case OpKind::softmax_rows:
            if (grad_inputs[0]) backward_softmax(output, grad_out, grad_inputs[0]);
            break;
        case OpKind::log_softmax_rows:
            if (grad_inputs[0]) backward_log_softmax(output, grad_out, grad_inputs[0]);
            break;
        case OpKind::layer_norm:
            backward_layer_norm(*inputs[0], *inputs[1], attrs.eps, grad_out, grad_inputs[0], grad_inputs[1],
                                grad_inputs[2]);
            break;
        case OpKind::gelu:
            if (grad_inputs[0]) {
                const Tensor& x = *inputs[0];
                for (size_t i = 0; i < x.numel(); ++i) {
                    const double xi = x[i];
                    const double u = kGeluC * (xi + kGeluA * xi * xi * xi);
                    const double th = std::tanh(u);
                    const double du = kGeluC * (1.0 + 3.0 * kGeluA * xi * xi);
                    const double deriv = 0.5 * (1.0 + th) + 0.5 * xi * (1.0 - th * th) * du;
                    (*grad_inputs[0])[i] += grad_out[i] * deriv;
                }
            }
            break;
        case OpKind::relu:
            if (grad_inputs[0]) {
                const Tensor& x = *inputs[0];
                // Subgradient 0 at the kink keeps zero-loss states stationary.
                for (size_t i = 0; i < x.numel(); ++i)
                    if (x[i] > 0.0) (*grad_inputs[0])[i] += grad_out[i];
            }
            break;
        case OpKind::embedding_lookup:
            if (grad_inputs[0]) {
                const size_t d = inputs[0]->dim(1);
                for (size_t r = 0; r < attrs.ids.size(); ++r) {
                    double* dst = grad_inputs[0]->data() + static_cast<size_t>(attrs.ids[r]) * d;
                    const double* src = grad_out.data() + r * d;
                    for (size_t j = 0; j < d; ++j) dst[j] += src[j];
                }
            }
            break;
        case OpKind::concat: {
            const size_t rank = inputs[0]->rank();
            if (rank == 1 || attrs.dim == 0) {
                size_t off = 0;
                for (size_t i = 0; i < inputs.size(); ++i) {
                    const size_t n = inputs[i]->numel();
                    if (grad_inputs[i])
                        for (size_t j = 0; j < n; ++j) (*grad_inputs[i])[j] += grad_out[off + j];
                    off += n;
                }
            } else {
                const size_t rows = inputs[0]->dim(0);
                const size_t total_cols = grad_out.dim(1);
                size_t col_off = 0;
                for (size_t i = 0; i < inputs.size(); ++i) {
                    const size_t c = inputs[i]->dim(1);
                    if (grad_inputs[i])
                        for (size_t r = 0; r < rows; ++r)
                            for (size_t j = 0; j < c; ++j)
                                grad_inputs[i]->at(r, j) += grad_out[r * total_cols + col_off + j];
                    col_off += c;
                }
            }
            break;
        }
        case OpKind::slice:
            if (grad_inputs[0]) {
                const Tensor& a = *inputs[0];
                if (a.rank() == 1) {
                    for (size_t j = 0; j < attrs.len; ++j) (*grad_inputs[0])[attrs.start + j] += grad_out[j];
                } else if (attrs.dim == 0) {
                    const size_t cols = a.dim(1);
                    for (size_t i = 0; i < attrs.len * cols; ++i)
                        (*grad_inputs[0])[attrs.start * cols + i] += grad_out[i];
                } else {
                    const size_t rows = a.dim(0);
                    for (size_t r = 0; r < rows; ++r)
                        for (size_t j = 0; j < attrs.len; ++j)
                            grad_inputs[0]->at(r, attrs.start + j) += grad_out[r * attrs.len + j];
                }
            }
            break;
        case OpKind::transpose:
            if (grad_inputs[0]) {
                const size_t m = inputs[0]->dim(0), n = inputs[0]->dim(1);
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < n; ++j) grad_inputs[0]->at(i, j) += grad_out.at(j, i);
            }
            break;
        case OpKind::cross_entropy_from_logprobs:
            if (grad_inputs[0]) {
                for (size_t t = 0; t < attrs.ids.size(); ++t)
                    grad_inputs[0]->at(t, static_cast<size_t>(attrs.ids[t])) -= grad_out[t];
            }
            break;
        case OpKind::sum:
            if (grad_inputs[0]) {
                const double gv = grad_out[0];
                for (size_t i = 0; i < grad_inputs[0]->numel(); ++i) (*grad_inputs[0])[i] += gv;
            }
            break;
        case OpKind::mean:
            if (grad_inputs[0]) {
                const double gv = grad_out[0] / static_cast<double>(grad_inputs[0]->numel());
                for (size_t i = 0; i < grad_inputs[0]->numel(); ++i) (*grad_inputs[0])[i] += gv;
            }
            break;
    }
}

}  // namespace moca
