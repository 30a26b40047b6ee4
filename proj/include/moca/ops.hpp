#pragma once

#include <vector>

#include "moca/tensor.hpp"

namespace moca {

enum class OpKind {
    matmul,
    add,
    scale,
    softmax_rows,
    log_softmax_rows,
    layer_norm,
    gelu,
    relu,
    embedding_lookup,
    concat,
    slice,
    transpose,
    cross_entropy_from_logprobs,
    sum,
    mean,
};

const char* op_name(OpKind kind);

struct OpAttrs {
    double factor = 1.0;      // scale
    int dim = 0;              // concat / slice axis
    size_t start = 0;         // slice
    size_t len = 0;           // slice
    std::vector<int> ids;     // embedding_lookup rows / cross_entropy targets
    double eps = 1e-5;        // layer_norm
};

// Pure forward kernel. Shape mismatches name the primitive and both shapes;
// non-finite outputs raise NumericFault. Shared by the recording tape and the
// no-grad inference paths so both produce identical values.
Tensor apply_primitive(OpKind kind, const std::vector<const Tensor*>& inputs, const OpAttrs& attrs = {});

// Accumulates d(loss)/d(input) into grad_inputs given d(loss)/d(output).
// grad_inputs entries may be null to skip an input. Gradients stay in f64.
void backward_primitive(OpKind kind, const std::vector<const Tensor*>& inputs, const Tensor& output,
                        const Tensor& grad_out, const OpAttrs& attrs,
                        const std::vector<Tensor*>& grad_inputs);

}  // namespace moca
