#include "moca/tape.hpp"

#include <string>

#include "moca/error.hpp"

namespace moca {

NodeId Tape::leaf(Tensor value, bool is_param) {
    TapeNode n;
    n.is_leaf = true;
    n.is_param = is_param;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::apply(OpKind kind, std::vector<NodeId> inputs, OpAttrs attrs) {
    std::vector<const Tensor*> in;
    in.reserve(inputs.size());
    const NodeId next = static_cast<NodeId>(nodes_.size());
    for (NodeId id : inputs) {
        if (id < 0 || id >= next) throw ContractError("tape: input id out of range");
        in.push_back(&nodes_[static_cast<size_t>(id)].value);
    }
    TapeNode n;
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.attrs = std::move(attrs);
    n.value = apply_primitive(kind, in, n.attrs);
    nodes_.push_back(std::move(n));
    return next;
}

std::unordered_map<NodeId, Tensor> Tape::backward(NodeId loss) const {
    if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size()) throw ContractError("backward: bad loss node");
    const TapeNode& ln = nodes_[static_cast<size_t>(loss)];
    if (!ln.value.is_scalar()) {
        throw ContractError("backward: loss must be scalar, got " + ln.value.shape_str());
    }

    // Gradients are always carried in f64; f32 rounding applies to values,
    // not to accumulated sensitivities.
    std::vector<Tensor> grads(nodes_.size());
    std::vector<char> live(nodes_.size(), 0);
    grads[static_cast<size_t>(loss)] = Tensor::full(ln.value.shape(), 1.0, DType::f64);
    live[static_cast<size_t>(loss)] = 1;

    for (NodeId id = loss; id >= 0; --id) {
        const size_t i = static_cast<size_t>(id);
        if (!live[i] || nodes_[i].is_leaf) continue;
        const TapeNode& n = nodes_[i];
        std::vector<const Tensor*> in;
        std::vector<Tensor*> gin;
        in.reserve(n.inputs.size());
        gin.reserve(n.inputs.size());
        for (NodeId src : n.inputs) {
            const size_t s = static_cast<size_t>(src);
            in.push_back(&nodes_[s].value);
            if (!live[s]) {
                grads[s] = Tensor::zeros(nodes_[s].value.shape(), DType::f64);
                live[s] = 1;
            }
            gin.push_back(&grads[s]);
        }
        backward_primitive(n.kind, in, n.value, grads[i], n.attrs, gin);
    }

    std::unordered_map<NodeId, Tensor> out;
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].is_param) continue;
        if (live[i]) {
            out.emplace(static_cast<NodeId>(i), std::move(grads[i]));
        } else {
            out.emplace(static_cast<NodeId>(i), Tensor::zeros(nodes_[i].value.shape(), DType::f64));
        }
    }
    return out;
}

bool Tape::replay_matches() const {
    for (const TapeNode& n : nodes_) {
        if (n.is_leaf) continue;
        std::vector<const Tensor*> in;
        in.reserve(n.inputs.size());
        for (NodeId src : n.inputs) in.push_back(&nodes_[static_cast<size_t>(src)].value);
        const Tensor redo = apply_primitive(n.kind, in, n.attrs);
        if (redo.values() != n.value.values() || !redo.same_shape(n.value)) return false;
    }
    return true;
}

}  // namespace moca
