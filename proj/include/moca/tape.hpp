#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "moca/ops.hpp"
#include "moca/tensor.hpp"

namespace moca {

using NodeId = int32_t;

struct TapeNode {
    OpKind kind = OpKind::add;
    bool is_leaf = false;
    bool is_param = false;  // gradient requested for this leaf
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    Tensor value;
};

// Append-only record of one forward computation. Node ids are assigned in
// creation order, so inputs always precede outputs.
class Tape {
public:
    NodeId leaf(Tensor value, bool is_param = false);
    NodeId apply(OpKind kind, std::vector<NodeId> inputs, OpAttrs attrs = {});

    const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    const TapeNode& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
    size_t size() const { return nodes_.size(); }

    // d(loss)/d(param-leaf) for every is_param leaf; zeros when unreachable.
    std::unordered_map<NodeId, Tensor> backward(NodeId loss) const;

    // Recomputes every non-leaf node and checks it matches the stored value
    // bit for bit.
    bool replay_matches() const;

private:
    std::vector<TapeNode> nodes_;
};

}  // namespace moca
