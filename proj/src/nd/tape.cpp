#include "mmei/nd/tape.hpp"

#include "mmei/error.hpp"

namespace mmei::nd {

GradBuffer::GradBuffer(std::vector<std::size_t> sizes)
    : sizes_(std::move(sizes)), grads_(sizes_.size()) {}

std::span<double> GradBuffer::at(NodeId id) {
    auto& g = grads_.at(static_cast<std::size_t>(id));
    if (g.empty()) g.assign(sizes_[static_cast<std::size_t>(id)], 0.0);
    return g;
}

bool GradBuffer::has(NodeId id) const {
    return !grads_.at(static_cast<std::size_t>(id)).empty();
}

std::span<const double> GradBuffer::get(NodeId id) const {
    return grads_.at(static_cast<std::size_t>(id));
}

bool Gradients::contains(const Tensor& leaf) const {
    return leaf.tracked() && by_node_.count(leaf.node()) != 0;
}

const Tensor& Gradients::of(const Tensor& leaf) const {
    if (!leaf.tracked()) throw IndexError("gradient requested for an untracked tensor");
    return of(leaf.node());
}

const Tensor& Gradients::of(NodeId id) const {
    auto it = by_node_.find(id);
    if (it == by_node_.end()) throw IndexError("no gradient for node " + std::to_string(id));
    return it->second;
}

Tensor Tape::leaf(Tensor value) {
    Tensor out = value.detached();
    Node node;
    node.size = out.size();
    node.shape = out.shape();
    node.is_leaf = true;
    nodes_.push_back(std::move(node));
    out.tape_ = this;
    out.node_ = static_cast<NodeId>(nodes_.size() - 1);
    return out;
}

Tensor Tape::record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
    const auto id = static_cast<NodeId>(nodes_.size());
    for (NodeId in : inputs) {
        if (in < 0 || in >= id) throw IndexError("tape input node out of order");
    }
    Node node;
    node.inputs = std::move(inputs);
    node.size = value.size();
    node.shape = value.shape();
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    value.tape_ = this;
    value.node_ = id;
    return value;
}

Gradients Tape::backward(const Tensor& loss) const {
    if (loss.size() != 1) throw ShapeError("backward needs a scalar loss, got " + shape_str(loss.shape()));
    if (loss.tape() != this) throw ParameterError("loss is not tracked on this tape");

    std::vector<std::size_t> sizes;
    sizes.reserve(nodes_.size());
    for (const auto& n : nodes_) sizes.push_back(n.size);
    GradBuffer grads(std::move(sizes));
    grads.at(loss.node())[0] = 1.0;

    for (NodeId id = loss.node(); id >= 0; --id) {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.is_leaf || !grads.has(id) || !node.backward) continue;
        node.backward(grads.get(id), grads);
    }

    Gradients out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto id = static_cast<NodeId>(i);
        if (!nodes_[i].is_leaf) continue;
        if (grads.has(id)) {
            auto g = grads.get(id);
            out.by_node_.emplace(id, Tensor(nodes_[i].shape, std::vector<double>(g.begin(), g.end())));
        } else {
            out.by_node_.emplace(id, Tensor::zeros(nodes_[i].shape));
        }
    }
    return out;
}

}  // namespace mmei::nd
