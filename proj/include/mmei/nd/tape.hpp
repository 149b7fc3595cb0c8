#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mmei/nd/tensor.hpp"

namespace mmei::nd {

/// Gradient buffers indexed by node id, allocated on first touch.
class GradBuffer {
public:
    explicit GradBuffer(std::vector<std::size_t> sizes);

    std::span<double> at(NodeId id);
    bool has(NodeId id) const;
    std::span<const double> get(NodeId id) const;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::vector<double>> grads_;
};

/// Receives d(loss)/d(output) and accumulates into the inputs' buffers.
using BackwardFn = std::function<void(std::span<const double> grad_out, GradBuffer& grads)>;

/// Gradients of a scalar loss with respect to each tracked leaf.
class Gradients {
public:
    bool contains(const Tensor& leaf) const;
    const Tensor& of(const Tensor& leaf) const;
    const Tensor& of(NodeId id) const;
    std::size_t size() const noexcept { return by_node_.size(); }

private:
    friend class Tape;
    std::unordered_map<NodeId, Tensor> by_node_;
};

/// Define-by-run tape. Nodes are appended in evaluation order, so every
/// node's inputs have smaller ids than the node. Single-threaded.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a value as a differentiable leaf and returns the tracked handle.
    Tensor leaf(Tensor value);

    /// Records an op result. `inputs` must already be on this tape.
    Tensor record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward);

    /// Reverse sweep seeded with 1.0 at `loss`, which must be a tracked scalar.
    Gradients backward(const Tensor& loss) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<NodeId>& inputs_of(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).inputs; }

private:
    struct Node {
        std::vector<NodeId> inputs;
        std::size_t size = 0;
        Shape shape;
        bool is_leaf = false;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

}  // namespace mmei::nd
