#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "nlc/tensor.hpp"

namespace nlc {

// Receives gradient contributions for the inputs of one node during the
// reverse sweep. Slot indices follow the order the op registered its inputs;
// slots for non-recorded (constant) inputs are empty and additions are no-ops.
class GradSink {
public:
    // Gradient buffer for input slot i, or an empty span if that input is a
    // constant. Buffers are zero-initialized and sized like the input tensor.
    std::span<double> slot(int i);
    void add(int i, std::span<const double> g);

private:
    friend class Graph;
    std::vector<std::span<double>> slots_;
};

using BackwardFn = std::function<void(std::span<const double> out_grad, GradSink& sink)>;

// Append-only tape of differentiable operations. Nodes are recorded in
// topological order; backward() runs one reverse sweep and accumulates
// parameter gradients. Single-threaded per graph.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Records an existing value as a differentiable leaf.
    Tensor leaf(const Tensor& value);

    // Leaf bound to a parameter; repeated use in one graph returns the same
    // node so gradient contributions accumulate correctly.
    Tensor use(Parameter& p);

    // Reverse sweep from a one-element loss. Parameter gradients accumulate
    // into Parameter::grad; repeated calls keep accumulating until the
    // parameters are cleared. Node gradient buffers stay queryable via
    // gradient() until the next backward() or reset().
    void backward(const Tensor& loss);

    // Gradient w.r.t. any recorded tensor, after backward(). Zero tensor if
    // the node was never reached.
    Tensor gradient(const Tensor& t) const;

    size_t node_count() const { return nodes_.size(); }
    void reset();

    // Op-construction interface: returns the recorded output tensor.
    // `inputs` lists the op's operands in slot order; constants are accepted
    // and simply produce empty gradient slots.
    Tensor record(Shape out_shape, std::vector<double> out_values,
                  const std::vector<const Tensor*>& inputs, BackwardFn fn);

    // Wraps an already-built tensor as the output of a recorded node.
    Tensor record(Tensor out, const std::vector<const Tensor*>& inputs, BackwardFn fn);

private:
    struct Node {
        std::vector<int> input_nodes;  // -1 for constant slots
        int64_t out_size = 0;
        BackwardFn backward;
        Parameter* param = nullptr;  // set for parameter leaves
    };

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;  // lazily sized per backward()
    std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace nlc
