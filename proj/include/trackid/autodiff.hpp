#pragma once
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "trackid/tensor.hpp"

namespace trackid {

// Reverse-mode autodiff record. A Node binds a value tensor to its gradient
// buffer and the operation that produced it; leaves have no producer. Graphs
// are built and swept by one logical thread; kernels parallelize internally.
struct Node {
    Tensor value;
    Tensor grad;  // same shape as value, zero until backward touches it
    bool requires_grad = false;
    std::string op;                       // producer name, empty for leaves
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backprop;  // pulls grad into the inputs

    bool is_leaf() const { return op.empty(); }
    void zero_grad() { grad.fill(0.0f); }
};

using NodeRef = std::shared_ptr<Node>;

NodeRef make_leaf(Tensor value, bool requires_grad);
NodeRef make_node(Tensor value, std::string op, std::vector<NodeRef> inputs, std::function<void(Node&)> backprop);

// Seeds d(loss)/d(loss)=1 and sweeps the graph in reverse topological order,
// accumulating into every requires-grad leaf. Throws on non-scalar loss.
void backward(const NodeRef& loss);

}  // namespace trackid
