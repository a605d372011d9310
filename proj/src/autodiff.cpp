#include "trackid/autodiff.hpp"

#include <unordered_set>

namespace trackid {

NodeRef make_leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->grad = Tensor(value.shape());
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

NodeRef make_node(Tensor value, std::string op, std::vector<NodeRef> inputs, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->grad = Tensor(value.shape());
    n->value = std::move(value);
    n->op = std::move(op);
    n->inputs = std::move(inputs);
    n->backprop = std::move(backprop);
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    return n;
}

void backward(const NodeRef& loss) {
    if (!loss) throw NumericError("backward: null loss node");
    if (loss->value.numel() != 1)
        throw ShapeError("backward: loss must be scalar, got " + loss->value.shape_str());

    // Iterative post-order DFS; deep LSTM/ResNet graphs would overflow the
    // stack with recursion.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->inputs.size()) {
            Node* child = node->inputs[next_child++].get();
            if (!visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->grad.fill(1.0f);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->requires_grad) n->backprop(*n);
    }
}

}  // namespace trackid
