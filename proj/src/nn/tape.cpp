#include "ldif/nn/tape.hpp"

#include "ldif/error.hpp"

namespace ldif::nn {

Var Tape::constant(NumArray value) {
    nodes_.push_back(Node{std::move(value), {}, {}, false});
    return Var{nodes_.size() - 1};
}

Var Tape::variable(NumArray value) {
    nodes_.push_back(Node{std::move(value), {}, {}, true});
    return Var{nodes_.size() - 1};
}

Var Tape::record(NumArray value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    for (Var in : inputs) needs = needs || (in.valid() && node(in).requires_grad);
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, needs});
    return Var{nodes_.size() - 1};
}

Var Tape::record(NumArray value, const std::vector<Var>& inputs, Backward backward) {
    bool needs = false;
    for (Var in : inputs) needs = needs || (in.valid() && node(in).requires_grad);
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, needs});
    return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (v.id >= nodes_.size()) throw IndexError("tape variable " + std::to_string(v.id) + " is not recorded");
    return nodes_[v.id];
}

const NumArray& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

NumArray Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.empty()) return NumArray(n.value.shape());
    return n.grad;
}

NumArray& Tape::grad_buffer(Var v) {
    node(v);
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = NumArray(n.value.shape());
    return n.grad;
}

void Tape::backward(Var loss) {
    if (node(loss).value.size() != 1) {
        throw ShapeError("backward target must be a scalar, got shape " + shape_string(node(loss).value.shape()));
    }
    for (auto& n : nodes_) n.grad = NumArray();
    visits_ = 0;
    grad_buffer(loss).fill(1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.backward || n.grad.empty()) continue;
        ++visits_;
        // Closures only touch their inputs' buffers, which precede this node.
        n.backward(*this, n.grad);
    }
}

}  // namespace ldif::nn
