#include "unmix/net/tensor.hpp"

#include <stdexcept>

namespace unmix::net {

int Tape::leaf(Tensor t) {
    nodes_.push_back(Node{std::move(t), Tensor{}, nullptr, true, false});
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(Tensor t) {
    nodes_.push_back(Node{std::move(t), Tensor{}, nullptr, false, false});
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::emplace(Tensor value, bool requires_grad, std::function<void()> backward) {
    nodes_.push_back(Node{std::move(value), Tensor{},
                          requires_grad ? std::move(backward) : nullptr,
                          requires_grad, false});
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad(int id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
        n.grad = Tensor(n.value.shape);
        n.grad_alloc = true;
    }
    return n.grad;
}

void Tape::backward(const std::vector<std::pair<int, double>>& seeds) {
    for (const auto& [id, w] : seeds) {
        if (val(id).size() != 1)
            throw std::invalid_argument("Tape::backward: seed node must be scalar");
        grad(id).v[0] += w;
    }
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.grad_alloc && n.backward) n.backward();
    }
}

void Tape::clear_grads() {
    for (Node& n : nodes_) {
        n.grad = Tensor{};
        n.grad_alloc = false;
    }
}

}  // namespace unmix::net
