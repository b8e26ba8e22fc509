#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace unmix::net {

// Dense row-major value container; shape is at most 3-dimensional in
// practice ([channels, length], [out, in, kernel], or flat).
struct Tensor {
    std::vector<double> v;
    std::vector<int> shape;

    Tensor() = default;
    Tensor(std::initializer_list<int> s) : shape(s) { v.assign(count(shape), 0.0); }
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) { v.assign(count(shape), 0.0); }

    static size_t count(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) n *= static_cast<size_t>(d);
        return n;
    }
    size_t size() const { return v.size(); }
    double& operator[](size_t i) { return v[i]; }
    double operator[](size_t i) const { return v[i]; }
};

// Reverse-mode tape.  Ops append nodes eagerly (define-by-run); backward()
// walks the nodes in reverse creation order.  Node ids are indices into the
// tape and stay valid for the tape's lifetime.
class Tape {
public:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated on demand, same shape as value
        std::function<void()> backward;  // adds into parent grads
        bool requires_grad = false;
        bool grad_alloc = false;
    };

    // Leaf that participates in differentiation (weights, inputs under test).
    int leaf(Tensor t);
    // Leaf treated as a constant; no gradient is ever propagated into it.
    int constant(Tensor t);
    // Used by ops: fresh node with given value and backward closure.
    int emplace(Tensor value, bool requires_grad, std::function<void()> backward);

    const Tensor& val(int id) const { return nodes_[id].value; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }

    // Gradient accumulator of a node; allocates zeros on first use.
    Tensor& grad(int id);
    bool has_grad(int id) const { return nodes_[id].grad_alloc; }

    // Seeds the given (scalar or tensor-shaped) outputs and runs the reverse
    // sweep.  Seeds are (node id, scalar weight); the node must be scalar.
    void backward(const std::vector<std::pair<int, double>>& seeds);
    // Clears all gradient accumulators (keeps values), enabling a second
    // backward pass over the same graph.
    void clear_grads();

    size_t num_nodes() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
};

}  // namespace unmix::net
