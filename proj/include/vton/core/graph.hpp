#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "vton/core/tensor.hpp"

namespace vton {

class Graph;

// Lightweight handle into a Graph node.
struct Var {
    Graph* g = nullptr;
    int id = -1;
    const Tensor& val() const;
    const std::vector<int>& shape() const;
    bool valid() const { return g != nullptr && id >= 0; }
};

// Dynamic reverse-mode tape. One Graph per forward pass (per sample); not
// thread-safe, but independent graphs may run on different threads.
class Graph {
public:
    // Constant input; set needs_grad when input gradients are wanted
    // (finite-difference checks, losses w.r.t. inputs).
    Var leaf(Tensor value, bool needs_grad = false);

    // Trainable parameter, zero-copy. Gradients are collected per pointer.
    Var param(const Tensor* p);

    // Frozen parameter, zero-copy, no gradient.
    Var frozen(const Tensor* p);

    Var make_node(Tensor value, std::vector<int> parents, std::function<void(Graph&, int)> back);

    const Tensor& value(int id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        return n.ext ? *n.ext : n.owned;
    }
    bool needs(int id) const { return nodes_[static_cast<size_t>(id)].needs; }
    const std::vector<int>& parents(int id) const { return nodes_[static_cast<size_t>(id)].parents; }

    // Gradient buffer, allocated (zeroed) on first access.
    Tensor& grad_buf(int id);
    bool has_grad(int id) const { return !nodes_[static_cast<size_t>(id)].grad.empty(); }
    const Tensor& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }

    // Reverse sweep from a scalar loss node.
    void backward(Var loss);

    // After backward: gradients of all param leaves, accumulated per tensor.
    std::unordered_map<const Tensor*, Tensor> param_grads() const;

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* ext = nullptr;
        Tensor grad;
        std::vector<int> parents;
        std::function<void(Graph&, int)> back;
        bool needs = false;
        bool is_param = false;
    };
    std::vector<Node> nodes_;
};

inline const Tensor& Var::val() const { return g->value(id); }
inline const std::vector<int>& Var::shape() const { return val().shape(); }

}  // namespace vton
