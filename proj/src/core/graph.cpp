#include "vton/core/graph.hpp"

namespace vton {

Var Graph::leaf(Tensor value, bool needs_grad) {
    Node n;
    n.owned = std::move(value);
    n.needs = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(const Tensor* p) {
    Node n;
    n.ext = p;
    n.needs = true;
    n.is_param = true;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::frozen(const Tensor* p) {
    Node n;
    n.ext = p;
    n.needs = false;
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::make_node(Tensor value, std::vector<int> parents, std::function<void(Graph&, int)> back) {
    Node n;
    n.owned = std::move(value);
    bool needs = false;
    for (int p : parents) needs = needs || nodes_[static_cast<size_t>(p)].needs;
    n.needs = needs;
    n.parents = std::move(parents);
    if (needs) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad_buf(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty()) n.grad = Tensor(n.ext ? n.ext->shape() : n.owned.shape());
    return n.grad;
}

void Graph::backward(Var loss) {
    if (loss.g != this) throw ArgError("backward: foreign Var");
    if (value(loss.id).numel() != 1) throw ShapeError("backward: loss must be scalar");
    grad_buf(loss.id)[0] = 1.0f;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (!n.needs || n.grad.empty() || !n.back) continue;
        n.back(*this, i);
    }
}

std::unordered_map<const Tensor*, Tensor> Graph::param_grads() const {
    std::unordered_map<const Tensor*, Tensor> out;
    for (const Node& n : nodes_) {
        if (!n.is_param || n.grad.empty()) continue;
        auto it = out.find(n.ext);
        if (it == out.end()) {
            out.emplace(n.ext, n.grad);
        } else {
            Tensor& acc = it->second;
            for (int64_t i = 0; i < acc.numel(); ++i) acc[i] += n.grad[i];
        }
    }
    return out;
}

}  // namespace vton
