#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "d2sac/tensor.hpp"

namespace d2sac::nn {

enum class Activation { None, Mish, Tanh };

struct Var {
    int id = -1;
};

// Reverse-mode tape over dense-layer primitives. Ops are recorded in
// execution order, which is already a valid topological order, so the
// backward pass is a single reverse sweep that visits every node once.
class ComputeGraph {
public:
    // Leaf holding a differentiable parameter. Registering the same tensor
    // twice returns the same node, so reuse of one layer at several denoising
    // steps accumulates its gradient across all uses.
    Var param(Tensor& p);
    // Leaf holding a constant (states, noise draws, frozen Q-values).
    Var input(Tensor v);

    Var linear(Var x, Var w, Var b);
    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var axpby(Var a, double sa, Var b, double sb);
    // s * a + k, with k a constant tensor (no node recorded for it).
    Var shift(Var a, double s, Tensor k);
    Var activation(Var x, Activation act);
    // Column-wise concatenation; inputs with a single row are broadcast
    // across the batch.
    Var concat_cols(const std::vector<Var>& xs);
    Var softmax_rows(Var x);
    Var log(Var x);
    Var mul(Var a, Var b);
    // Row-wise dot product -> (n x 1).
    Var row_dot(Var a, Var b);
    // y_i = x[i, idx[i]] -> (n x 1).
    Var gather_cols(Var x, std::vector<int> idx);
    Var mean_all(Var x);
    // Constant copy of a recorded value; cuts gradient flow.
    Var detach(Var x);

    // Accumulates gradients of a scalar loss into every reachable node.
    void backward(Var loss);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    double scalar(Var v) const;
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
    // Gradient of the last backward() with respect to a registered parameter;
    // zero tensor if the parameter never influenced the loss.
    const Tensor& grad_for(const Tensor& p) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        std::function<void(ComputeGraph&)> back;
    };

    Var emplace(Tensor value, bool needs_grad, std::function<void(ComputeGraph&)> back);
    Tensor& grad_ref(int id) { return nodes_[id].grad; }
    bool wants(int id) const { return nodes_[id].needs_grad; }

    std::vector<Node> nodes_;
    std::unordered_map<const Tensor*, int> param_ids_;
    Tensor zero_grad_;
};

}  // namespace d2sac::nn
