#pragma once

#include <string>
#include <vector>

#include "d2sac/graph.hpp"
#include "d2sac/math.hpp"
#include "d2sac/rng.hpp"
#include "d2sac/tensor.hpp"

namespace d2sac::nn {

struct DenseLayer {
    Tensor weights;  // out_dim x in_dim
    Tensor biases;   // 1 x out_dim
    Activation activation = Activation::None;

    int in_dim() const { return weights.cols(); }
    int out_dim() const { return weights.rows(); }
};

// Fan-in scaled uniform weights, zero biases.
DenseLayer make_dense(int in_dim, int out_dim, Activation act, Rng& rng);

// Sequential stack of dense layers.
struct Stack {
    std::vector<DenseLayer> layers;

    Tensor forward(const Tensor& x) const;
    Var forward(ComputeGraph& g, Var x);
    void collect_params(std::vector<Tensor*>& out);
    int in_dim() const { return layers.front().in_dim(); }
    int out_dim() const { return layers.back().out_dim(); }
};

Stack make_stack(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

// Bias-corrected Adam with decoupled weight decay:
//   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
// Returns false and leaves parameters and state untouched when any gradient
// entry is non-finite.
bool adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, double weight_decay);

// Convenience wrapper binding one parameter set to its optimizer state.
class Adam {
public:
    Adam(std::vector<Tensor*> params, double lr, double weight_decay);

    bool step(const ComputeGraph& g);
    bool step(const std::vector<const Tensor*>& grads);

    const AdamState& state() const { return state_; }
    const std::vector<Tensor*>& params() const { return params_; }

private:
    std::vector<Tensor*> params_;
    AdamState state_;
    double lr_;
    double weight_decay_;
};

// target <- tau * online + (1 - tau) * target, per parameter.
void soft_update(const std::vector<Tensor*>& online, const std::vector<Tensor*>& target, double tau);

void copy_params(const std::vector<Tensor*>& from, const std::vector<Tensor*>& to);

std::string activation_name(Activation a);

}  // namespace d2sac::nn
