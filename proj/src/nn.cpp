#include "d2sac/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace d2sac::nn {

DenseLayer make_dense(int in_dim, int out_dim, Activation act, Rng& rng) {
    if (in_dim <= 0 || out_dim <= 0) throw std::invalid_argument("make_dense: dimensions must be positive");
    DenseLayer layer;
    layer.weights = Tensor(out_dim, in_dim);
    layer.biases = Tensor(1, out_dim);
    layer.activation = act;
    const double bound = std::sqrt(1.0 / in_dim);
    for (int o = 0; o < out_dim; ++o)
        for (int k = 0; k < in_dim; ++k) layer.weights.at(o, k) = draw_uniform(rng, -bound, bound);
    layer.weights.requires_grad = true;
    layer.biases.requires_grad = true;
    return layer;
}

Tensor Stack::forward(const Tensor& x) const {
    if (layers.empty()) throw std::logic_error("Stack::forward: empty stack");
    if (x.cols() != layers.front().in_dim()) throw std::invalid_argument("Stack::forward: input dimension mismatch");
    Tensor h = x;
    Tensor next;
    for (const DenseLayer& l : layers) {
        kernels::linear(h, l.weights, l.biases, next);
        if (l.activation == Activation::Mish) {
            for (std::size_t i = 0; i < next.size(); ++i) next.data()[i] = mish(next.data()[i]);
        } else if (l.activation == Activation::Tanh) {
            for (std::size_t i = 0; i < next.size(); ++i) next.data()[i] = std::tanh(next.data()[i]);
        }
        h = std::move(next);
    }
    return h;
}

Var Stack::forward(ComputeGraph& g, Var x) {
    if (layers.empty()) throw std::logic_error("Stack::forward: empty stack");
    if (g.value(x).cols() != layers.front().in_dim()) throw std::invalid_argument("Stack::forward: input dimension mismatch");
    Var h = x;
    for (DenseLayer& l : layers) {
        Var w = g.param(l.weights);
        Var b = g.param(l.biases);
        h = g.activation(g.linear(h, w, b), l.activation);
    }
    return h;
}

void Stack::collect_params(std::vector<Tensor*>& out) {
    for (DenseLayer& l : layers) {
        out.push_back(&l.weights);
        out.push_back(&l.biases);
    }
}

Stack make_stack(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1) throw std::invalid_argument("make_stack: dims/acts mismatch");
    Stack s;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) s.layers.push_back(make_dense(dims[i], dims[i + 1], acts[i], rng));
    return s;
}

bool adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, double weight_decay) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: params/grads size mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be positive");
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameter set");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i])) throw std::invalid_argument("adam_step: gradient shape mismatch");
        if (!grads[i]->all_finite()) return false;
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i]->data();
        const double* g = grads[i]->data();
        double* m = state.m[i].data();
        double* v = state.v[i].data();
        const std::size_t n = params[i]->size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= lr * (mhat / (std::sqrt(vhat) + state.epsilon) + weight_decay * p[k]);
        }
    }
    return true;
}

Adam::Adam(std::vector<Tensor*> params, double lr, double weight_decay)
    : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay) {}

bool Adam::step(const ComputeGraph& g) {
    std::vector<const Tensor*> grads;
    grads.reserve(params_.size());
    for (Tensor* p : params_) grads.push_back(&g.grad_for(*p));
    return adam_step(params_, grads, state_, lr_, weight_decay_);
}

bool Adam::step(const std::vector<const Tensor*>& grads) {
    return adam_step(params_, grads, state_, lr_, weight_decay_);
}

void soft_update(const std::vector<Tensor*>& online, const std::vector<Tensor*>& target, double tau) {
    if (online.size() != target.size()) throw std::invalid_argument("soft_update: parameter count mismatch");
    if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("soft_update: tau must be in (0, 1]");
    for (std::size_t i = 0; i < online.size(); ++i) {
        if (!online[i]->same_shape(*target[i])) throw std::invalid_argument("soft_update: shape mismatch");
        double* t = target[i]->data();
        const double* o = online[i]->data();
        for (std::size_t k = 0; k < target[i]->size(); ++k) t[k] = tau * o[k] + (1.0 - tau) * t[k];
    }
}

void copy_params(const std::vector<Tensor*>& from, const std::vector<Tensor*>& to) {
    if (from.size() != to.size()) throw std::invalid_argument("copy_params: parameter count mismatch");
    for (std::size_t i = 0; i < from.size(); ++i) *to[i] = *from[i];
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::None: return "none";
        case Activation::Mish: return "mish";
        case Activation::Tanh: return "tanh";
    }
    return "?";
}

}  // namespace d2sac::nn
