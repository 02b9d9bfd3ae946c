#include "d2sac/agod.hpp"

#include <cmath>
#include <stdexcept>

namespace d2sac::agod {

using nn::Activation;

DiffusionActor::DiffusionActor(int action_dim, int obs_dim, Rng& rng,
                               int time_dim, int time_hidden, int hidden)
    : action_dim_(action_dim), obs_dim_(obs_dim), time_dim_(time_dim) {
    if (action_dim < 1 || obs_dim < 1) throw std::invalid_argument("DiffusionActor: bad dimensions");
    time_mlp_ = nn::make_stack({time_dim, time_hidden, time_dim},
                               {Activation::Mish, Activation::None}, rng);
    trunk_ = nn::make_stack({action_dim + obs_dim + time_dim, hidden, hidden, action_dim},
                            {Activation::Mish, Activation::Mish, Activation::Tanh}, rng);
    // The reverse chain amplifies x_T by 1/sqrt(abar_T); a random output layer
    // would bias the untrained policy away from uniform. Start it at zero so
    // the initial chain is pure noise propagation, symmetric across actions.
    trunk_.layers.back().weights.fill(0.0);
    trunk_.layers.back().biases.fill(0.0);
}

DiffusionActor::DiffusionActor(int action_dim, int obs_dim, int time_dim, Stack time_mlp, Stack trunk)
    : action_dim_(action_dim), obs_dim_(obs_dim), time_dim_(time_dim),
      time_mlp_(std::move(time_mlp)), trunk_(std::move(trunk)) {
    if (time_mlp_.in_dim() != time_dim_ || time_mlp_.out_dim() != time_dim_)
        throw std::invalid_argument("DiffusionActor: time head dimensions inconsistent");
    if (trunk_.in_dim() != action_dim_ + obs_dim_ + time_dim_ || trunk_.out_dim() != action_dim_)
        throw std::invalid_argument("DiffusionActor: trunk dimensions inconsistent");
}

Tensor DiffusionActor::predict_noise(const Tensor& x_t, int t, const Tensor& states) const {
    if (x_t.cols() != action_dim_) throw std::invalid_argument("predict_noise: x_t dimension mismatch");
    if (states.cols() != obs_dim_ || states.rows() != x_t.rows())
        throw std::invalid_argument("predict_noise: state dimension mismatch");
    const Tensor temb = time_mlp_.forward(nn::sinusoidal_pos_emb(t, time_dim_));
    Tensor in(x_t.rows(), action_dim_ + obs_dim_ + time_dim_);
    for (int i = 0; i < x_t.rows(); ++i) {
        double* dst = in.row_ptr(i);
        const double* px = x_t.row_ptr(i);
        for (int j = 0; j < action_dim_; ++j) dst[j] = px[j];
        const double* ps = states.row_ptr(i);
        for (int j = 0; j < obs_dim_; ++j) dst[action_dim_ + j] = ps[j];
        const double* pt = temb.row_ptr(0);
        for (int j = 0; j < time_dim_; ++j) dst[action_dim_ + obs_dim_ + j] = pt[j];
    }
    return trunk_.forward(in);
}

Var DiffusionActor::predict_noise(ComputeGraph& g, Var x_t, int t, Var states) {
    Var temb = time_mlp_.forward(g, g.input(nn::sinusoidal_pos_emb(t, time_dim_)));
    Var in = g.concat_cols({x_t, states, temb});
    return trunk_.forward(g, in);
}

std::vector<Tensor*> DiffusionActor::parameters() {
    std::vector<Tensor*> out;
    time_mlp_.collect_params(out);
    trunk_.collect_params(out);
    return out;
}

std::vector<const nn::DenseLayer*> DiffusionActor::checkpoint_layers() const {
    std::vector<const nn::DenseLayer*> out;
    for (const auto& l : time_mlp_.layers) out.push_back(&l);
    for (const auto& l : trunk_.layers) out.push_back(&l);
    return out;
}

ChainNoise draw_chain_noise(int batch, int action_dim, int steps, Rng& rng) {
    ChainNoise n;
    n.x_init = Tensor(batch, action_dim);
    for (std::size_t i = 0; i < n.x_init.size(); ++i) n.x_init.data()[i] = draw_normal(rng);
    n.step_noise.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        Tensor e(batch, action_dim);
        for (std::size_t i = 0; i < e.size(); ++i) e.data()[i] = draw_normal(rng);
        n.step_noise.push_back(std::move(e));
    }
    return n;
}

Tensor denoise_step(const Tensor& x_t, int t, const Tensor& states, const DiffusionActor& actor,
                    const DiffusionSchedule& s, NoiseScaleMode mode, const Tensor& noise) {
    if (t < 1 || t > s.steps) throw std::out_of_range("denoise_step: t out of range");
    const Tensor eps = actor.predict_noise(x_t, t, states);
    const double ca = 1.0 / std::sqrt(s.alpha[t]);
    const double ce = -s.beta[t] / (std::sqrt(1.0 - s.alpha_bar[t]) * std::sqrt(s.alpha[t]));
    Tensor mu;
    nn::kernels::axpby(ca, x_t, ce, eps, mu);
    const double ns = s.noise_scale(t, mode);
    if (ns == 0.0) return mu;
    Tensor out(mu.rows(), mu.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = mu.data()[i] + ns * noise.data()[i];
    return out;
}

Tensor sample_probs(const DiffusionActor& actor, const DiffusionSchedule& s, NoiseScaleMode mode,
                    const Tensor& states, const ChainNoise& noise, std::vector<Tensor>* trace,
                    Tensor* x0_out) {
    Tensor x = noise.x_init;
    if (trace) {
        trace->clear();
        trace->push_back(x);
    }
    for (int t = s.steps; t >= 1; --t) {
        x = denoise_step(x, t, states, actor, s, mode, noise.step_noise[s.steps - t]);
        if (trace) trace->push_back(x);
    }
    Tensor probs;
    nn::kernels::softmax_rows(x, probs);
    if (x0_out) *x0_out = std::move(x);
    return probs;
}

Var sample_probs(ComputeGraph& g, DiffusionActor& actor, const DiffusionSchedule& s, NoiseScaleMode mode,
                 const Tensor& states, const ChainNoise& noise) {
    Var st = g.input(states);
    Var x = g.input(noise.x_init);
    for (int t = s.steps; t >= 1; --t) {
        Var eps = actor.predict_noise(g, x, t, st);
        const double ca = 1.0 / std::sqrt(s.alpha[t]);
        const double ce = -s.beta[t] / (std::sqrt(1.0 - s.alpha_bar[t]) * std::sqrt(s.alpha[t]));
        Var mu = g.axpby(x, ca, eps, ce);
        const double ns = s.noise_scale(t, mode);
        if (ns == 0.0) {
            x = mu;
        } else {
            Tensor shift_by(noise.step_noise[s.steps - t].rows(), noise.step_noise[s.steps - t].cols());
            const Tensor& e = noise.step_noise[s.steps - t];
            for (std::size_t i = 0; i < shift_by.size(); ++i) shift_by.data()[i] = ns * e.data()[i];
            x = g.shift(mu, 1.0, std::move(shift_by));
        }
    }
    return g.softmax_rows(x);
}

ActionDistribution sample_action_distribution(std::span<const double> obs, const DiffusionActor& actor,
                                              const DiffusionSchedule& s, NoiseScaleMode mode, Rng& rng,
                                              bool record_trace) {
    if (static_cast<int>(obs.size()) != actor.obs_dim())
        throw std::invalid_argument("sample_action_distribution: observation dimension mismatch");
    Tensor state(1, actor.obs_dim());
    for (int j = 0; j < actor.obs_dim(); ++j) state.at(0, j) = obs[j];
    const ChainNoise noise = draw_chain_noise(1, actor.action_dim(), s.steps, rng);
    std::vector<Tensor> trace_tensors;
    Tensor x0;
    const Tensor probs = sample_probs(actor, s, mode, state, noise,
                                      record_trace ? &trace_tensors : nullptr, &x0);
    ActionDistribution dist;
    dist.probs.assign(probs.row_ptr(0), probs.row_ptr(0) + probs.cols());
    dist.x0.assign(x0.row_ptr(0), x0.row_ptr(0) + x0.cols());
    if (record_trace) {
        for (const Tensor& x : trace_tensors)
            dist.trace.emplace_back(x.row_ptr(0), x.row_ptr(0) + x.cols());
    }
    return dist;
}

int argmax_index(std::span<const double> v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

int select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng) {
    if (dist.probs.empty()) throw std::invalid_argument("select_action: empty distribution");
    if (mode == SelectMode::Greedy) return argmax_index(dist.probs);
    const double u = draw_uniform(rng, 0.0, 1.0);
    double acc = 0.0;
    for (int i = 0; i < static_cast<int>(dist.probs.size()); ++i) {
        acc += dist.probs[i];
        if (u < acc) return i;
    }
    return static_cast<int>(dist.probs.size()) - 1;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

}  // namespace d2sac::agod
