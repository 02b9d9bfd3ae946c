#pragma once

#include <optional>
#include <span>
#include <vector>

#include "d2sac/nn.hpp"
#include "d2sac/schedule.hpp"

namespace d2sac::agod {

using nn::ComputeGraph;
using nn::Stack;
using nn::Tensor;
using nn::Var;

// Conditioned denoiser: a sinusoidal embedding of the step index runs through
// a small time head, is concatenated with [x_t, state], and the trunk emits a
// tanh-bounded noise estimate of action dimension.
class DiffusionActor {
public:
    DiffusionActor(int action_dim, int obs_dim, Rng& rng,
                   int time_dim = 16, int time_hidden = 32, int hidden = 256);
    DiffusionActor(int action_dim, int obs_dim, int time_dim, Stack time_mlp, Stack trunk);

    int action_dim() const { return action_dim_; }
    int obs_dim() const { return obs_dim_; }
    int time_dim() const { return time_dim_; }

    // tanh(eps_theta(x_t, t, s)); rows are batch samples.
    Tensor predict_noise(const Tensor& x_t, int t, const Tensor& states) const;
    Var predict_noise(ComputeGraph& g, Var x_t, int t, Var states);

    std::vector<Tensor*> parameters();
    std::vector<const nn::DenseLayer*> checkpoint_layers() const;

    Stack& time_mlp() { return time_mlp_; }
    Stack& trunk() { return trunk_; }

private:
    int action_dim_;
    int obs_dim_;
    int time_dim_;
    Stack time_mlp_;
    Stack trunk_;
};

// Softmax of the denoised x_0, plus the pre-softmax vector and an optional
// record of every intermediate x_t (t = T .. 0) for diagnostics.
struct ActionDistribution {
    std::vector<double> probs;
    std::vector<double> x0;
    std::vector<std::vector<double>> trace;
};

// Exogenous randomness of one reverse chain, drawn up front so the chain is a
// deterministic differentiable map of the parameters.
struct ChainNoise {
    Tensor x_init;                   // batch x actions, x_T draw
    std::vector<Tensor> step_noise;  // per denoising step T..1
};

ChainNoise draw_chain_noise(int batch, int action_dim, int steps, Rng& rng);

// One reverse transition:
//   mu    = (x_t - beta_t * tanh(eps_theta) / sqrt(1 - abar_t)) / sqrt(alpha_t)
//   x_t-1 = mu + noise_scale(t) * eps
Tensor denoise_step(const Tensor& x_t, int t, const Tensor& states, const DiffusionActor& actor,
                    const DiffusionSchedule& s, NoiseScaleMode mode, const Tensor& noise);

// Full reverse chain, batched, without gradient recording. When trace is
// given it receives x_T .. x_0 (T+1 tensors); x0_out receives the final
// pre-softmax chain state.
Tensor sample_probs(const DiffusionActor& actor, const DiffusionSchedule& s, NoiseScaleMode mode,
                    const Tensor& states, const ChainNoise& noise, std::vector<Tensor>* trace = nullptr,
                    Tensor* x0_out = nullptr);

// Same chain recorded on a graph; differentiable in the actor parameters.
Var sample_probs(ComputeGraph& g, DiffusionActor& actor, const DiffusionSchedule& s, NoiseScaleMode mode,
                 const Tensor& states, const ChainNoise& noise);

ActionDistribution sample_action_distribution(std::span<const double> obs, const DiffusionActor& actor,
                                              const DiffusionSchedule& s, NoiseScaleMode mode, Rng& rng,
                                              bool record_trace = false);

enum class SelectMode { Sample, Greedy };

// Greedy returns the argmax (ties to the lowest index); sample draws
// categorically from the probabilities.
int select_action(const ActionDistribution& dist, SelectMode mode, Rng& rng);
int argmax_index(std::span<const double> v);

// Shannon entropy in nats; zero-probability entries contribute nothing.
double entropy(std::span<const double> probs);

}  // namespace d2sac::agod
