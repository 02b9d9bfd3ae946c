#pragma once

#include <memory>
#include <span>
#include <vector>

#include "d2sac/agod.hpp"
#include "d2sac/nn.hpp"

namespace d2sac::rl {

using nn::ComputeGraph;
using nn::Tensor;
using nn::Var;

// Common surface of the diffusion actor and the plain-MLP ablation actor, so
// one training loop serves both.
class ActorModel {
public:
    virtual ~ActorModel() = default;

    // Batched action probabilities, no gradient recording.
    virtual Tensor probs(const Tensor& states, Rng& rng) const = 0;
    // Same map recorded on a graph; differentiable in the parameters.
    virtual Var probs_graph(ComputeGraph& g, const Tensor& states, Rng& rng) = 0;
    virtual agod::ActionDistribution distribution(std::span<const double> obs, Rng& rng,
                                                  bool record_trace = false) const = 0;
    virtual std::vector<Tensor*> parameters() = 0;
    virtual std::unique_ptr<ActorModel> clone() const = 0;
    virtual std::vector<const nn::DenseLayer*> checkpoint_layers() const = 0;
    virtual std::string kind() const = 0;
};

// AGOD reverse-diffusion policy.
class DiffusionActorModel final : public ActorModel {
public:
    DiffusionActorModel(agod::DiffusionActor actor, agod::DiffusionSchedule schedule,
                        agod::NoiseScaleMode mode);

    Tensor probs(const Tensor& states, Rng& rng) const override;
    Var probs_graph(ComputeGraph& g, const Tensor& states, Rng& rng) override;
    agod::ActionDistribution distribution(std::span<const double> obs, Rng& rng,
                                          bool record_trace = false) const override;
    std::vector<Tensor*> parameters() override;
    std::unique_ptr<ActorModel> clone() const override;
    std::vector<const nn::DenseLayer*> checkpoint_layers() const override;
    std::string kind() const override { return "d2sac"; }

    agod::DiffusionActor& actor() { return actor_; }
    const agod::DiffusionSchedule& schedule() const { return schedule_; }

private:
    agod::DiffusionActor actor_;
    agod::DiffusionSchedule schedule_;
    agod::NoiseScaleMode mode_;
};

// Softmax MLP actor: the SAC ablation that isolates the diffusion head's
// contribution. Same trunk widths, no denoising chain.
class MlpActorModel final : public ActorModel {
public:
    MlpActorModel(int action_dim, int obs_dim, Rng& rng, int hidden = 256);
    explicit MlpActorModel(nn::Stack stack);

    Tensor probs(const Tensor& states, Rng& rng) const override;
    Var probs_graph(ComputeGraph& g, const Tensor& states, Rng& rng) override;
    agod::ActionDistribution distribution(std::span<const double> obs, Rng& rng,
                                          bool record_trace = false) const override;
    std::vector<Tensor*> parameters() override;
    std::unique_ptr<ActorModel> clone() const override;
    std::vector<const nn::DenseLayer*> checkpoint_layers() const override;
    std::string kind() const override { return "sac_mlp"; }

private:
    nn::Stack stack_;
};

}  // namespace d2sac::rl
