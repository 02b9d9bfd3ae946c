#include "d2sac/actor_model.hpp"

#include <stdexcept>

namespace d2sac::rl {

DiffusionActorModel::DiffusionActorModel(agod::DiffusionActor actor, agod::DiffusionSchedule schedule,
                                         agod::NoiseScaleMode mode)
    : actor_(std::move(actor)), schedule_(std::move(schedule)), mode_(mode) {}

Tensor DiffusionActorModel::probs(const Tensor& states, Rng& rng) const {
    const agod::ChainNoise noise =
        agod::draw_chain_noise(states.rows(), actor_.action_dim(), schedule_.steps, rng);
    return agod::sample_probs(actor_, schedule_, mode_, states, noise);
}

Var DiffusionActorModel::probs_graph(ComputeGraph& g, const Tensor& states, Rng& rng) {
    const agod::ChainNoise noise =
        agod::draw_chain_noise(states.rows(), actor_.action_dim(), schedule_.steps, rng);
    return agod::sample_probs(g, actor_, schedule_, mode_, states, noise);
}

agod::ActionDistribution DiffusionActorModel::distribution(std::span<const double> obs, Rng& rng,
                                                           bool record_trace) const {
    return agod::sample_action_distribution(obs, actor_, schedule_, mode_, rng, record_trace);
}

std::vector<Tensor*> DiffusionActorModel::parameters() { return actor_.parameters(); }

std::unique_ptr<ActorModel> DiffusionActorModel::clone() const {
    return std::make_unique<DiffusionActorModel>(*this);
}

std::vector<const nn::DenseLayer*> DiffusionActorModel::checkpoint_layers() const {
    return actor_.checkpoint_layers();
}

MlpActorModel::MlpActorModel(int action_dim, int obs_dim, Rng& rng, int hidden) {
    stack_ = nn::make_stack({obs_dim, hidden, hidden, action_dim},
                            {nn::Activation::Mish, nn::Activation::Mish, nn::Activation::None}, rng);
}

MlpActorModel::MlpActorModel(nn::Stack stack) : stack_(std::move(stack)) {}

Tensor MlpActorModel::probs(const Tensor& states, Rng&) const {
    Tensor out;
    nn::kernels::softmax_rows(stack_.forward(states), out);
    return out;
}

Var MlpActorModel::probs_graph(ComputeGraph& g, const Tensor& states, Rng&) {
    return g.softmax_rows(stack_.forward(g, g.input(states)));
}

agod::ActionDistribution MlpActorModel::distribution(std::span<const double> obs, Rng& rng,
                                                     bool) const {
    if (static_cast<int>(obs.size()) != stack_.in_dim())
        throw std::invalid_argument("MlpActorModel: observation dimension mismatch");
    Tensor state(1, stack_.in_dim());
    for (int j = 0; j < state.cols(); ++j) state.at(0, j) = obs[j];
    const Tensor logits = stack_.forward(state);
    Tensor p;
    nn::kernels::softmax_rows(logits, p);
    agod::ActionDistribution dist;
    dist.probs.assign(p.row_ptr(0), p.row_ptr(0) + p.cols());
    dist.x0.assign(logits.row_ptr(0), logits.row_ptr(0) + logits.cols());
    (void)rng;
    return dist;
}

std::vector<Tensor*> MlpActorModel::parameters() {
    std::vector<Tensor*> out;
    stack_.collect_params(out);
    return out;
}

std::unique_ptr<ActorModel> MlpActorModel::clone() const {
    return std::make_unique<MlpActorModel>(*this);
}

std::vector<const nn::DenseLayer*> MlpActorModel::checkpoint_layers() const {
    std::vector<const nn::DenseLayer*> out;
    for (const auto& l : stack_.layers) out.push_back(&l);
    return out;
}

}  // namespace d2sac::rl
