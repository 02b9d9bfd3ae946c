#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

#include "d2sac/actor_model.hpp"
#include "d2sac/config.hpp"
#include "d2sac/env.hpp"
#include "d2sac/policies.hpp"
#include "d2sac/replay.hpp"

namespace d2sac::rl {

// Double critic: two independently trained Q-vector networks whose
// element-wise minimum is the value estimate.
struct CriticPair {
    nn::Stack q1;
    nn::Stack q2;

    CriticPair() = default;
    CriticPair(int action_dim, int obs_dim, Rng& rng, int hidden = 256);

    // min{Q1(s), Q2(s)}, element-wise over the action vector.
    Tensor min_q(const Tensor& states) const;
    std::vector<Tensor*> parameters();
};

struct UpdateResult {
    double loss = 0.0;
    bool applied = false;
};

// One Adam step on -pi^T q - alpha * H(pi), averaged over the batch. q is a
// frozen (b x actions) tensor: no gradient reaches the critics. Returns the
// batch mean entropy alongside the loss.
struct ActorUpdateResult {
    double loss = 0.0;
    double entropy = 0.0;
    bool applied = false;
};
ActorUpdateResult actor_update(const Batch& batch, ActorModel& actor, const Tensor& q_values,
                               double alpha, nn::Adam& opt, Rng& rng);

// TD update of both critics against
//   y_hat = r + gamma (1 - d) pi_hat(s')^T q_hat(s')   [+ optional entropy bonus]
// where pi_hat comes from target_policy and q_hat from the target critics.
// Loss reported is the batch mean of the two squared errors summed.
UpdateResult critic_update(const Batch& batch, CriticPair& critics, const CriticPair& target_critics,
                           const std::function<Tensor(const Tensor&)>& target_policy,
                           double gamma, nn::Adam& opt1, nn::Adam& opt2,
                           double entropy_bonus_alpha = 0.0);

struct EvalMetrics {
    double test_reward = 0.0;
    double finished_rate = 0.0;
    double crashed_rate = 0.0;
    double obtained_utility = 0.0;
    double lost_utility = 0.0;
};

// Greedy rollouts on held-out workloads; seeds labelled "eval-workload"/k off
// the master seed so every policy sees identical workloads.
EvalMetrics evaluate_policy(policies::Policy& policy, const env::EnvConfig& cfg,
                            const std::vector<env::AspProfile>& fleet, std::uint64_t master_seed,
                            int episodes);

struct MetricsRow {
    long step = 0;
    long env_steps = 0;
    double train_reward = 0.0;
    double test_reward = 0.0;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double entropy = 0.0;
    double crashed_rate = 0.0;
    double finished_rate = 0.0;
    double wall_time_s = 0.0;
};

struct TrainResult {
    std::vector<MetricsRow> log;
    EvalMetrics final_eval;
    std::unique_ptr<ActorModel> actor;
    std::vector<env::AspProfile> fleet;
    int rejected_updates = 0;
};

struct TrainHooks {
    // Called after each training step with the freshly appended row.
    std::function<void(const MetricsRow&)> on_step;
    // Reverse-chain snapshot rows: (step, t, action, probability).
    std::function<void(long step, int t, int action, double prob)> on_trace;
};

std::unique_ptr<ActorModel> make_actor_model(const harness::ExperimentConfig& cfg, Rng& init_rng);

// Full training loop: E steps of (collect C transitions, one batch update of
// actor, both critics, and targets), with a greedy evaluation episode at the
// configured cadence.
TrainResult train(const harness::ExperimentConfig& cfg, std::uint64_t master_seed,
                  const TrainHooks& hooks = {});

}  // namespace d2sac::rl
