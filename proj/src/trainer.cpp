#include "d2sac/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace d2sac::rl {

using nn::Activation;

CriticPair::CriticPair(int action_dim, int obs_dim, Rng& rng, int hidden) {
    q1 = nn::make_stack({obs_dim, hidden, hidden, action_dim},
                        {Activation::Mish, Activation::Mish, Activation::None}, rng);
    q2 = nn::make_stack({obs_dim, hidden, hidden, action_dim},
                        {Activation::Mish, Activation::Mish, Activation::None}, rng);
    // Flat initial Q: random output heads would hand the actor arbitrary
    // action preferences before any reward has been seen.
    for (nn::Stack* s : {&q1, &q2}) {
        s->layers.back().weights.fill(0.0);
        s->layers.back().biases.fill(0.0);
    }
}

Tensor CriticPair::min_q(const Tensor& states) const {
    const Tensor a = q1.forward(states);
    const Tensor b = q2.forward(states);
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::min(a.data()[i], b.data()[i]);
    return out;
}

std::vector<Tensor*> CriticPair::parameters() {
    std::vector<Tensor*> out;
    q1.collect_params(out);
    q2.collect_params(out);
    return out;
}

ActorUpdateResult actor_update(const Batch& batch, ActorModel& actor, const Tensor& q_values,
                               double alpha, nn::Adam& opt, Rng& rng) {
    if (batch.size() == 0) throw std::invalid_argument("actor_update: empty batch");
    ComputeGraph g;
    Var probs = actor.probs_graph(g, batch.states, rng);
    Var q = g.input(q_values);
    Var objective = g.row_dot(probs, q);                 // pi^T q per row
    Var plogp = g.row_dot(probs, g.log(probs));          // -H per row
    Var loss = g.mean_all(g.axpby(objective, -1.0, plogp, alpha));

    ActorUpdateResult res;
    res.loss = g.scalar(loss);
    double h = 0.0;
    for (int i = 0; i < batch.size(); ++i) h -= g.value(plogp).at(i, 0);
    res.entropy = h / batch.size();
    if (!std::isfinite(res.loss)) return res;  // aborted step
    g.backward(loss);
    res.applied = opt.step(g);
    return res;
}

UpdateResult critic_update(const Batch& batch, CriticPair& critics, const CriticPair& target_critics,
                           const std::function<Tensor(const Tensor&)>& target_policy,
                           double gamma, nn::Adam& opt1, nn::Adam& opt2,
                           double entropy_bonus_alpha) {
    const int b = batch.size();
    if (b == 0) throw std::invalid_argument("critic_update: empty batch");

    // Target values carry no gradient: the target actor's diffusion sample and
    // the element-wise min of the target critics are plain tensors.
    const Tensor next_probs = target_policy(batch.next_states);
    const Tensor next_q = target_critics.min_q(batch.next_states);
    Tensor y_hat(b, 1);
    for (int i = 0; i < b; ++i) {
        double v = 0.0;
        const double* p = next_probs.row_ptr(i);
        const double* q = next_q.row_ptr(i);
        for (int j = 0; j < next_probs.cols(); ++j) v += p[j] * q[j];
        if (entropy_bonus_alpha != 0.0) {
            double h = 0.0;
            for (int j = 0; j < next_probs.cols(); ++j)
                if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
            v += entropy_bonus_alpha * h;
        }
        y_hat.at(i, 0) = batch.rewards[i] + gamma * (1.0 - batch.dones[i]) * v;
    }

    UpdateResult res;
    double total = 0.0;
    bool ok = true;
    for (int which = 0; which < 2; ++which) {
        nn::Stack& critic = which == 0 ? critics.q1 : critics.q2;
        nn::Adam& opt = which == 0 ? opt1 : opt2;
        ComputeGraph g;
        Var q = critic.forward(g, g.input(batch.states));
        Var y = g.gather_cols(q, batch.actions);
        Var diff = g.axpby(g.input(y_hat), 1.0, y, -1.0);
        Var loss = g.mean_all(g.mul(diff, diff));
        const double l = g.scalar(loss);
        total += l;
        if (!std::isfinite(l)) {
            ok = false;
            continue;  // aborted step for this critic
        }
        g.backward(loss);
        ok = opt.step(g) && ok;
    }
    res.loss = total;
    res.applied = ok;
    return res;
}

EvalMetrics evaluate_policy(policies::Policy& policy, const env::EnvConfig& cfg,
                            const std::vector<env::AspProfile>& fleet, std::uint64_t master_seed,
                            int episodes) {
    if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
    env::AspEnvironment sim(cfg, fleet);
    EvalMetrics m;
    long arrived = 0, finished = 0, crashed = 0;
    for (int k = 0; k < episodes; ++k) {
        Rng workload_rng = make_rng(master_seed, "eval-workload", static_cast<std::uint64_t>(k));
        Rng policy_rng = make_rng(master_seed, "eval-noise", static_cast<std::uint64_t>(k));
        std::vector<double> obs = sim.reset(env::generate_workload(
            workload_rng, cfg.task_count, cfg.arrival_rate, cfg.task_steps_min, cfg.task_steps_max,
            cfg.duration_min, cfg.duration_max));
        policy.begin_episode(sim);
        while (!sim.done()) {
            const int a = policy.act(obs, policy_rng);
            obs = sim.step(a).observation;
        }
        const env::EpisodeStats& st = sim.stats();
        m.test_reward += st.cumulative_reward;
        m.obtained_utility += st.obtained_utility;
        m.lost_utility += st.lost_utility;
        arrived += st.arrived;
        finished += st.finished;
        crashed += st.crashed;
    }
    m.test_reward /= episodes;
    m.obtained_utility /= episodes;
    m.lost_utility /= episodes;
    m.finished_rate = arrived ? static_cast<double>(finished) / arrived : 0.0;
    m.crashed_rate = arrived ? static_cast<double>(crashed) / arrived : 0.0;
    return m;
}

std::unique_ptr<ActorModel> make_actor_model(const harness::ExperimentConfig& cfg, Rng& init_rng) {
    const int obs_dim = cfg.env.obs_dim();
    if (cfg.policy == "d2sac") {
        agod::DiffusionActor actor(cfg.env.asp_count, obs_dim, init_rng, cfg.train.time_embed_dim,
                                   cfg.train.time_hidden_dim, cfg.train.hidden_dim);
        return std::make_unique<DiffusionActorModel>(
            std::move(actor), agod::build_vp_schedule(cfg.train.denoise_steps, cfg.train.beta_min, cfg.train.beta_max),
            cfg.train.noise_mode());
    }
    if (cfg.policy == "sac_mlp") {
        return std::make_unique<MlpActorModel>(cfg.env.asp_count, obs_dim, init_rng, cfg.train.hidden_dim);
    }
    throw std::invalid_argument("make_actor_model: policy '" + cfg.policy + "' is not trainable");
}

TrainResult train(const harness::ExperimentConfig& cfg, std::uint64_t master_seed,
                  const TrainHooks& hooks) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Rng fleet_rng = make_rng(master_seed, "fleet");
    Rng workload_rng = make_rng(master_seed, "workload");
    Rng actor_init_rng = make_rng(master_seed, "init-actor");
    Rng critic_init_rng = make_rng(master_seed, "init-critic");
    Rng replay_rng = make_rng(master_seed, "replay");
    Rng noise_rng = make_rng(master_seed, "noise");
    Rng action_rng = make_rng(master_seed, "action");
    Rng trace_rng = make_rng(master_seed, "trace");

    const std::vector<env::AspProfile> fleet = generate_fleet(fleet_rng, cfg.env);
    env::AspEnvironment sim(cfg.env, fleet);

    std::unique_ptr<ActorModel> actor = make_actor_model(cfg, actor_init_rng);
    std::unique_ptr<ActorModel> target_actor = actor->clone();
    CriticPair critics(cfg.env.asp_count, cfg.env.obs_dim(), critic_init_rng, cfg.train.hidden_dim);
    CriticPair target_critics = critics;

    nn::Adam actor_opt(actor->parameters(), cfg.train.actor_lr, cfg.train.weight_decay);
    std::vector<Tensor*> q1_params, q2_params;
    critics.q1.collect_params(q1_params);
    critics.q2.collect_params(q2_params);
    nn::Adam critic_opt1(q1_params, cfg.train.critic_lr, cfg.train.weight_decay);
    nn::Adam critic_opt2(q2_params, cfg.train.critic_lr, cfg.train.weight_decay);

    const std::vector<Tensor*> actor_params = actor->parameters();
    const std::vector<Tensor*> target_actor_params = target_actor->parameters();
    const std::vector<Tensor*> critic_params = critics.parameters();
    const std::vector<Tensor*> target_critic_params = target_critics.parameters();

    ReplayBuffer buffer(static_cast<std::size_t>(cfg.train.buffer_capacity));

    // Fixed held-out workload for the per-step evaluation curve, so test
    // reward movements reflect policy changes only.
    Rng eval_workload_rng = make_rng(master_seed, "eval-workload", 0);
    const std::vector<env::TaskRequest> eval_workload = env::generate_workload(
        eval_workload_rng, cfg.env.task_count, cfg.env.arrival_rate, cfg.env.task_steps_min,
        cfg.env.task_steps_max, cfg.env.duration_min, cfg.env.duration_max);
    env::AspEnvironment eval_sim(cfg.env, fleet);

    TrainResult result;
    bool episode_open = false;
    std::vector<double> obs;
    double last_train_reward = 0.0;
    long env_steps = 0;

    auto target_policy = [&](const Tensor& states) { return target_actor->probs(states, noise_rng); };

    MetricsRow last_eval_row;
    for (int e = 1; e <= cfg.train.train_steps; ++e) {
        double window_return_sum = 0.0;
        int window_episodes = 0;
        double entropy_sum = 0.0;
        for (int c = 0; c < cfg.train.transitions_per_step; ++c) {
            if (!episode_open || sim.done()) {
                if (episode_open) {
                    window_return_sum += sim.stats().cumulative_reward;
                    window_episodes += 1;
                }
                obs = sim.reset(env::generate_workload(
                    workload_rng, cfg.env.task_count, cfg.env.arrival_rate, cfg.env.task_steps_min,
                    cfg.env.task_steps_max, cfg.env.duration_min, cfg.env.duration_max));
                episode_open = true;
            }
            const agod::ActionDistribution dist = actor->distribution(obs, noise_rng);
            entropy_sum += agod::entropy(dist.probs);
            const int a = agod::select_action(dist, agod::SelectMode::Sample, action_rng);
            env::StepOutcome out = sim.step(a);
            buffer.store(Transition{obs, a, out.observation, out.reward, out.done});
            obs = std::move(out.observation);
            env_steps += 1;
            if (sim.done()) {
                window_return_sum += sim.stats().cumulative_reward;
                window_episodes += 1;
                episode_open = false;
            }
        }
        if (window_episodes > 0) last_train_reward = window_return_sum / window_episodes;

        MetricsRow row;
        row.step = e;
        row.env_steps = env_steps;
        row.train_reward = last_train_reward;
        row.entropy = entropy_sum / cfg.train.transitions_per_step;

        const std::size_t warmup = std::max(static_cast<std::size_t>(cfg.train.batch_size),
                                            static_cast<std::size_t>(cfg.train.warmup_transitions));
        if (buffer.size() >= warmup) {
            const Batch batch = buffer.sample(cfg.train.batch_size, replay_rng);
            const Tensor q = critics.min_q(batch.states);
            const ActorUpdateResult ar = actor_update(batch, *actor, q, cfg.train.alpha, actor_opt, noise_rng);
            const UpdateResult cr =
                critic_update(batch, critics, target_critics, target_policy, cfg.train.gamma,
                              critic_opt1, critic_opt2,
                              cfg.train.soft_td_target ? cfg.train.alpha : 0.0);
            if (!ar.applied || !cr.applied) result.rejected_updates += 1;
            nn::soft_update(actor_params, target_actor_params, cfg.train.tau);
            nn::soft_update(critic_params, target_critic_params, cfg.train.tau);
            row.actor_loss = ar.loss;
            row.critic_loss = cr.loss;
        }

        if ((e - 1) % cfg.train.eval_cadence == 0 || e == cfg.train.train_steps) {
            Rng eval_rng = make_rng(master_seed, "eval-noise", 0);
            std::vector<double> eobs = eval_sim.reset(eval_workload);
            policies::ActorPolicy greedy(*actor, agod::SelectMode::Greedy);
            greedy.begin_episode(eval_sim);
            while (!eval_sim.done()) eobs = eval_sim.step(greedy.act(eobs, eval_rng)).observation;
            const env::EpisodeStats& st = eval_sim.stats();
            last_eval_row.test_reward = st.cumulative_reward;
            last_eval_row.crashed_rate = st.arrived ? static_cast<double>(st.crashed) / st.arrived : 0.0;
            last_eval_row.finished_rate = st.arrived ? static_cast<double>(st.finished) / st.arrived : 0.0;
        }
        row.test_reward = last_eval_row.test_reward;
        row.crashed_rate = last_eval_row.crashed_rate;
        row.finished_rate = last_eval_row.finished_rate;
        row.wall_time_s = elapsed();
        result.log.push_back(row);
        if (hooks.on_step) hooks.on_step(row);

        if (cfg.diag.trace && ((e - 1) % cfg.diag.trace_every == 0 || e == cfg.train.train_steps) && hooks.on_trace) {
            env::AspEnvironment trace_sim(cfg.env, fleet);
            const std::vector<double> tobs = trace_sim.reset(eval_workload);
            const agod::ActionDistribution dist = actor->distribution(tobs, trace_rng, true);
            const int chain_len = static_cast<int>(dist.trace.size());
            for (int k = 0; k < chain_len; ++k) {
                const int t = chain_len - 1 - k;  // trace runs x_T .. x_0
                Tensor x = Tensor::row(dist.trace[k]);
                Tensor p;
                nn::kernels::softmax_rows(x, p);
                for (int ai = 0; ai < p.cols(); ++ai) hooks.on_trace(e, t, ai, p.at(0, ai));
            }
        }
    }

    policies::ActorPolicy greedy(*actor, agod::SelectMode::Greedy);
    result.final_eval = evaluate_policy(greedy, cfg.env, fleet, master_seed, cfg.train.final_eval_episodes);
    result.actor = std::move(actor);
    result.fleet = fleet;
    return result;
}

}  // namespace d2sac::rl
