#pragma once

#include <memory>
#include <string>

#include "d2sac/actor_model.hpp"
#include "d2sac/env.hpp"

namespace d2sac::policies {

// One interface for heuristics and learned actors: observation in, action
// index out. Policies needing privileged ground truth receive the
// environment at episode start.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_episode(const env::AspEnvironment& e) { (void)e; }
    virtual int act(const std::vector<double>& obs, Rng& rng) = 0;
    virtual std::string name() const = 0;
};

// Uniform over providers, blind to availability.
class RandomPolicy final : public Policy {
public:
    explicit RandomPolicy(int asp_count);
    int act(const std::vector<double>& obs, Rng& rng) override;
    std::string name() const override { return "random"; }

private:
    int asp_count_;
};

// Cyclic assignment with a persistent cursor.
class RoundRobinPolicy final : public Policy {
public:
    explicit RoundRobinPolicy(int asp_count, int cursor = 0);
    int act(const std::vector<double>& obs, Rng& rng) override;
    std::string name() const override { return "round_robin"; }

    int cursor() const { return cursor_; }
    std::string serialize_state() const;
    static RoundRobinPolicy deserialize_state(const std::string& text);

private:
    int asp_count_;
    int cursor_;
};

// Most available resources wins; ties to the lowest index. Reads the
// availability components of the observation.
class CrashAvoidPolicy final : public Policy {
public:
    int act(const std::vector<double>& obs, Rng& rng) override;
    std::string name() const override { return "crash_avoid"; }
};

// Evaluation-only upper bound: true utility anchors and true occupancy. Picks
// the highest-utility provider that fits; falls back to the most available
// one when nothing fits.
class ProphetPolicy final : public Policy {
public:
    void begin_episode(const env::AspEnvironment& e) override { env_ = &e; }
    int act(const std::vector<double>& obs, Rng& rng) override;
    std::string name() const override { return "prophet"; }

private:
    const env::AspEnvironment* env_ = nullptr;
};

// Learned actor behind the shared interface.
class ActorPolicy final : public Policy {
public:
    ActorPolicy(const rl::ActorModel& model, agod::SelectMode mode);
    int act(const std::vector<double>& obs, Rng& rng) override;
    std::string name() const override;

private:
    const rl::ActorModel& model_;
    agod::SelectMode mode_;
};

// Heuristic registry for CLI selection; learned policies are constructed from
// checkpoints elsewhere.
std::unique_ptr<Policy> make_heuristic(const std::string& name, int asp_count);
bool is_heuristic(const std::string& name);

}  // namespace d2sac::policies
