#pragma once

#include <stdexcept>
#include <vector>

#include "d2sac/rng.hpp"
#include "d2sac/tensor.hpp"

namespace d2sac::rl {

struct Transition {
    std::vector<double> state;
    int action = 0;
    std::vector<double> next_state;
    double reward = 0.0;
    bool done = false;
};

struct Batch {
    nn::Tensor states;       // b x obs_dim
    nn::Tensor next_states;  // b x obs_dim
    std::vector<int> actions;
    std::vector<double> rewards;
    std::vector<double> dones;

    int size() const { return states.rows(); }
};

// FIFO ring of transitions with uniform with-replacement sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    }

    void store(Transition t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }

    const Transition& at(std::size_t i) const { return storage_[i]; }

    // Oldest-first view index, for FIFO checks.
    const Transition& oldest(std::size_t i = 0) const {
        return storage_[(head_ + i) % storage_.size()];
    }

    Batch sample(std::size_t batch_size, Rng& rng) const {
        if (size() < batch_size) throw std::logic_error("ReplayBuffer: sampling before warmup");
        const int obs_dim = static_cast<int>(storage_.front().state.size());
        Batch b;
        b.states = nn::Tensor(static_cast<int>(batch_size), obs_dim);
        b.next_states = nn::Tensor(static_cast<int>(batch_size), obs_dim);
        b.actions.resize(batch_size);
        b.rewards.resize(batch_size);
        b.dones.resize(batch_size);
        std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
        for (std::size_t i = 0; i < batch_size; ++i) {
            const Transition& t = storage_[pick(rng)];
            for (int j = 0; j < obs_dim; ++j) {
                b.states.at(static_cast<int>(i), j) = t.state[j];
                b.next_states.at(static_cast<int>(i), j) = t.next_state[j];
            }
            b.actions[i] = t.action;
            b.rewards[i] = t.reward;
            b.dones[i] = t.done ? 1.0 : 0.0;
        }
        return b;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> storage_;
};

}  // namespace d2sac::rl
