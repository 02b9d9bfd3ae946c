#include "d2sac/policies.hpp"

#include <stdexcept>

namespace d2sac::policies {

RandomPolicy::RandomPolicy(int asp_count) : asp_count_(asp_count) {
    if (asp_count < 1) throw std::invalid_argument("RandomPolicy: asp_count must be >= 1");
}

int RandomPolicy::act(const std::vector<double>&, Rng& rng) {
    return draw_int(rng, 0, asp_count_ - 1);
}

RoundRobinPolicy::RoundRobinPolicy(int asp_count, int cursor) : asp_count_(asp_count), cursor_(cursor) {
    if (asp_count < 1) throw std::invalid_argument("RoundRobinPolicy: asp_count must be >= 1");
    if (cursor < 0 || cursor >= asp_count) throw std::invalid_argument("RoundRobinPolicy: cursor out of range");
}

int RoundRobinPolicy::act(const std::vector<double>&, Rng&) {
    const int a = cursor_;
    cursor_ = (cursor_ + 1) % asp_count_;
    return a;
}

std::string RoundRobinPolicy::serialize_state() const {
    return std::to_string(asp_count_) + ":" + std::to_string(cursor_);
}

RoundRobinPolicy RoundRobinPolicy::deserialize_state(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("RoundRobinPolicy: bad state string");
    return RoundRobinPolicy(std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1)));
}

int CrashAvoidPolicy::act(const std::vector<double>& obs, Rng&) {
    // Observation layout: [task steps, task duration, (capacity, availability) per ASP].
    const int asp_count = (static_cast<int>(obs.size()) - 2) / 2;
    if (asp_count < 1 || static_cast<int>(obs.size()) != 2 + 2 * asp_count)
        throw std::invalid_argument("CrashAvoidPolicy: malformed observation");
    int best = 0;
    double best_avail = obs[3];
    for (int i = 1; i < asp_count; ++i) {
        const double avail = obs[2 + 2 * i + 1];
        if (avail > best_avail) {
            best = i;
            best_avail = avail;
        }
    }
    return best;
}

int ProphetPolicy::act(const std::vector<double>&, Rng&) {
    if (!env_ || !env_->has_pending_task()) throw std::logic_error("ProphetPolicy: no environment bound");
    const env::TaskRequest& task = env_->pending_task();
    const auto& fleet = env_->fleet();
    int best = -1;
    double best_utility = -1.0;
    int fallback = 0;
    int fallback_avail = env_->availability_at_arrival(0);
    for (int i = 0; i < static_cast<int>(fleet.size()); ++i) {
        const int avail = env_->availability_at_arrival(i);
        if (avail > fallback_avail) {
            fallback = i;
            fallback_avail = avail;
        }
        if (task.steps <= avail) {
            const double u = env::utility(fleet[i], task.steps);
            if (u > best_utility) {
                best = i;
                best_utility = u;
            }
        }
    }
    return best >= 0 ? best : fallback;
}

ActorPolicy::ActorPolicy(const rl::ActorModel& model, agod::SelectMode mode)
    : model_(model), mode_(mode) {}

int ActorPolicy::act(const std::vector<double>& obs, Rng& rng) {
    const agod::ActionDistribution dist = model_.distribution(obs, rng);
    return agod::select_action(dist, mode_, rng);
}

std::string ActorPolicy::name() const { return model_.kind(); }

std::unique_ptr<Policy> make_heuristic(const std::string& name, int asp_count) {
    if (name == "random") return std::make_unique<RandomPolicy>(asp_count);
    if (name == "round_robin") return std::make_unique<RoundRobinPolicy>(asp_count);
    if (name == "crash_avoid") return std::make_unique<CrashAvoidPolicy>();
    if (name == "prophet") return std::make_unique<ProphetPolicy>();
    throw std::invalid_argument("make_heuristic: unknown heuristic '" + name + "'");
}

bool is_heuristic(const std::string& name) {
    return name == "random" || name == "round_robin" || name == "crash_avoid" || name == "prophet";
}

}  // namespace d2sac::policies
