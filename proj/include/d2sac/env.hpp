#pragma once

#include <filesystem>
#include <vector>

#include "d2sac/rng.hpp"

namespace d2sac::env {

struct TaskRequest {
    int id = 0;
    double arrival_time = 0.0;  // simulated seconds
    int steps = 0;              // denoising-step units demanded
    double duration = 0.0;      // simulated seconds of occupancy
};

// Provider capability: resource capacity plus the anchors of its piecewise
// linear quality curve (A_x, A_y) -> (B_x, B_y).
struct AspProfile {
    int capacity = 0;
    double ax = 0.0, ay = 0.0;
    double bx = 0.0, by = 0.0;
};

struct RunningTask {
    int task_id = 0;
    int steps_held = 0;
    double finish_time = 0.0;
    double duration = 0.0;
    double utility = 0.0;  // quality credit earned when it completes
};

struct EnvConfig {
    int asp_count = 20;
    int capacity_min = 400;
    int capacity_max = 1000;
    int task_steps_min = 100;
    int task_steps_max = 250;
    // Mean occupancy of 25000 s puts the fleet's expected aggregate load near
    // a third of total capacity: enough contention to separate the policies
    // without making zero-crash scheduling impossible.
    double duration_min = 10000.0;
    double duration_max = 40000.0;
    double arrival_rate = 0.001;  // Poisson arrivals per second
    int task_count = 1000;
    int episode_limit = 1000;
    double anchor_ax_min = 0.0, anchor_ax_max = 100.0;
    double anchor_ay_min = 0.0, anchor_ay_max = 0.5;
    double anchor_bx_min = 150.0, anchor_bx_max = 250.0;
    double anchor_by_min = 0.5, anchor_by_max = 1.0;
    double crash_penalty_fixed = 2.0;
    double reward_baseline = 0.0;

    int obs_dim() const { return 2 + 2 * asp_count; }
};

// One transition: the clock advances to the pending task's arrival, finished
// tasks release their resources, then the task is assigned to the chosen
// provider (or crashes it). Reward = quality credit of the assignment minus
// any crash penalty.
struct StepOutcome {
    double reward = 0.0;
    std::vector<double> observation;
    bool done = false;
    std::vector<int> completed_ids;
    bool crashed = false;
    double utility_gained = 0.0;
    double utility_lost = 0.0;
    double penalty = 0.0;
};

struct EpisodeStats {
    int arrived = 0;
    int finished = 0;
    int crashed = 0;
    int transitions = 0;
    double obtained_utility = 0.0;
    double lost_utility = 0.0;
    double total_credits = 0.0;
    double total_penalties = 0.0;
    double cumulative_reward = 0.0;
};

// Piecewise linear quality: ay below ax, by above bx, interpolated between.
double utility(const AspProfile& asp, double steps);

// Poisson arrivals (i.i.d. exponential gaps with mean 1/rate), uniform
// integer step demands and uniform durations.
std::vector<TaskRequest> generate_workload(Rng& rng, int count, double arrival_rate,
                                           int step_min, int step_max,
                                           double duration_min, double duration_max);

std::vector<AspProfile> generate_fleet(Rng& rng, const EnvConfig& cfg);

// Open-interval normalization x -> (x+1)/(x_max+2); strictly monotone.
double normalize_component(double x, double x_max);

class AspEnvironment {
public:
    AspEnvironment(EnvConfig cfg, std::vector<AspProfile> fleet);

    std::vector<double> reset(std::vector<TaskRequest> workload);
    StepOutcome step(int action);

    bool done() const { return done_; }
    const EpisodeStats& stats() const { return stats_; }
    std::vector<double> observation() const;
    const EnvConfig& config() const { return cfg_; }
    const std::vector<AspProfile>& fleet() const { return fleet_; }

    // Steps currently held on an ASP, as encoded into the last observation.
    int held_steps(int asp) const;
    int available_steps(int asp) const;

    // Ground truth at the pending task's arrival instant (after the releases
    // that the next step() call will apply). Privileged: evaluation only.
    bool has_pending_task() const;
    const TaskRequest& pending_task() const;
    int availability_at_arrival(int asp) const;

    // CSV round-trip for workloads and fleets.
    static void save_workload_csv(const std::filesystem::path& path, const std::vector<TaskRequest>& tasks);
    static std::vector<TaskRequest> load_workload_csv(const std::filesystem::path& path);
    static void save_fleet_csv(const std::filesystem::path& path, const std::vector<AspProfile>& fleet);
    static std::vector<AspProfile> load_fleet_csv(const std::filesystem::path& path);

private:
    EnvConfig cfg_;
    std::vector<AspProfile> fleet_;
    int fleet_max_capacity_ = 0;
    std::vector<std::vector<RunningTask>> running_;
    std::vector<int> held_;
    std::vector<TaskRequest> workload_;
    std::size_t cursor_ = 0;
    double clock_ = 0.0;
    bool started_ = false;
    bool done_ = true;
    EpisodeStats stats_;
};

}  // namespace d2sac::env
