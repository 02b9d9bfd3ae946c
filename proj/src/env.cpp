#include "d2sac/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "d2sac/csv.hpp"

namespace d2sac::env {

double utility(const AspProfile& asp, double steps) {
    if (steps <= asp.ax) return asp.ay;
    if (steps >= asp.bx) return asp.by;
    return asp.ay + (asp.by - asp.ay) * (steps - asp.ax) / (asp.bx - asp.ax);
}

std::vector<TaskRequest> generate_workload(Rng& rng, int count, double arrival_rate,
                                           int step_min, int step_max,
                                           double duration_min, double duration_max) {
    if (count < 1) throw std::invalid_argument("generate_workload: count must be >= 1");
    if (!(arrival_rate > 0.0)) throw std::invalid_argument("generate_workload: arrival rate must be positive");
    if (step_min > step_max || duration_min > duration_max)
        throw std::invalid_argument("generate_workload: empty range");
    std::vector<TaskRequest> tasks;
    tasks.reserve(count);
    double t = 0.0;
    std::exponential_distribution<double> gap(arrival_rate);
    for (int j = 0; j < count; ++j) {
        t += gap(rng);
        TaskRequest task;
        task.id = j;
        task.arrival_time = t;
        task.steps = draw_int(rng, step_min, step_max);
        task.duration = draw_uniform(rng, duration_min, duration_max);
        tasks.push_back(task);
    }
    return tasks;
}

std::vector<AspProfile> generate_fleet(Rng& rng, const EnvConfig& cfg) {
    if (cfg.asp_count < 1) throw std::invalid_argument("generate_fleet: asp_count must be >= 1");
    std::vector<AspProfile> fleet;
    fleet.reserve(cfg.asp_count);
    for (int i = 0; i < cfg.asp_count; ++i) {
        AspProfile p;
        p.capacity = draw_int(rng, cfg.capacity_min, cfg.capacity_max);
        p.ax = draw_uniform(rng, cfg.anchor_ax_min, cfg.anchor_ax_max);
        p.ay = draw_uniform(rng, cfg.anchor_ay_min, cfg.anchor_ay_max);
        p.bx = draw_uniform(rng, cfg.anchor_bx_min, cfg.anchor_bx_max);
        p.by = draw_uniform(rng, cfg.anchor_by_min, cfg.anchor_by_max);
        fleet.push_back(p);
    }
    return fleet;
}

double normalize_component(double x, double x_max) { return (x + 1.0) / (x_max + 2.0); }

AspEnvironment::AspEnvironment(EnvConfig cfg, std::vector<AspProfile> fleet)
    : cfg_(std::move(cfg)), fleet_(std::move(fleet)) {
    if (cfg_.asp_count == 0 || cfg_.task_count == 0)
        throw std::invalid_argument("AspEnvironment: empty fleet or workload config");
    if (static_cast<int>(fleet_.size()) != cfg_.asp_count)
        throw std::invalid_argument("AspEnvironment: fleet size does not match config");
    for (const AspProfile& p : fleet_) {
        fleet_max_capacity_ = std::max(fleet_max_capacity_, p.capacity);
        if (p.ax >= p.bx || p.ay > p.by || p.ay < 0.0 || p.by > 1.0)
            throw std::invalid_argument("AspEnvironment: invalid utility anchors");
    }
    running_.resize(fleet_.size());
    held_.assign(fleet_.size(), 0);
}

std::vector<double> AspEnvironment::reset(std::vector<TaskRequest> workload) {
    if (workload.empty()) throw std::invalid_argument("reset: empty workload");
    for (std::size_t j = 1; j < workload.size(); ++j)
        if (workload[j].arrival_time < workload[j - 1].arrival_time)
            throw std::invalid_argument("reset: arrival times must be nondecreasing");
    workload_ = std::move(workload);
    cursor_ = 0;
    clock_ = workload_.front().arrival_time;
    for (auto& r : running_) r.clear();
    std::fill(held_.begin(), held_.end(), 0);
    stats_ = EpisodeStats{};
    started_ = true;
    done_ = false;
    return observation();
}

std::vector<double> AspEnvironment::observation() const {
    std::vector<double> obs;
    obs.reserve(cfg_.obs_dim());
    double steps = 0.0, dur = 0.0;
    if (cursor_ < workload_.size()) {
        steps = workload_[cursor_].steps;
        dur = workload_[cursor_].duration;
    }
    obs.push_back(normalize_component(steps, cfg_.task_steps_max));
    obs.push_back(normalize_component(dur, cfg_.duration_max));
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
        obs.push_back(normalize_component(fleet_[i].capacity, fleet_max_capacity_));
        obs.push_back(normalize_component(fleet_[i].capacity - held_[i], fleet_max_capacity_));
    }
    return obs;
}

int AspEnvironment::held_steps(int asp) const { return held_.at(asp); }

int AspEnvironment::available_steps(int asp) const { return fleet_.at(asp).capacity - held_.at(asp); }

bool AspEnvironment::has_pending_task() const { return started_ && cursor_ < workload_.size(); }

const TaskRequest& AspEnvironment::pending_task() const {
    if (!has_pending_task()) throw std::logic_error("pending_task: no task pending");
    return workload_[cursor_];
}

int AspEnvironment::availability_at_arrival(int asp) const {
    const double when = pending_task().arrival_time;
    int held = 0;
    for (const RunningTask& rt : running_.at(asp))
        if (rt.finish_time > when) held += rt.steps_held;
    return fleet_.at(asp).capacity - held;
}

StepOutcome AspEnvironment::step(int action) {
    if (!started_ || done_) throw std::logic_error("step: episode not running");
    if (action < 0 || action >= cfg_.asp_count) throw std::out_of_range("step: action out of range");

    const TaskRequest task = workload_[cursor_];
    clock_ = task.arrival_time;  // arrivals are nondecreasing, so the clock never moves back

    StepOutcome out;
    for (std::size_t i = 0; i < running_.size(); ++i) {
        auto& tasks = running_[i];
        for (std::size_t k = 0; k < tasks.size();) {
            if (tasks[k].finish_time <= clock_) {
                stats_.finished += 1;
                stats_.obtained_utility += tasks[k].utility;
                out.utility_gained += tasks[k].utility;
                out.completed_ids.push_back(tasks[k].task_id);
                held_[i] -= tasks[k].steps_held;
                tasks[k] = tasks.back();
                tasks.pop_back();
            } else {
                ++k;
            }
        }
    }

    // Quality reward is attributed to the assigning transition; a crashed
    // arrival is discarded and earns nothing.
    double credits = 0.0;
    double penalty = 0.0;
    if (task.steps + held_[action] <= fleet_[action].capacity) {
        RunningTask rt;
        rt.task_id = task.id;
        rt.steps_held = task.steps;
        rt.finish_time = clock_ + task.duration;
        rt.duration = task.duration;
        rt.utility = utility(fleet_[action], task.steps);
        running_[action].push_back(rt);
        held_[action] += task.steps;
        credits = rt.utility - cfg_.reward_baseline;
    } else {
        // Crash: the arriving task is discarded and every running task on the
        // provider restarts from scratch with its finish re-anchored to now.
        out.crashed = true;
        const double lost = utility(fleet_[action], task.steps);
        out.utility_lost = lost;
        stats_.crashed += 1;
        stats_.lost_utility += lost;
        penalty = cfg_.crash_penalty_fixed;
        for (RunningTask& rt : running_[action]) {
            const double remaining = (rt.finish_time - clock_) / rt.duration;
            penalty += cfg_.crash_penalty_fixed * remaining;
            rt.finish_time = clock_ + rt.duration;
        }
    }

    stats_.arrived += 1;
    stats_.transitions += 1;
    stats_.total_credits += credits;
    stats_.total_penalties += penalty;

    out.penalty = penalty;
    out.reward = credits - penalty;
    stats_.cumulative_reward += out.reward;

    cursor_ += 1;
    done_ = stats_.transitions >= cfg_.episode_limit || cursor_ >= workload_.size();
    out.done = done_;
    out.observation = observation();
    return out;
}

void AspEnvironment::save_workload_csv(const std::filesystem::path& path, const std::vector<TaskRequest>& tasks) {
    csv::Writer w(path);
    w.write_row({"id", "arrival_time", "steps", "duration"});
    for (const TaskRequest& t : tasks)
        w.write_row({std::to_string(t.id), csv::format_double(t.arrival_time), std::to_string(t.steps),
                     csv::format_double(t.duration)});
}

std::vector<TaskRequest> AspEnvironment::load_workload_csv(const std::filesystem::path& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"id", "arrival_time", "steps", "duration"})
        throw std::runtime_error("load_workload_csv: bad header: " + path.string());
    std::vector<TaskRequest> tasks;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4) throw std::runtime_error("load_workload_csv: bad row");
        TaskRequest t;
        t.id = std::stoi(rows[i][0]);
        t.arrival_time = std::stod(rows[i][1]);
        t.steps = std::stoi(rows[i][2]);
        t.duration = std::stod(rows[i][3]);
        tasks.push_back(t);
    }
    return tasks;
}

void AspEnvironment::save_fleet_csv(const std::filesystem::path& path, const std::vector<AspProfile>& fleet) {
    csv::Writer w(path);
    w.write_row({"asp_id", "capacity", "A_x", "A_y", "B_x", "B_y"});
    for (std::size_t i = 0; i < fleet.size(); ++i)
        w.write_row({std::to_string(i), std::to_string(fleet[i].capacity), csv::format_double(fleet[i].ax),
                     csv::format_double(fleet[i].ay), csv::format_double(fleet[i].bx),
                     csv::format_double(fleet[i].by)});
}

std::vector<AspProfile> AspEnvironment::load_fleet_csv(const std::filesystem::path& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"asp_id", "capacity", "A_x", "A_y", "B_x", "B_y"})
        throw std::runtime_error("load_fleet_csv: bad header: " + path.string());
    std::vector<AspProfile> fleet;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 6) throw std::runtime_error("load_fleet_csv: bad row");
        AspProfile p;
        p.capacity = std::stoi(rows[i][1]);
        p.ax = std::stod(rows[i][2]);
        p.ay = std::stod(rows[i][3]);
        p.bx = std::stod(rows[i][4]);
        p.by = std::stod(rows[i][5]);
        fleet.push_back(p);
    }
    return fleet;
}

}  // namespace d2sac::env
