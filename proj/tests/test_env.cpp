#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "d2sac/env.hpp"
#include "d2sac/policies.hpp"

using namespace d2sac;
using namespace d2sac::env;

namespace {

EnvConfig small_config() {
    EnvConfig cfg;
    cfg.asp_count = 3;
    cfg.task_count = 40;
    cfg.episode_limit = 40;
    return cfg;
}

std::vector<TaskRequest> make_tasks(std::vector<std::tuple<double, int, double>> specs) {
    std::vector<TaskRequest> tasks;
    int id = 0;
    for (const auto& [arrival, steps, duration] : specs)
        tasks.push_back(TaskRequest{id++, arrival, steps, duration});
    return tasks;
}

AspProfile flat_asp(int capacity) {
    // ay == by makes the utility constant: u(T) = 0.5 for every T.
    return AspProfile{capacity, 10.0, 0.5, 200.0, 0.5};
}

}  // namespace

TEST_CASE("utility curve") {
    const AspProfile asp{400, 50.0, 0.25, 200.0, 0.75};
    CHECK(utility(asp, 125.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(utility(asp, 50.0) == 0.25);
    CHECK(utility(asp, 10.0) == 0.25);
    CHECK(utility(asp, 200.0) == 0.75);
    CHECK(utility(asp, 2000.0) == 0.75);
    double prev = -1.0;
    for (double t = 0.0; t <= 300.0; t += 1.0) {
        const double u = utility(asp, t);
        CHECK(u >= prev);
        prev = u;
    }
}

TEST_CASE("workload generation") {
    SUBCASE("mean inter-arrival time near 1/lambda") {
        Rng rng(2024);
        const auto tasks = generate_workload(rng, 1000, 0.001, 100, 250, 5000.0, 20000.0);
        REQUIRE(tasks.size() == 1000);
        double prev = 0.0, sum = 0.0;
        for (const auto& t : tasks) {
            CHECK(t.arrival_time >= prev);
            sum += t.arrival_time - prev;
            prev = t.arrival_time;
        }
        CHECK(std::fabs(sum / 1000.0 - 1000.0) < 100.0);
    }
    SUBCASE("step and duration ranges respected") {
        Rng rng(7);
        const auto tasks = generate_workload(rng, 500, 0.01, 100, 250, 5000.0, 20000.0);
        for (const auto& t : tasks) {
            CHECK(t.steps >= 100);
            CHECK(t.steps <= 250);
            CHECK(t.duration >= 5000.0);
            CHECK(t.duration <= 20000.0);
        }
    }
    SUBCASE("same seed reproduces the workload exactly") {
        Rng a(5), b(5);
        const auto ta = generate_workload(a, 100, 0.001, 100, 250, 5000.0, 20000.0);
        const auto tb = generate_workload(b, 100, 0.001, 100, 250, 5000.0, 20000.0);
        REQUIRE(ta.size() == tb.size());
        for (std::size_t i = 0; i < ta.size(); ++i) {
            CHECK(ta[i].arrival_time == tb[i].arrival_time);
            CHECK(ta[i].steps == tb[i].steps);
            CHECK(ta[i].duration == tb[i].duration);
        }
    }
    SUBCASE("empty ranges rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(generate_workload(rng, 10, 0.001, 250, 100, 5000.0, 20000.0), std::invalid_argument);
        CHECK_THROWS_AS(generate_workload(rng, 10, -1.0, 100, 250, 5000.0, 20000.0), std::invalid_argument);
    }
}

TEST_CASE("normalization is strictly inside (0,1) and monotone") {
    CHECK(normalize_component(0.0, 250.0) == doctest::Approx(1.0 / 252.0));
    CHECK(normalize_component(250.0, 250.0) == doctest::Approx(251.0 / 252.0));
    CHECK(normalize_component(0.0, 250.0) > 0.0);
    CHECK(normalize_component(250.0, 250.0) < 1.0);
    for (double x = 0.0; x < 100.0; x += 1.0)
        CHECK(normalize_component(x, 100.0) < normalize_component(x + 1.0, 100.0));
}

TEST_CASE("reset: first task encoded, full availability") {
    EnvConfig cfg;
    cfg.asp_count = 20;
    Rng rng(3);
    const auto fleet = generate_fleet(rng, cfg);
    AspEnvironment sim(cfg, fleet);
    Rng wr(4);
    const auto obs = sim.reset(generate_workload(wr, 50, 0.001, 100, 250, 5000.0, 20000.0));
    CHECK(obs.size() == 42);
    for (double v : obs) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    // availability equals capacity at reset
    for (int i = 0; i < 20; ++i) CHECK(obs[2 + 2 * i] == obs[2 + 2 * i + 1]);
    Rng wr2(4);
    AspEnvironment sim2(cfg, fleet);
    const auto obs2 = sim2.reset(generate_workload(wr2, 50, 0.001, 100, 250, 5000.0, 20000.0));
    CHECK(obs == obs2);
}

TEST_CASE("step semantics on hand-built traces") {
    SUBCASE("feasible assignment credits its utility once and holds resources until completion") {
        EnvConfig cfg = small_config();
        cfg.asp_count = 1;
        std::vector<AspProfile> fleet = {flat_asp(400)};
        AspEnvironment sim(cfg, fleet);
        sim.reset(make_tasks({{0.0, 100, 50.0}, {100.0, 120, 500.0}, {600.0, 130, 100.0}}));
        CHECK(sim.available_steps(0) == 400);

        const StepOutcome s1 = sim.step(0);  // task 0 occupies 100 until t=50
        CHECK_FALSE(s1.crashed);
        CHECK(s1.reward == doctest::Approx(0.5));  // assignment credit u - baseline
        CHECK(sim.available_steps(0) == 300);

        // Task 0 finished at t=50 < 100: resources release, no further reward.
        const StepOutcome s2 = sim.step(0);
        CHECK(s2.completed_ids == std::vector<int>{0});
        CHECK(s2.reward == doctest::Approx(0.5));  // credit of assigning task 1 only
        CHECK(s2.utility_gained == doctest::Approx(0.5));
        CHECK(sim.available_steps(0) == 400 - 120);

        // Task 1 finishes at t=600 == third arrival; released before assigning.
        const StepOutcome s3 = sim.step(0);
        CHECK(s3.completed_ids == std::vector<int>{1});
        CHECK(s3.reward == doctest::Approx(0.5));
        CHECK(sim.available_steps(0) == 400 - 130);
        CHECK(s3.done);
        CHECK(sim.stats().finished == 2);
        CHECK(sim.stats().arrived == 3);
        // each assignment credited exactly once
        CHECK(sim.stats().total_credits == doctest::Approx(1.5));
    }
    SUBCASE("crash: penalty 2 + 2*(remaining progress), task discarded, restart") {
        EnvConfig cfg = small_config();
        cfg.asp_count = 1;
        cfg.task_count = 2;
        cfg.episode_limit = 2;
        std::vector<AspProfile> fleet = {flat_asp(400)};
        AspEnvironment sim(cfg, fleet);
        // Task 0: 350 steps, 200 s. Task 1 arrives at t=100 (50% remaining) needing 100.
        sim.reset(make_tasks({{0.0, 350, 200.0}, {100.0, 100, 400.0}}));
        sim.step(0);
        CHECK(sim.available_steps(0) == 50);
        const StepOutcome s2 = sim.step(0);
        CHECK(s2.crashed);
        CHECK(s2.penalty == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(s2.reward == doctest::Approx(-3.0).epsilon(1e-12));
        CHECK(s2.utility_lost == doctest::Approx(0.5));
        // Discarded arrival never occupies; the running task restarted.
        CHECK(sim.available_steps(0) == 50);
        CHECK(sim.stats().crashed == 1);
        CHECK(sim.stats().finished == 0);
        CHECK(sim.stats().lost_utility == doctest::Approx(0.5));
    }
    SUBCASE("restarted task still completes and earns utility later") {
        EnvConfig cfg = small_config();
        cfg.asp_count = 1;
        cfg.task_count = 3;
        cfg.episode_limit = 3;
        std::vector<AspProfile> fleet = {flat_asp(400)};
        AspEnvironment sim(cfg, fleet);
        // Crash at t=100 restarts task 0 (finish moves 200 -> 300); third
        // arrival at t=350 releases it.
        sim.reset(make_tasks({{0.0, 350, 200.0}, {100.0, 100, 400.0}, {350.0, 90, 10.0}}));
        sim.step(0);
        sim.step(0);  // crash
        const StepOutcome s3 = sim.step(0);
        CHECK(s3.completed_ids == std::vector<int>{0});
        CHECK(s3.utility_gained == doctest::Approx(0.5));
        CHECK(sim.stats().finished == 1);
        CHECK(sim.stats().crashed == 1);
        // the restarted task's utility was credited once, at its assignment
        CHECK(sim.stats().total_credits == doctest::Approx(1.0));
    }
    SUBCASE("errors: bad action, step after done") {
        EnvConfig cfg = small_config();
        cfg.asp_count = 2;
        cfg.task_count = 1;
        cfg.episode_limit = 1;
        std::vector<AspProfile> fleet = {flat_asp(400), flat_asp(400)};
        AspEnvironment sim(cfg, fleet);
        sim.reset(make_tasks({{0.0, 100, 10.0}}));
        CHECK_THROWS_AS(sim.step(2), std::out_of_range);
        CHECK_THROWS_AS(sim.step(-1), std::out_of_range);
        sim.step(0);
        CHECK(sim.done());
        CHECK_THROWS_AS(sim.step(0), std::logic_error);
    }
}

TEST_CASE("episode conservation properties under a random policy") {
    EnvConfig cfg;
    cfg.asp_count = 5;
    cfg.capacity_min = 400;
    cfg.capacity_max = 600;
    cfg.task_count = 200;
    cfg.episode_limit = 200;
    Rng fr(11);
    const auto fleet = generate_fleet(fr, cfg);
    AspEnvironment sim(cfg, fleet);
    Rng wr(12);
    auto obs = sim.reset(generate_workload(wr, cfg.task_count, cfg.arrival_rate, cfg.task_steps_min,
                                           cfg.task_steps_max, cfg.duration_min, cfg.duration_max));
    policies::RandomPolicy random(cfg.asp_count);
    Rng pr(13);
    double credit_sum = 0.0, penalty_sum = 0.0;
    while (!sim.done()) {
        const int a = random.act(obs, pr);
        const StepOutcome out = sim.step(a);
        credit_sum += out.reward + out.penalty;
        penalty_sum += out.penalty;
        for (int i = 0; i < cfg.asp_count; ++i) {
            CHECK(sim.held_steps(i) >= 0);
            CHECK(sim.held_steps(i) <= fleet[i].capacity);
            CHECK(sim.available_steps(i) == fleet[i].capacity - sim.held_steps(i));
        }
        CHECK(std::isfinite(out.reward));
        obs = out.observation;
    }
    const EpisodeStats& st = sim.stats();
    CHECK(st.arrived == cfg.task_count);
    // no lost tasks: finished + crashed + still-running == arrived
    CHECK(st.finished + st.crashed <= st.arrived);
    CHECK(st.arrived - st.finished - st.crashed >= 0);
    // reward decomposition reconstructable from diagnostics
    CHECK(st.cumulative_reward == doctest::Approx(st.total_credits - st.total_penalties).epsilon(1e-9));
    CHECK(st.total_penalties == doctest::Approx(penalty_sum).epsilon(1e-9));
    CHECK(st.total_credits == doctest::Approx(credit_sum).epsilon(1e-9));
    // a contended workload under random assignment crashes at least once
    CHECK(st.crashed > 0);
}

TEST_CASE("clock monotonicity and done flag at the transition limit") {
    EnvConfig cfg = small_config();
    cfg.episode_limit = 10;  // shorter than the workload
    Rng fr(1);
    const auto fleet = generate_fleet(fr, cfg);
    AspEnvironment sim(cfg, fleet);
    Rng wr(2);
    auto obs = sim.reset(generate_workload(wr, cfg.task_count, cfg.arrival_rate, cfg.task_steps_min,
                                           cfg.task_steps_max, cfg.duration_min, cfg.duration_max));
    (void)obs;
    int steps = 0;
    while (!sim.done()) {
        const StepOutcome out = sim.step(0);
        steps += 1;
        CHECK(out.done == (steps == 10));
    }
    CHECK(steps == 10);
    CHECK(sim.stats().transitions == 10);
}

TEST_CASE("workload and fleet CSVs round-trip exactly") {
    Rng rng(91);
    EnvConfig cfg;
    const auto fleet = generate_fleet(rng, cfg);
    const auto tasks = generate_workload(rng, 64, 0.001, 100, 250, 5000.0, 20000.0);
    const auto dir = std::filesystem::temp_directory_path();
    const auto wpath = dir / "d2sac_workload_test.csv";
    const auto fpath = dir / "d2sac_fleet_test.csv";
    AspEnvironment::save_workload_csv(wpath, tasks);
    AspEnvironment::save_fleet_csv(fpath, fleet);
    const auto tasks2 = AspEnvironment::load_workload_csv(wpath);
    const auto fleet2 = AspEnvironment::load_fleet_csv(fpath);
    REQUIRE(tasks2.size() == tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        CHECK(tasks2[i].id == tasks[i].id);
        CHECK(tasks2[i].arrival_time == tasks[i].arrival_time);
        CHECK(tasks2[i].steps == tasks[i].steps);
        CHECK(tasks2[i].duration == tasks[i].duration);
    }
    REQUIRE(fleet2.size() == fleet.size());
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        CHECK(fleet2[i].capacity == fleet[i].capacity);
        CHECK(fleet2[i].ax == fleet[i].ax);
        CHECK(fleet2[i].ay == fleet[i].ay);
        CHECK(fleet2[i].bx == fleet[i].bx);
        CHECK(fleet2[i].by == fleet[i].by);
    }
    std::filesystem::remove(wpath);
    std::filesystem::remove(fpath);
}

TEST_CASE("crash avoid policy never crashes on the default configuration") {
    EnvConfig cfg;  // paper-scale field ranges, desk-size episode for speed
    cfg.task_count = 300;
    cfg.episode_limit = 300;
    for (const std::uint64_t seed : {0ull, 1ull, 2ull}) {
        Rng fr = make_rng(seed, "fleet");
        const auto fleet = generate_fleet(fr, cfg);
        AspEnvironment sim(cfg, fleet);
        Rng wr = make_rng(seed, "workload");
        auto obs = sim.reset(generate_workload(wr, cfg.task_count, cfg.arrival_rate, cfg.task_steps_min,
                                               cfg.task_steps_max, cfg.duration_min, cfg.duration_max));
        policies::CrashAvoidPolicy ca;
        Rng pr(0);
        while (!sim.done()) obs = sim.step(ca.act(obs, pr)).observation;
        CHECK(sim.stats().crashed == 0);
    }
}
