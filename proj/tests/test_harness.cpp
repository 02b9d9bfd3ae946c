#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "d2sac/csv.hpp"
#include "d2sac/harness.hpp"

using namespace d2sac;
using namespace d2sac::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig micro_config(const std::string& policy, const fs::path& out) {
    ExperimentConfig cfg;
    cfg.env.asp_count = 3;
    cfg.env.task_count = 12;
    cfg.env.episode_limit = 12;
    cfg.train.train_steps = 3;
    cfg.train.transitions_per_step = 12;
    cfg.train.batch_size = 8;
    cfg.train.buffer_capacity = 500;
    cfg.train.hidden_dim = 12;
    cfg.train.final_eval_episodes = 2;
    cfg.policy = policy;
    cfg.seeds = {0, 1, 2};
    cfg.out_dir = out.string();
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

// Metrics rows with the wall-time column dropped; wall time is measured, not
// derived from the seeds.
std::vector<std::vector<std::string>> rows_without_walltime(const fs::path& file) {
    auto rows = csv::read_rows(file);
    for (auto& row : rows)
        if (!row.empty()) row.pop_back();
    return rows;
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("empty text yields the full default configuration") {
        const ExperimentConfig cfg = parse_config("");
        CHECK(cfg.train.gamma == 0.95);
        CHECK(cfg.train.denoise_steps == 5);
        CHECK(cfg.train.alpha == 0.05);
        CHECK(cfg.train.batch_size == 512);
        CHECK(cfg.env.asp_count == 20);
        CHECK(cfg.train.train_steps == 1000);
        CHECK(cfg.env.arrival_rate == 0.001);
        CHECK(cfg.env.crash_penalty_fixed == 2.0);
    }
    SUBCASE("out-of-range gamma rejected with its key path") {
        try {
            parse_config("train.gamma=1.5\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("train.gamma") != std::string::npos);
        }
    }
    SUBCASE("unknown keys rejected") {
        CHECK_THROWS_AS(parse_config("train.momentum=0.9\n"), ConfigError);
    }
    SUBCASE("malformed values rejected") {
        CHECK_THROWS_AS(parse_config("train.gamma=fast\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("seeds=1,,2\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("train.gamma\n"), ConfigError);
    }
    SUBCASE("serialize/parse round-trip") {
        ExperimentConfig cfg = parse_config("");
        cfg.train.alpha = 0.125;
        cfg.env.arrival_rate = 0.0025;
        cfg.seeds = {5, 9};
        cfg.policy = "sac_mlp";
        const std::string text = serialize_config(cfg);
        const ExperimentConfig back = parse_config(text);
        CHECK(serialize_config(back) == text);
        CHECK(config_hash(back) == config_hash(cfg));
    }
    SUBCASE("hash is stable under key reordering and ignores the output directory") {
        const ExperimentConfig a = parse_config("train.alpha=0.2\nenv.asp_count=7\n");
        const ExperimentConfig b = parse_config("env.asp_count=7\ntrain.alpha=0.2\n");
        CHECK(config_hash(a) == config_hash(b));
        ExperimentConfig c = a;
        c.out_dir = "elsewhere";
        CHECK(config_hash(c) == config_hash(a));
    }
    SUBCASE("comments and blank lines accepted") {
        const ExperimentConfig cfg = parse_config("# scale\n\ntrain.denoise_steps=7\n");
        CHECK(cfg.train.denoise_steps == 7);
    }
    SUBCASE("presets") {
        ExperimentConfig cfg = parse_config("");
        apply_preset(cfg, "desk");
        CHECK(cfg.train.train_steps == 300);
        CHECK(cfg.train.transitions_per_step == 300);
        CHECK(cfg.env.episode_limit == 300);
        CHECK(cfg.env.task_count == 300);
        apply_preset(cfg, "paper");
        CHECK(cfg.train.train_steps == 1000);
        CHECK_THROWS_AS(apply_preset(cfg, "huge"), ConfigError);
    }
}

TEST_CASE("run_experiment writes the documented file layout") {
    const fs::path out = fresh_dir("d2sac_h_exp");
    const ExperimentConfig cfg = micro_config("d2sac", out);
    const ExperimentOutcome outcome = run_experiment(cfg, false);
    CHECK(outcome.all_ok());
    CHECK(fs::exists(out / "config.txt"));
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "summary.csv"));
    int metric_files = 0;
    for (const std::uint64_t s : cfg.seeds) {
        const fs::path sd = out / ("seed_" + std::to_string(s));
        CHECK(fs::exists(sd / "metrics.csv"));
        CHECK(fs::exists(sd / "actor.ckpt"));
        CHECK(fs::exists(sd / "manifest.json"));
        CHECK(fs::exists(sd / "eval.csv"));
        metric_files += 1;
        const auto rows = csv::read_rows(sd / "metrics.csv");
        CHECK(rows.size() == 1 + 3);  // header + one row per training step
        CHECK(rows[0][0] == "step");
        CHECK(rows[0][9] == "wall_time_s");
    }
    CHECK(metric_files == 3);

    SUBCASE("summary mean equals the arithmetic mean of per-seed finals") {
        const auto summary = csv::read_rows(out / "summary.csv");
        REQUIRE(summary.size() == 3);
        const auto header = summary[0];
        double sum_reward = 0.0;
        for (const std::uint64_t s : cfg.seeds) {
            const auto eval = csv::read_rows(out / ("seed_" + std::to_string(s)) / "eval.csv");
            sum_reward += std::stod(eval[1][0]);
        }
        CHECK(std::stod(summary[1][1]) == doctest::Approx(sum_reward / 3.0).epsilon(1e-12));
        CHECK(header[1] == "test_reward");
    }
    SUBCASE("existing outputs are never silently overwritten") {
        CHECK_THROWS(run_experiment(cfg, false));
        CHECK(run_experiment(cfg, true).all_ok());
    }
}

TEST_CASE("reruns with identical config and seeds are byte-identical modulo wall time") {
    const fs::path out_a = fresh_dir("d2sac_h_det_a");
    const fs::path out_b = fresh_dir("d2sac_h_det_b");
    ExperimentConfig cfg = micro_config("d2sac", out_a);
    cfg.seeds = {3};
    run_experiment(cfg, false);
    cfg.out_dir = out_b.string();
    run_experiment(cfg, false);
    CHECK(rows_without_walltime(out_a / "seed_3" / "metrics.csv") ==
          rows_without_walltime(out_b / "seed_3" / "metrics.csv"));
    // checkpoints byte-identical
    std::ifstream fa(out_a / "seed_3" / "actor.ckpt", std::ios::binary);
    std::ifstream fb(out_b / "seed_3" / "actor.ckpt", std::ios::binary);
    const std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
}

TEST_CASE("heuristics run through the same harness") {
    const fs::path out = fresh_dir("d2sac_h_heur");
    ExperimentConfig cfg = micro_config("crash_avoid", out);
    const ExperimentOutcome outcome = run_experiment(cfg, false);
    CHECK(outcome.all_ok());
    for (const std::uint64_t s : cfg.seeds) {
        CHECK(fs::exists(out / ("seed_" + std::to_string(s)) / "eval.csv"));
        CHECK_FALSE(fs::exists(out / ("seed_" + std::to_string(s)) / "metrics.csv"));
    }
    CHECK(fs::exists(out / "summary.csv"));
}

TEST_CASE("manifest hash matches a recomputation from the stored config copy") {
    const fs::path out = fresh_dir("d2sac_h_hash");
    ExperimentConfig cfg = micro_config("round_robin", out);
    run_experiment(cfg, false);
    std::ifstream is(out / "config.txt");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const ExperimentConfig reparsed = parse_config(text);
    std::ifstream ms(out / "manifest.json");
    std::string manifest((std::istreambuf_iterator<char>(ms)), std::istreambuf_iterator<char>());
    CHECK(manifest.find(hash_hex(config_hash(reparsed))) != std::string::npos);
}

TEST_CASE("checkpoint reload reproduces the trained policy's behaviour") {
    const fs::path out = fresh_dir("d2sac_h_reload");
    ExperimentConfig cfg = micro_config("d2sac", out);
    cfg.seeds = {11};
    run_experiment(cfg, false);

    Rng init = make_rng(11, "init-actor");
    const rl::TrainResult again = rl::train(cfg, 11);
    auto reloaded = load_actor(out / "seed_11" / "actor.ckpt", "d2sac", cfg.train);

    Rng fr = make_rng(11, "fleet");
    const auto fleet = env::generate_fleet(fr, cfg.env);
    policies::ActorPolicy a(*again.actor, agod::SelectMode::Greedy);
    policies::ActorPolicy b(*reloaded, agod::SelectMode::Greedy);
    const rl::EvalMetrics ma = rl::evaluate_policy(a, cfg.env, fleet, 11, 2);
    const rl::EvalMetrics mb = rl::evaluate_policy(b, cfg.env, fleet, 11, 2);
    CHECK(ma.test_reward == mb.test_reward);
    CHECK(ma.obtained_utility == mb.obtained_utility);
}

TEST_CASE("sweep table layout and plot export") {
    const fs::path out = fresh_dir("d2sac_h_sweep");
    ExperimentConfig cfg = micro_config("d2sac", out);
    cfg.seeds = {0, 1};
    SweepSpec spec;
    spec.parameter = "denoise_steps";
    spec.values = {1, 3};
    const auto rows = run_sweep(spec, cfg, false);
    // per (value, seed) rows plus one mean row per value
    CHECK(rows.size() == 2 * 2 + 2);
    int mean_rows = 0;
    double best_mean_norm = -1e18, best_mean = -1e18;
    for (const auto& r : rows) {
        CHECK(r.parameter == "denoise_steps");
        CHECK(std::isfinite(r.final_test_reward));
        CHECK(std::isfinite(r.reward_norm));
        if (r.seed == "mean") {
            mean_rows += 1;
            best_mean_norm = std::max(best_mean_norm, r.reward_norm);
            best_mean = std::max(best_mean, r.final_test_reward);
        }
    }
    CHECK(mean_rows == 2);
    // normalization is value/max over the aggregated rows
    if (best_mean > 0) CHECK(best_mean_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fs::exists(out / "sweep.csv"));

    SUBCASE("unsweepable parameters rejected") {
        SweepSpec bad;
        bad.parameter = "tau";
        bad.values = {0.1};
        CHECK_THROWS_AS(run_sweep(bad, cfg, true), ConfigError);
        SweepSpec empty;
        empty.parameter = "alpha";
        CHECK_THROWS_AS(run_sweep(empty, cfg, true), ConfigError);
    }

    SUBCASE("plot export emits tidy finite rows") {
        const fs::path sub = out / "denoise_steps=1";
        const auto report = emit_plot_data(sub);
        CHECK(fs::exists(sub / "plots" / "reward_curves.csv"));
        const auto curves = csv::read_rows(sub / "plots" / "reward_curves.csv");
        REQUIRE(curves.size() > 1);
        CHECK(curves[0] == std::vector<std::string>{"series", "x", "y", "seed"});
        for (std::size_t i = 1; i < curves.size(); ++i) {
            CHECK(curves[i][0] == "d2sac");
            CHECK(std::isfinite(std::stod(curves[i][1])));
            CHECK(std::isfinite(std::stod(curves[i][2])));
        }
        const auto sweep_report = emit_plot_data(out);
        CHECK(fs::exists(out / "plots" / "sweep_curves.csv"));
        CHECK(sweep_report.missing.size() >= 1);  // no reward curves at the sweep root
    }
}

TEST_CASE("trace diagnostics emit T+1 rows per snapshot without changing results") {
    const fs::path out_a = fresh_dir("d2sac_h_trace_a");
    const fs::path out_b = fresh_dir("d2sac_h_trace_b");
    ExperimentConfig cfg = micro_config("d2sac", out_a);
    cfg.seeds = {4};
    run_experiment(cfg, false);
    ExperimentConfig traced = cfg;
    traced.out_dir = out_b.string();
    traced.diag.trace = true;
    traced.diag.trace_every = 2;
    run_experiment(traced, false);

    CHECK(rows_without_walltime(out_a / "seed_4" / "metrics.csv") ==
          rows_without_walltime(out_b / "seed_4" / "metrics.csv"));
    const auto trace = csv::read_rows(out_b / "seed_4" / "diffusion_trace.csv");
    REQUIRE(trace.size() > 1);
    CHECK(trace[0] == std::vector<std::string>{"step", "denoise_step", "action", "probability"});
    // snapshots at steps 1, 3 (cadence 2) and the final step 3: T+1 chain
    // states times 3 actions each
    int step1_rows = 0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i][0] == "1") step1_rows += 1;
    CHECK(step1_rows == (cfg.train.denoise_steps + 1) * cfg.env.asp_count);
}
