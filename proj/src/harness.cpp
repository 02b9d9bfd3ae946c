#include "d2sac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "d2sac/checkpoint.hpp"
#include "d2sac/csv.hpp"

namespace d2sac::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMetricsHeader = {
    "step",       "env_steps",  "train_reward", "test_reward",   "actor_loss",
    "critic_loss", "entropy",   "crashed_rate", "finished_rate", "wall_time_s"};

const std::vector<std::string> kSummaryColumns = {
    "test_reward", "train_reward", "finished_rate", "crashed_rate",
    "obtained_utility", "lost_utility", "wall_time_s"};

void ensure_fresh_dir(const fs::path& dir, bool overwrite) {
    if (fs::exists(dir)) {
        if (!overwrite) throw std::runtime_error("output directory exists (pass --overwrite to replace): " + dir.string());
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write: " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> metrics_row_cells(const rl::MetricsRow& r) {
    return {std::to_string(r.step),
            std::to_string(r.env_steps),
            csv::format_double(r.train_reward),
            csv::format_double(r.test_reward),
            csv::format_double(r.actor_loss),
            csv::format_double(r.critic_loss),
            csv::format_double(r.entropy),
            csv::format_double(r.crashed_rate),
            csv::format_double(r.finished_rate),
            csv::format_double(r.wall_time_s)};
}

void write_eval_csv(const fs::path& path, const rl::EvalMetrics& m, double train_reward, double wall_time) {
    csv::Writer w(path);
    w.write_row(kSummaryColumns);
    w.write_row({csv::format_double(m.test_reward), csv::format_double(train_reward),
                 csv::format_double(m.finished_rate), csv::format_double(m.crashed_rate),
                 csv::format_double(m.obtained_utility), csv::format_double(m.lost_utility),
                 csv::format_double(wall_time)});
}

void write_seed_manifest(const fs::path& path, std::uint64_t hash, std::uint64_t seed, long step,
                         const std::string& policy) {
    json j;
    j["config_hash"] = hash_hex(hash);
    j["seed"] = seed;
    j["step"] = step;
    j["policy"] = policy;
    write_text(path, j.dump(2) + "\n");
}

SeedOutcome run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& seed_dir) {
    SeedOutcome out;
    out.seed = seed;
    fs::create_directories(seed_dir);
    const std::uint64_t hash = config_hash(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    if (policies::is_heuristic(cfg.policy)) {
        Rng fleet_rng = make_rng(seed, "fleet");
        const auto fleet = env::generate_fleet(fleet_rng, cfg.env);
        auto policy = policies::make_heuristic(cfg.policy, cfg.env.asp_count);
        out.eval = rl::evaluate_policy(*policy, cfg.env, fleet, seed, cfg.train.final_eval_episodes);
        out.final_train_reward = out.eval.test_reward;
        out.wall_time_s = elapsed();
        write_eval_csv(seed_dir / "eval.csv", out.eval, out.final_train_reward, out.wall_time_s);
        write_seed_manifest(seed_dir / "manifest.json", hash, seed, 0, cfg.policy);
        out.ok = true;
        return out;
    }

    csv::Writer metrics(seed_dir / "metrics.csv");
    metrics.write_row(kMetricsHeader);
    std::optional<csv::Writer> trace;
    if (cfg.diag.trace) {
        trace.emplace(seed_dir / "diffusion_trace.csv");
        trace->write_row({"step", "denoise_step", "action", "probability"});
    }

    rl::TrainHooks hooks;
    hooks.on_step = [&metrics](const rl::MetricsRow& r) { metrics.write_row(metrics_row_cells(r)); };
    if (cfg.diag.trace) {
        hooks.on_trace = [&trace](long step, int t, int action, double p) {
            trace->write_row({std::to_string(step), std::to_string(t), std::to_string(action),
                              csv::format_double(p)});
        };
    }

    rl::TrainResult result = rl::train(cfg, seed, hooks);
    nn::save_checkpoint(seed_dir / "actor.ckpt", result.actor->checkpoint_layers());
    write_seed_manifest(seed_dir / "manifest.json", hash, seed, cfg.train.train_steps, cfg.policy);

    out.eval = result.final_eval;
    out.final_train_reward = result.log.empty() ? 0.0 : result.log.back().train_reward;
    out.wall_time_s = result.log.empty() ? elapsed() : result.log.back().wall_time_s;
    write_eval_csv(seed_dir / "eval.csv", out.eval, out.final_train_reward, out.wall_time_s);
    out.ok = true;
    return out;
}

void write_summary(const fs::path& path, const std::vector<SeedOutcome>& seeds) {
    std::vector<std::vector<double>> columns(kSummaryColumns.size());
    for (const SeedOutcome& s : seeds) {
        if (!s.ok) continue;
        const double vals[] = {s.eval.test_reward,      s.final_train_reward, s.eval.finished_rate,
                               s.eval.crashed_rate,     s.eval.obtained_utility,
                               s.eval.lost_utility,     s.wall_time_s};
        for (std::size_t i = 0; i < columns.size(); ++i) columns[i].push_back(vals[i]);
    }
    csv::Writer w(path);
    std::vector<std::string> header = {"stat"};
    header.insert(header.end(), kSummaryColumns.begin(), kSummaryColumns.end());
    w.write_row(header);
    auto emit = [&](const std::string& stat, auto fold) {
        std::vector<std::string> cells = {stat};
        for (const auto& col : columns) cells.push_back(csv::format_double(fold(col)));
        w.write_row(cells);
    };
    emit("mean", [](const std::vector<double>& col) {
        if (col.empty()) return 0.0;
        double s = 0.0;
        for (double v : col) s += v;
        return s / col.size();
    });
    emit("std", [](const std::vector<double>& col) {
        if (col.size() < 2) return 0.0;
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= col.size();
        double acc = 0.0;
        for (double v : col) acc += (v - mean) * (v - mean);
        return std::sqrt(acc / (col.size() - 1));
    });
}

}  // namespace

bool ExperimentOutcome::all_ok() const {
    return std::all_of(seeds.begin(), seeds.end(), [](const SeedOutcome& s) { return s.ok; });
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool overwrite) {
    cfg.validate();
    ExperimentOutcome outcome;
    outcome.out_dir = cfg.out_dir;
    ensure_fresh_dir(outcome.out_dir, overwrite);

    write_text(outcome.out_dir / "config.txt", serialize_config(cfg));
    json manifest;
    manifest["config_hash"] = hash_hex(config_hash(cfg));
    manifest["policy"] = cfg.policy;
    manifest["seeds"] = cfg.seeds;
    write_text(outcome.out_dir / "manifest.json", manifest.dump(2) + "\n");

    for (std::uint64_t seed : cfg.seeds) {
        const fs::path seed_dir = outcome.out_dir / ("seed_" + std::to_string(seed));
        SeedOutcome s;
        try {
            s = run_one_seed(cfg, seed, seed_dir);
        } catch (const std::exception& ex) {
            s.seed = seed;
            s.ok = false;
            s.error = ex.what();
            write_text(seed_dir / "error.txt", std::string(ex.what()) + "\n");
        }
        outcome.seeds.push_back(std::move(s));
    }
    write_summary(outcome.out_dir / "summary.csv", outcome.seeds);
    return outcome;
}

ExperimentOutcome run_eval(const ExperimentConfig& cfg, bool overwrite,
                           const std::optional<fs::path>& ckpt) {
    cfg.validate();
    if (policies::is_heuristic(cfg.policy)) return run_experiment(cfg, overwrite);
    if (!ckpt) throw ConfigError("eval: policy '" + cfg.policy + "' needs --ckpt");

    ExperimentOutcome outcome;
    outcome.out_dir = cfg.out_dir;
    ensure_fresh_dir(outcome.out_dir, overwrite);
    write_text(outcome.out_dir / "config.txt", serialize_config(cfg));
    json manifest;
    manifest["config_hash"] = hash_hex(config_hash(cfg));
    manifest["policy"] = cfg.policy;
    manifest["seeds"] = cfg.seeds;
    manifest["checkpoint"] = ckpt->string();
    write_text(outcome.out_dir / "manifest.json", manifest.dump(2) + "\n");

    std::unique_ptr<rl::ActorModel> actor = load_actor(*ckpt, cfg.policy, cfg.train);
    for (std::uint64_t seed : cfg.seeds) {
        const fs::path seed_dir = outcome.out_dir / ("seed_" + std::to_string(seed));
        SeedOutcome s;
        s.seed = seed;
        try {
            fs::create_directories(seed_dir);
            const auto t0 = std::chrono::steady_clock::now();
            Rng fleet_rng = make_rng(seed, "fleet");
            const auto fleet = env::generate_fleet(fleet_rng, cfg.env);
            policies::ActorPolicy greedy(*actor, agod::SelectMode::Greedy);
            s.eval = rl::evaluate_policy(greedy, cfg.env, fleet, seed, cfg.train.final_eval_episodes);
            s.final_train_reward = s.eval.test_reward;
            s.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_eval_csv(seed_dir / "eval.csv", s.eval, s.final_train_reward, s.wall_time_s);
            write_seed_manifest(seed_dir / "manifest.json", config_hash(cfg), seed, 0, cfg.policy);
            s.ok = true;
        } catch (const std::exception& ex) {
            s.ok = false;
            s.error = ex.what();
            write_text(seed_dir / "error.txt", std::string(ex.what()) + "\n");
        }
        outcome.seeds.push_back(std::move(s));
    }
    write_summary(outcome.out_dir / "summary.csv", outcome.seeds);
    return outcome;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, ExperimentConfig base, bool overwrite) {
    if (spec.values.empty()) throw ConfigError("sweep: value list must not be empty");
    if (spec.parameter != "denoise_steps" && spec.parameter != "alpha" && spec.parameter != "lambda")
        throw ConfigError("sweep: parameter must be one of denoise_steps|alpha|lambda");
    if (policies::is_heuristic(base.policy) || base.policy == "prophet")
        throw ConfigError("sweep: only trainable policies can be swept");

    const fs::path root = base.out_dir;
    ensure_fresh_dir(root, overwrite);
    write_text(root / "config.txt", serialize_config(base));

    std::vector<SweepRow> rows;
    std::vector<double> mean_rewards, mean_times;
    for (double value : spec.values) {
        ExperimentConfig cfg = base;
        if (spec.parameter == "denoise_steps") {
            const int t = static_cast<int>(std::llround(value));
            if (t < 1 || std::abs(value - t) > 1e-9) throw ConfigError("sweep: denoise_steps values must be positive integers");
            cfg.train.denoise_steps = t;
        } else if (spec.parameter == "alpha") {
            if (value < 0) throw ConfigError("sweep: alpha values must be >= 0");
            cfg.train.alpha = value;
        } else {
            if (!(value > 0)) throw ConfigError("sweep: lambda values must be positive");
            cfg.env.arrival_rate = value;
        }
        std::ostringstream label;
        label << spec.parameter << "=" << csv::format_double(value);
        cfg.out_dir = (root / label.str()).string();
        const ExperimentOutcome out = run_experiment(cfg, true);
        double sum_r = 0.0, sum_t = 0.0;
        int n = 0;
        for (const SeedOutcome& s : out.seeds) {
            if (!s.ok) throw std::runtime_error("sweep: seed " + std::to_string(s.seed) + " failed: " + s.error);
            SweepRow row;
            row.parameter = spec.parameter;
            row.value = value;
            row.seed = std::to_string(s.seed);
            row.final_test_reward = s.eval.test_reward;
            row.wall_time_s = s.wall_time_s;
            rows.push_back(row);
            sum_r += s.eval.test_reward;
            sum_t += s.wall_time_s;
            n += 1;
        }
        SweepRow mean;
        mean.parameter = spec.parameter;
        mean.value = value;
        mean.seed = "mean";
        mean.final_test_reward = sum_r / n;
        mean.wall_time_s = sum_t / n;
        rows.push_back(mean);
        mean_rewards.push_back(mean.final_test_reward);
        mean_times.push_back(mean.wall_time_s);
    }

    const double max_r = *std::max_element(mean_rewards.begin(), mean_rewards.end());
    const double max_t = *std::max_element(mean_times.begin(), mean_times.end());
    const double r_div = max_r > 0 ? max_r : 1.0;
    const double t_div = max_t > 0 ? max_t : 1.0;
    for (SweepRow& row : rows) {
        row.reward_norm = row.final_test_reward / r_div;
        row.time_norm = row.wall_time_s / t_div;
    }

    csv::Writer w(root / "sweep.csv");
    w.write_row({"parameter", "value", "seed", "final_test_reward", "wall_time_s", "reward_norm", "time_norm"});
    for (const SweepRow& row : rows)
        w.write_row({row.parameter, csv::format_double(row.value), row.seed,
                     csv::format_double(row.final_test_reward), csv::format_double(row.wall_time_s),
                     csv::format_double(row.reward_norm), csv::format_double(row.time_norm)});
    return rows;
}

PlotExportReport emit_plot_data(const fs::path& metrics_dir) {
    PlotExportReport report;
    if (!fs::exists(metrics_dir)) throw std::runtime_error("emit_plot_data: no such directory: " + metrics_dir.string());
    const fs::path plots = metrics_dir / "plots";
    fs::create_directories(plots);

    auto finite = [](const std::string& cell) {
        try {
            return std::isfinite(std::stod(cell));
        } catch (...) {
            return false;
        }
    };

    std::string policy = "policy";
    {
        const fs::path manifest = metrics_dir / "manifest.json";
        if (fs::exists(manifest)) {
            std::ifstream is(manifest);
            json j = json::parse(is, nullptr, false);
            if (!j.is_discarded() && j.contains("policy")) policy = j["policy"].get<std::string>();
        }
    }

    // Reward curves: one series per policy, one row per (step, seed).
    {
        bool any = false;
        csv::Writer w(plots / "reward_curves.csv");
        w.write_row({"series", "x", "y", "seed"});
        for (const auto& entry : fs::directory_iterator(metrics_dir)) {
            if (!entry.is_directory()) continue;
            const std::string name = entry.path().filename().string();
            if (name.rfind("seed_", 0) != 0) continue;
            const fs::path mpath = entry.path() / "metrics.csv";
            if (!fs::exists(mpath)) continue;
            const std::string seed = name.substr(5);
            const auto rows = csv::read_rows(mpath);
            for (std::size_t i = 1; i < rows.size(); ++i) {
                if (rows[i].size() < 4) continue;
                if (!finite(rows[i][0]) || !finite(rows[i][3])) {
                    report.skipped_rows += 1;
                    continue;
                }
                w.write_row({policy, rows[i][0], rows[i][3], seed});
                any = true;
            }
        }
        if (any)
            report.written.push_back(plots / "reward_curves.csv");
        else
            report.missing.push_back("reward curves: no seed_*/metrics.csv under " + metrics_dir.string());
    }

    // Reverse-chain traces: series per (training step, action).
    {
        bool any = false;
        csv::Writer w(plots / "diffusion_traces.csv");
        w.write_row({"series", "x", "y", "seed"});
        for (const auto& entry : fs::directory_iterator(metrics_dir)) {
            if (!entry.is_directory()) continue;
            const std::string name = entry.path().filename().string();
            if (name.rfind("seed_", 0) != 0) continue;
            const fs::path tpath = entry.path() / "diffusion_trace.csv";
            if (!fs::exists(tpath)) continue;
            const std::string seed = name.substr(5);
            const auto rows = csv::read_rows(tpath);
            for (std::size_t i = 1; i < rows.size(); ++i) {
                if (rows[i].size() != 4) continue;
                if (!finite(rows[i][1]) || !finite(rows[i][3])) {
                    report.skipped_rows += 1;
                    continue;
                }
                w.write_row({"step" + rows[i][0] + ":a" + rows[i][2], rows[i][1], rows[i][3], seed});
                any = true;
            }
        }
        if (any)
            report.written.push_back(plots / "diffusion_traces.csv");
        else
            report.missing.push_back("diffusion traces: no seed_*/diffusion_trace.csv under " + metrics_dir.string());
    }

    // Sweep curves.
    {
        const fs::path spath = metrics_dir / "sweep.csv";
        if (fs::exists(spath)) {
            csv::Writer w(plots / "sweep_curves.csv");
            w.write_row({"series", "x", "y", "seed"});
            const auto rows = csv::read_rows(spath);
            for (std::size_t i = 1; i < rows.size(); ++i) {
                if (rows[i].size() < 5) continue;
                if (rows[i][2] == "std") continue;
                if (!finite(rows[i][1]) || !finite(rows[i][3])) {
                    report.skipped_rows += 1;
                    continue;
                }
                w.write_row({rows[i][0], rows[i][1], rows[i][3], rows[i][2]});
            }
            report.written.push_back(plots / "sweep_curves.csv");
        } else {
            report.missing.push_back("sweep curves: no sweep.csv under " + metrics_dir.string());
        }
    }
    return report;
}

std::unique_ptr<rl::ActorModel> load_actor(const fs::path& ckpt, const std::string& kind,
                                           const TrainConfig& train) {
    std::vector<nn::DenseLayer> layers = nn::load_checkpoint(ckpt);
    if (kind == "d2sac") {
        if (layers.size() != 5) throw std::runtime_error("load_actor: d2sac checkpoint must hold 5 layers");
        nn::Stack time_mlp{{std::move(layers[0]), std::move(layers[1])}};
        nn::Stack trunk{{std::move(layers[2]), std::move(layers[3]), std::move(layers[4])}};
        const int time_dim = time_mlp.in_dim();
        const int action_dim = trunk.out_dim();
        const int obs_dim = trunk.in_dim() - action_dim - time_dim;
        agod::DiffusionActor actor(action_dim, obs_dim, time_dim, std::move(time_mlp), std::move(trunk));
        return std::make_unique<rl::DiffusionActorModel>(
            std::move(actor), agod::build_vp_schedule(train.denoise_steps, train.beta_min, train.beta_max),
            train.noise_mode());
    }
    if (kind == "sac_mlp") {
        nn::Stack stack;
        stack.layers = std::move(layers);
        return std::make_unique<rl::MlpActorModel>(std::move(stack));
    }
    throw std::runtime_error("load_actor: unknown actor kind '" + kind + "'");
}

}  // namespace d2sac::harness
