#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "d2sac/config.hpp"
#include "d2sac/trainer.hpp"

namespace d2sac::harness {

struct SweepSpec {
    std::string parameter;  // denoise_steps | alpha | lambda
    std::vector<double> values;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    rl::EvalMetrics eval;
    double final_train_reward = 0.0;
    double wall_time_s = 0.0;
};

struct ExperimentOutcome {
    std::filesystem::path out_dir;
    std::vector<SeedOutcome> seeds;

    bool all_ok() const;
};

// Per-seed metrics CSV + checkpoint + manifest, and a cross-seed summary CSV.
// Refuses to touch an existing directory unless overwrite is set.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool overwrite);

struct SweepRow {
    std::string parameter;
    double value = 0.0;
    std::string seed;  // seed number, "mean" or "std"
    double final_test_reward = 0.0;
    double wall_time_s = 0.0;
    double reward_norm = 0.0;
    double time_norm = 0.0;
};

// One training run per (value, seed) under <out>/<param>=<value>/, plus
// sweep.csv with per-seed and aggregated rows.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, ExperimentConfig base, bool overwrite);

// Evaluation without training: heuristics need only the config; learned
// policies are restored from a checkpoint and rolled out greedily.
ExperimentOutcome run_eval(const ExperimentConfig& cfg, bool overwrite,
                           const std::optional<std::filesystem::path>& ckpt);

// Tidy long-format CSVs (series, x, y, seed) for reward curves, reverse-chain
// traces and sweep curves, written to <metrics_dir>/plots/.
struct PlotExportReport {
    std::vector<std::filesystem::path> written;
    std::vector<std::string> missing;
    long skipped_rows = 0;
};
PlotExportReport emit_plot_data(const std::filesystem::path& metrics_dir);

// Reconstructs a trained policy from <run_dir>/seed_<k>/actor.ckpt.
std::unique_ptr<rl::ActorModel> load_actor(const std::filesystem::path& ckpt,
                                           const std::string& kind, const TrainConfig& train);

std::string hash_hex(std::uint64_t h);

}  // namespace d2sac::harness
