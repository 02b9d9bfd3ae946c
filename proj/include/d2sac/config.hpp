#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "d2sac/env.hpp"
#include "d2sac/schedule.hpp"

namespace d2sac::harness {

struct TrainConfig {
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double alpha = 0.05;        // entropy temperature
    double tau = 0.005;         // soft-update weight
    int batch_size = 512;
    double weight_decay = 1e-4;
    double gamma = 0.95;
    int denoise_steps = 5;
    double beta_min = 0.1;
    double beta_max = 10.0;
    std::string noise_scale_mode = "paper";  // paper | ddpm
    bool soft_td_target = false;             // entropy bonus inside the TD target (ablation)
    long buffer_capacity = 1000000;
    // No updates until the buffer holds this many transitions (at least the
    // batch size): the first batches otherwise regress on data too narrow to
    // rank actions, and the actor imprints those spurious preferences.
    long warmup_transitions = 2048;
    int train_steps = 1000;          // E
    int transitions_per_step = 1000; // C
    int eval_cadence = 1;
    int final_eval_episodes = 3;
    int hidden_dim = 256;
    int time_embed_dim = 16;
    int time_hidden_dim = 32;

    agod::NoiseScaleMode noise_mode() const;
};

struct DiagConfig {
    bool trace = false;
    int trace_every = 100;  // training steps between reverse-chain snapshots
};

struct ExperimentConfig {
    env::EnvConfig env;
    TrainConfig train;
    DiagConfig diag;
    std::string policy = "d2sac";
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    std::string out_dir = "out";

    // Throws ConfigError listing every violated constraint with its key path.
    void validate() const;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value text with dotted section prefixes; '#' starts a comment.
// Missing keys keep their defaults; unknown keys are an error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Canonical serialization: sorted keys, exact doubles. parse(serialize(c))
// reproduces c.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization minus the output directory, so the
// hash identifies the experiment rather than its placement on disk.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// paper: Table-defaults as-is. desk: E = C = L = J = 300 for desktop-scale runs.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

const std::vector<std::string>& known_policies();

}  // namespace d2sac::harness
