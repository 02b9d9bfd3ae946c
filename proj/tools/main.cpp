#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "d2sac/harness.hpp"

namespace {

using d2sac::harness::ConfigError;
using d2sac::harness::ExperimentConfig;

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string policy;
    std::vector<std::uint64_t> seeds;
    std::string out;
    bool overwrite = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Path to a key=value config file");
    cmd->add_option("--preset", args.preset, "Scale preset")->check(CLI::IsMember({"paper", "desk"}));
    cmd->add_option("--policy", args.policy, "Policy name (random|round_robin|crash_avoid|prophet|sac_mlp|d2sac)");
    cmd->add_option("--seed", args.seeds, "Master seed; repeat for multiple seeds");
    cmd->add_option("--out", args.out, "Output directory");
    cmd->add_flag("--overwrite", args.overwrite, "Replace an existing output directory");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = d2sac::harness::load_config_file(args.config_path);
    if (!args.preset.empty()) d2sac::harness::apply_preset(cfg, args.preset);
    if (!args.policy.empty()) cfg.policy = args.policy;
    if (!args.seeds.empty()) cfg.seeds = args.seeds;
    if (!args.out.empty()) cfg.out_dir = args.out;
    cfg.validate();
    return cfg;
}

int fail(const std::string& kind, const std::string& message, int code) {
    nlohmann::json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return code;
}

void print_summary(const d2sac::harness::ExperimentOutcome& out) {
    for (const auto& s : out.seeds) {
        if (s.ok) {
            std::printf("seed %llu: test_reward=%.3f finished=%.1f%% crashed=%.1f%% utility=%.3f lost=%.3f\n",
                        static_cast<unsigned long long>(s.seed), s.eval.test_reward,
                        100.0 * s.eval.finished_rate, 100.0 * s.eval.crashed_rate,
                        s.eval.obtained_utility, s.eval.lost_utility);
        } else {
            std::printf("seed %llu: FAILED (%s)\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
        }
    }
    std::printf("outputs: %s\n", out.out_dir.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion-policy soft actor-critic for resource-constrained provider selection"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, sweep_args;
    std::string eval_ckpt;
    std::string sweep_param;
    std::vector<double> sweep_values;
    std::string plots_dir;

    CLI::App* train_cmd = app.add_subcommand("train", "Train a policy and write metrics, checkpoints and a summary");
    add_common(train_cmd, train_args);

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a heuristic or a trained checkpoint on held-out workloads");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--ckpt", eval_ckpt, "Actor checkpoint (required for sac_mlp and d2sac)");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Train across a parameter range and tabulate final rewards");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--param", sweep_param, "Swept parameter (denoise_steps|alpha|lambda)")->required();
    sweep_cmd->add_option("--values", sweep_values, "Values to sweep")->required()->delimiter(',');

    CLI::App* plots_cmd = app.add_subcommand("export-plots", "Emit tidy plot-ready CSVs from a results directory");
    plots_cmd->add_option("--out", plots_dir, "Results directory to read and write under")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(train_args);
            if (d2sac::policies::is_heuristic(cfg.policy))
                throw ConfigError("train: policy '" + cfg.policy + "' is a heuristic; use eval");
            const auto out = d2sac::harness::run_experiment(cfg, train_args.overwrite);
            print_summary(out);
            if (!out.all_ok()) return fail("train", "one or more seeds failed; see error.txt files", 3);
        } else if (eval_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(eval_args);
            std::optional<std::filesystem::path> ckpt;
            if (!eval_ckpt.empty()) ckpt = eval_ckpt;
            const auto out = d2sac::harness::run_eval(cfg, eval_args.overwrite, ckpt);
            print_summary(out);
            if (!out.all_ok()) return fail("eval", "one or more seeds failed; see error.txt files", 3);
        } else if (sweep_cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(sweep_args);
            d2sac::harness::SweepSpec spec;
            spec.parameter = sweep_param;
            spec.values = sweep_values;
            const auto rows = d2sac::harness::run_sweep(spec, cfg, sweep_args.overwrite);
            for (const auto& r : rows)
                if (r.seed == "mean")
                    std::printf("%s=%g: mean final test reward %.3f, wall time %.1fs\n", r.parameter.c_str(),
                                r.value, r.final_test_reward, r.wall_time_s);
            std::printf("outputs: %s\n", cfg.out_dir.c_str());
        } else if (plots_cmd->parsed()) {
            const auto report = d2sac::harness::emit_plot_data(plots_dir);
            for (const auto& p : report.written) std::printf("wrote %s\n", p.string().c_str());
            for (const auto& m : report.missing) std::printf("missing input: %s\n", m.c_str());
            if (report.skipped_rows > 0)
                std::printf("skipped %ld rows with non-finite values\n", report.skipped_rows);
        }
    } catch (const ConfigError& ex) {
        return fail("config", ex.what(), 1);
    } catch (const std::filesystem::filesystem_error& ex) {
        return fail("io", ex.what(), 2);
    } catch (const std::exception& ex) {
        return fail("runtime", ex.what(), 3);
    }
    return 0;
}
