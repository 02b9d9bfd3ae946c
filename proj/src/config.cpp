#include "d2sac/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "d2sac/csv.hpp"

namespace d2sac::harness {

agod::NoiseScaleMode TrainConfig::noise_mode() const {
    if (noise_scale_mode == "paper") return agod::NoiseScaleMode::Paper;
    if (noise_scale_mode == "ddpm") return agod::NoiseScaleMode::Ddpm;
    throw ConfigError("train.noise_scale_mode: expected 'paper' or 'ddpm', got '" + noise_scale_mode + "'");
}

namespace {

struct Field {
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError(key + ": malformed real value '" + v + "'");
    }
}

long parse_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError(key + ": malformed integer value '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": malformed boolean value '" + v + "'");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

const std::map<std::string, Field>& field_table() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
#define D2SAC_REAL(key, expr)                                                                       \
    t[key] = Field{[](const ExperimentConfig& c) { return csv::format_double(c.expr); },            \
                   [](ExperimentConfig& c, const std::string& v) { c.expr = parse_double(key, v); }}
#define D2SAC_INT(key, expr)                                                                        \
    t[key] = Field{[](const ExperimentConfig& c) { return std::to_string(c.expr); },                 \
                   [](ExperimentConfig& c, const std::string& v) { c.expr = static_cast<int>(parse_long(key, v)); }}
#define D2SAC_LONG(key, expr)                                                                       \
    t[key] = Field{[](const ExperimentConfig& c) { return std::to_string(c.expr); },                 \
                   [](ExperimentConfig& c, const std::string& v) { c.expr = parse_long(key, v); }}
#define D2SAC_BOOL(key, expr)                                                                       \
    t[key] = Field{[](const ExperimentConfig& c) { return fmt_bool(c.expr); },                       \
                   [](ExperimentConfig& c, const std::string& v) { c.expr = parse_bool(key, v); }}
#define D2SAC_STR(key, expr)                                                                        \
    t[key] = Field{[](const ExperimentConfig& c) { return c.expr; },                                 \
                   [](ExperimentConfig& c, const std::string& v) { c.expr = v; }}

        D2SAC_INT("env.asp_count", env.asp_count);
        D2SAC_INT("env.capacity_min", env.capacity_min);
        D2SAC_INT("env.capacity_max", env.capacity_max);
        D2SAC_INT("env.task_steps_min", env.task_steps_min);
        D2SAC_INT("env.task_steps_max", env.task_steps_max);
        D2SAC_REAL("env.duration_min", env.duration_min);
        D2SAC_REAL("env.duration_max", env.duration_max);
        D2SAC_REAL("env.arrival_rate", env.arrival_rate);
        D2SAC_INT("env.task_count", env.task_count);
        D2SAC_INT("env.episode_limit", env.episode_limit);
        D2SAC_REAL("env.anchor_ax_min", env.anchor_ax_min);
        D2SAC_REAL("env.anchor_ax_max", env.anchor_ax_max);
        D2SAC_REAL("env.anchor_ay_min", env.anchor_ay_min);
        D2SAC_REAL("env.anchor_ay_max", env.anchor_ay_max);
        D2SAC_REAL("env.anchor_bx_min", env.anchor_bx_min);
        D2SAC_REAL("env.anchor_bx_max", env.anchor_bx_max);
        D2SAC_REAL("env.anchor_by_min", env.anchor_by_min);
        D2SAC_REAL("env.anchor_by_max", env.anchor_by_max);
        D2SAC_REAL("env.crash_penalty_fixed", env.crash_penalty_fixed);
        D2SAC_REAL("env.reward_baseline", env.reward_baseline);

        D2SAC_REAL("train.actor_lr", train.actor_lr);
        D2SAC_REAL("train.critic_lr", train.critic_lr);
        D2SAC_REAL("train.alpha", train.alpha);
        D2SAC_REAL("train.tau", train.tau);
        D2SAC_INT("train.batch_size", train.batch_size);
        D2SAC_REAL("train.weight_decay", train.weight_decay);
        D2SAC_REAL("train.gamma", train.gamma);
        D2SAC_INT("train.denoise_steps", train.denoise_steps);
        D2SAC_REAL("train.beta_min", train.beta_min);
        D2SAC_REAL("train.beta_max", train.beta_max);
        D2SAC_STR("train.noise_scale_mode", train.noise_scale_mode);
        D2SAC_BOOL("train.soft_td_target", train.soft_td_target);
        D2SAC_LONG("train.buffer_capacity", train.buffer_capacity);
        D2SAC_LONG("train.warmup_transitions", train.warmup_transitions);
        D2SAC_INT("train.train_steps", train.train_steps);
        D2SAC_INT("train.transitions_per_step", train.transitions_per_step);
        D2SAC_INT("train.eval_cadence", train.eval_cadence);
        D2SAC_INT("train.final_eval_episodes", train.final_eval_episodes);
        D2SAC_INT("train.hidden_dim", train.hidden_dim);
        D2SAC_INT("train.time_embed_dim", train.time_embed_dim);
        D2SAC_INT("train.time_hidden_dim", train.time_hidden_dim);

        D2SAC_BOOL("diag.trace", diag.trace);
        D2SAC_INT("diag.trace_every", diag.trace_every);

        D2SAC_STR("policy", policy);
        D2SAC_STR("out_dir", out_dir);

        t["seeds"] = Field{
            [](const ExperimentConfig& c) {
                std::ostringstream os;
                for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                    if (i) os << ',';
                    os << c.seeds[i];
                }
                return os.str();
            },
            [](ExperimentConfig& c, const std::string& v) {
                c.seeds.clear();
                std::stringstream ss(v);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    if (item.empty()) throw ConfigError("seeds: malformed seed list '" + v + "'");
                    c.seeds.push_back(static_cast<std::uint64_t>(parse_long("seeds", item)));
                }
                if (c.seeds.empty()) throw ConfigError("seeds: empty seed list");
            }};
#undef D2SAC_REAL
#undef D2SAC_INT
#undef D2SAC_LONG
#undef D2SAC_BOOL
#undef D2SAC_STR
        return t;
    }();
    return table;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        auto it = field_table().find(key);
        if (it == field_table().end()) throw ConfigError(key + ": unknown key");
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return parse_config(os.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& [key, field] : field_table()) os << key << '=' << field.get(cfg) << '\n';
    return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [key, field] : field_table()) {
        if (key == "out_dir") continue;
        const std::string entry = key + "=" + field.get(cfg) + "\n";
        for (unsigned char c : entry) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    auto require = [&errors](bool ok, const std::string& msg) {
        if (!ok) errors.push_back(msg);
    };
    require(env.asp_count >= 1, "env.asp_count: must be >= 1");
    require(env.capacity_min >= 1 && env.capacity_min <= env.capacity_max,
            "env.capacity_min/env.capacity_max: need 1 <= min <= max");
    require(env.task_steps_min >= 1 && env.task_steps_min <= env.task_steps_max,
            "env.task_steps_min/env.task_steps_max: need 1 <= min <= max");
    require(env.duration_min > 0.0 && env.duration_min <= env.duration_max,
            "env.duration_min/env.duration_max: need 0 < min <= max");
    require(env.arrival_rate > 0.0, "env.arrival_rate: must be positive");
    require(env.task_count >= 1, "env.task_count: must be >= 1");
    require(env.episode_limit >= 1, "env.episode_limit: must be >= 1");
    require(env.anchor_ax_min >= 0.0 && env.anchor_ax_min <= env.anchor_ax_max,
            "env.anchor_ax_min/env.anchor_ax_max: need 0 <= min <= max");
    require(env.anchor_ay_min >= 0.0 && env.anchor_ay_min <= env.anchor_ay_max,
            "env.anchor_ay_min/env.anchor_ay_max: need 0 <= min <= max");
    require(env.anchor_bx_min >= 0.0 && env.anchor_bx_min <= env.anchor_bx_max,
            "env.anchor_bx_min/env.anchor_bx_max: need 0 <= min <= max");
    require(env.anchor_by_min >= 0.0 && env.anchor_by_min <= env.anchor_by_max && env.anchor_by_max <= 1.0,
            "env.anchor_by_min/env.anchor_by_max: need 0 <= min <= max <= 1");
    require(env.anchor_ax_max < env.anchor_bx_min,
            "env.anchor_ax_max/env.anchor_bx_min: anchor ranges must keep A_x < B_x");
    require(env.anchor_ay_max <= env.anchor_by_min,
            "env.anchor_ay_max/env.anchor_by_min: anchor ranges must keep A_y <= B_y");
    require(env.crash_penalty_fixed >= 0.0, "env.crash_penalty_fixed: must be >= 0");

    require(train.actor_lr > 0.0, "train.actor_lr: must be positive");
    require(train.critic_lr > 0.0, "train.critic_lr: must be positive");
    require(train.alpha >= 0.0, "train.alpha: must be >= 0");
    require(train.tau > 0.0 && train.tau <= 1.0, "train.tau: must be in (0, 1]");
    require(train.batch_size >= 1, "train.batch_size: must be >= 1");
    require(train.weight_decay >= 0.0, "train.weight_decay: must be >= 0");
    require(train.gamma >= 0.0 && train.gamma <= 1.0, "train.gamma: must be within [0, 1]");
    require(train.denoise_steps >= 1, "train.denoise_steps: must be >= 1");
    require(train.beta_min > 0.0 && train.beta_min < train.beta_max,
            "train.beta_min/train.beta_max: need 0 < beta_min < beta_max");
    require(train.noise_scale_mode == "paper" || train.noise_scale_mode == "ddpm",
            "train.noise_scale_mode: must be 'paper' or 'ddpm'");
    require(train.buffer_capacity >= 1, "train.buffer_capacity: must be >= 1");
    require(train.batch_size <= train.buffer_capacity,
            "train.batch_size: must not exceed train.buffer_capacity");
    require(train.warmup_transitions >= 0, "train.warmup_transitions: must be >= 0");
    require(train.train_steps >= 1, "train.train_steps: must be >= 1");
    require(train.transitions_per_step >= 1, "train.transitions_per_step: must be >= 1");
    require(train.eval_cadence >= 1, "train.eval_cadence: must be >= 1");
    require(train.final_eval_episodes >= 1, "train.final_eval_episodes: must be >= 1");
    require(train.hidden_dim >= 1, "train.hidden_dim: must be >= 1");
    require(train.time_embed_dim >= 2 && train.time_embed_dim % 2 == 0,
            "train.time_embed_dim: must be even and >= 2");
    require(train.time_hidden_dim >= 1, "train.time_hidden_dim: must be >= 1");

    require(diag.trace_every >= 1, "diag.trace_every: must be >= 1");

    const auto& names = known_policies();
    require(std::find(names.begin(), names.end(), policy) != names.end(),
            "policy: unknown policy '" + policy + "'");
    require(!seeds.empty(), "seeds: at least one seed required");
    require(!out_dir.empty(), "out_dir: must not be empty");

    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const std::string& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
}

void apply_preset(ExperimentConfig& cfg, const std::string& name) {
    if (name == "paper") {
        cfg.train.train_steps = 1000;
        cfg.train.transitions_per_step = 1000;
        cfg.env.episode_limit = 1000;
        cfg.env.task_count = 1000;
    } else if (name == "desk") {
        cfg.train.train_steps = 300;
        cfg.train.transitions_per_step = 300;
        cfg.env.episode_limit = 300;
        cfg.env.task_count = 300;
    } else {
        throw ConfigError("preset: expected 'paper' or 'desk', got '" + name + "'");
    }
}

const std::vector<std::string>& known_policies() {
    static const std::vector<std::string> names = {"random", "round_robin", "crash_avoid",
                                                   "prophet", "sac_mlp", "d2sac"};
    return names;
}

}  // namespace d2sac::harness
