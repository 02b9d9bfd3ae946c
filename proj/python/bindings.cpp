#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "d2sac/harness.hpp"

namespace py = pybind11;
using namespace d2sac;

namespace {

// Python-facing environment handle owning its fleet and rng streams.
class PyEnv {
public:
    PyEnv(const std::string& config_text, std::uint64_t seed)
        : cfg_(harness::parse_config(config_text)), seed_(seed) {
        Rng fleet_rng = make_rng(seed, "fleet");
        fleet_ = env::generate_fleet(fleet_rng, cfg_.env);
        sim_ = std::make_unique<env::AspEnvironment>(cfg_.env, fleet_);
        workload_rng_ = make_rng(seed, "workload");
    }

    std::vector<double> reset() {
        return sim_->reset(env::generate_workload(workload_rng_, cfg_.env.task_count, cfg_.env.arrival_rate,
                                                  cfg_.env.task_steps_min, cfg_.env.task_steps_max,
                                                  cfg_.env.duration_min, cfg_.env.duration_max));
    }

    py::tuple step(int action) {
        const env::StepOutcome out = sim_->step(action);
        py::dict info;
        info["crashed"] = out.crashed;
        info["penalty"] = out.penalty;
        info["utility_gained"] = out.utility_gained;
        info["utility_lost"] = out.utility_lost;
        info["completed_ids"] = out.completed_ids;
        return py::make_tuple(out.observation, out.reward, out.done, info);
    }

    py::dict stats() const {
        const env::EpisodeStats& st = sim_->stats();
        py::dict d;
        d["arrived"] = st.arrived;
        d["finished"] = st.finished;
        d["crashed"] = st.crashed;
        d["obtained_utility"] = st.obtained_utility;
        d["lost_utility"] = st.lost_utility;
        d["cumulative_reward"] = st.cumulative_reward;
        return d;
    }

    int action_count() const { return cfg_.env.asp_count; }
    int obs_dim() const { return cfg_.env.obs_dim(); }
    const env::AspEnvironment& sim() const { return *sim_; }

private:
    harness::ExperimentConfig cfg_;
    std::uint64_t seed_;
    std::vector<env::AspProfile> fleet_;
    std::unique_ptr<env::AspEnvironment> sim_;
    Rng workload_rng_;
};

// Diffusion policy handle: fresh-initialized or restored from a checkpoint.
class PyPolicy {
public:
    PyPolicy(const std::string& config_text, std::uint64_t seed) {
        cfg_ = harness::parse_config(config_text);
        Rng init = make_rng(seed, "init-actor");
        model_ = rl::make_actor_model(cfg_, init);
        rng_ = make_rng(seed, "noise");
    }

    PyPolicy(const std::string& config_text, const std::string& kind, const std::string& ckpt) {
        cfg_ = harness::parse_config(config_text);
        model_ = harness::load_actor(ckpt, kind, cfg_.train);
        rng_ = make_rng(0, "noise");
    }

    std::vector<double> distribution(const std::vector<double>& obs) {
        return model_->distribution(obs, rng_).probs;
    }

    std::vector<std::vector<double>> trace(const std::vector<double>& obs) {
        return model_->distribution(obs, rng_, true).trace;
    }

    int act(const std::vector<double>& obs, bool greedy) {
        const auto dist = model_->distribution(obs, rng_);
        return agod::select_action(dist, greedy ? agod::SelectMode::Greedy : agod::SelectMode::Sample, rng_);
    }

    void reseed(std::uint64_t seed) { rng_ = make_rng(seed, "noise"); }
    std::string kind() const { return model_->kind(); }

private:
    harness::ExperimentConfig cfg_;
    std::unique_ptr<rl::ActorModel> model_;
    Rng rng_;
};

py::dict eval_to_dict(const rl::EvalMetrics& m) {
    py::dict d;
    d["test_reward"] = m.test_reward;
    d["finished_rate"] = m.finished_rate;
    d["crashed_rate"] = m.crashed_rate;
    d["obtained_utility"] = m.obtained_utility;
    d["lost_utility"] = m.lost_utility;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Diffusion-policy soft actor-critic core: schedule, sampler, simulator, trainer";

    m.def("mish", [](double x) { return nn::mish(x); }, py::arg("x"),
          "x * tanh(softplus(x)), numerically stable in the tails");
    m.def("sinusoidal_pos_emb",
          [](double t, int dim) { return nn::sinusoidal_pos_emb(t, dim).values(); },
          py::arg("t"), py::arg("dim"));
    m.def("entropy", [](const std::vector<double>& p) { return agod::entropy(p); }, py::arg("probs"),
          "Shannon entropy in nats; zero entries contribute nothing");

    py::class_<agod::DiffusionSchedule>(m, "DiffusionSchedule")
        .def_readonly("steps", &agod::DiffusionSchedule::steps)
        .def_readonly("beta", &agod::DiffusionSchedule::beta)
        .def_readonly("alpha", &agod::DiffusionSchedule::alpha)
        .def_readonly("alpha_bar", &agod::DiffusionSchedule::alpha_bar)
        .def_readonly("tilde_beta", &agod::DiffusionSchedule::tilde_beta);
    m.def("build_vp_schedule", &agod::build_vp_schedule, py::arg("steps"), py::arg("beta_min"),
          py::arg("beta_max"));

    py::class_<PyEnv>(m, "Environment")
        .def(py::init<const std::string&, std::uint64_t>(), py::arg("config_text") = "",
             py::arg("seed") = 0)
        .def("reset", &PyEnv::reset)
        .def("step", &PyEnv::step, py::arg("action"))
        .def("stats", &PyEnv::stats)
        .def_property_readonly("action_count", &PyEnv::action_count)
        .def_property_readonly("obs_dim", &PyEnv::obs_dim);

    py::class_<PyPolicy>(m, "Policy")
        .def(py::init<const std::string&, std::uint64_t>(), py::arg("config_text") = "",
             py::arg("seed") = 0)
        .def(py::init<const std::string&, const std::string&, const std::string&>(),
             py::arg("config_text"), py::arg("kind"), py::arg("checkpoint"))
        .def("distribution", &PyPolicy::distribution, py::arg("obs"))
        .def("trace", &PyPolicy::trace, py::arg("obs"))
        .def("act", &PyPolicy::act, py::arg("obs"), py::arg("greedy") = false)
        .def("reseed", &PyPolicy::reseed, py::arg("seed"))
        .def_property_readonly("kind", &PyPolicy::kind);

    m.def(
        "heuristic_action",
        [](const std::string& name, const std::vector<double>& obs, int asp_count, std::uint64_t seed) {
            auto p = policies::make_heuristic(name, asp_count);
            Rng rng(seed);
            return p->act(obs, rng);
        },
        py::arg("name"), py::arg("obs"), py::arg("asp_count"), py::arg("seed") = 0);

    m.def(
        "evaluate_heuristic",
        [](const std::string& name, const std::string& config_text, std::uint64_t seed, int episodes) {
            const auto cfg = harness::parse_config(config_text);
            Rng fleet_rng = make_rng(seed, "fleet");
            const auto fleet = env::generate_fleet(fleet_rng, cfg.env);
            auto policy = policies::make_heuristic(name, cfg.env.asp_count);
            return eval_to_dict(rl::evaluate_policy(*policy, cfg.env, fleet, seed, episodes));
        },
        py::arg("name"), py::arg("config_text") = "", py::arg("seed") = 0, py::arg("episodes") = 1);

    m.def("parse_config",
          [](const std::string& text) { return harness::serialize_config(harness::parse_config(text)); },
          py::arg("text"), "Parse, validate and return the canonical serialization");
    m.def("config_hash",
          [](const std::string& text) { return harness::hash_hex(harness::config_hash(harness::parse_config(text))); },
          py::arg("text"));
    m.def("preset",
          [](const std::string& name) {
              harness::ExperimentConfig cfg;
              harness::apply_preset(cfg, name);
              return harness::serialize_config(cfg);
          },
          py::arg("name"));

    m.def(
        "run_experiment",
        [](const std::string& config_text, bool overwrite) {
            const auto cfg = harness::parse_config(config_text);
            const auto out = harness::run_experiment(cfg, overwrite);
            py::list seeds;
            for (const auto& s : out.seeds) {
                py::dict d;
                d["seed"] = s.seed;
                d["ok"] = s.ok;
                d["error"] = s.error;
                d["eval"] = eval_to_dict(s.eval);
                d["wall_time_s"] = s.wall_time_s;
                seeds.append(d);
            }
            py::dict d;
            d["out_dir"] = out.out_dir.string();
            d["seeds"] = seeds;
            return d;
        },
        py::arg("config_text"), py::arg("overwrite") = false,
        "Train (or evaluate a heuristic) per the config and write the results tree");
}
