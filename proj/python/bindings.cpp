#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "v2x/baselines.hpp"
#include "v2x/experiment.hpp"
#include "v2x/mpdqn.hpp"

namespace py = pybind11;
using namespace v2x;

namespace {

Rri rri_arg(int slots) {
  if (slots != 20 && slots != 50 && slots != 100) throw py::value_error("rri must be 20, 50 or 100");
  return static_cast<Rri>(slots);
}

EnvConfig env_config(int n_vehicles, std::int64_t horizon_slots, const std::string& access,
                     const std::string& radio, double message_bits, const std::optional<std::string>& config_json) {
  ExperimentConfig base;
  if (config_json) {
    ValidationReport r;
    base = parse_config(nlohmann::json::parse(*config_json), r);
    if (!r.ok()) throw ConfigError(r.joined());
  }
  SweepPoint p;
  p.n_vehicles = n_vehicles;
  p.message_size_bits = message_bits;
  if (access == "OMA") p.access = AccessMode::kOma;
  else if (access == "NOMA") p.access = AccessMode::kNoma;
  else throw py::value_error("access must be OMA or NOMA");
  if (radio == "NR") p.radio = RadioMode::kNrMode2;
  else if (radio == "LTE") p.radio = RadioMode::kLteMode4;
  else throw py::value_error("radio must be NR or LTE");
  EnvConfig e = env_for(base, p);
  e.scenario.horizon_slots = horizon_slots;
  e.validate();
  return e;
}

py::dict metrics_dict(const EpisodeMetrics& m) {
  py::dict d;
  d["avg_aoi_slots"] = m.avg_aoi_slots;
  d["avg_energy_j"] = m.avg_energy_j;
  d["objective"] = m.objective;
  d["slots"] = m.slots;
  return d;
}

py::dict eval_dict(const EvalReport& r) {
  py::dict d;
  d["avg_aoi_slots"] = r.avg_aoi_slots;
  d["avg_energy_j"] = r.avg_energy_j;
  d["objective"] = r.objective;
  d["mean_reward"] = r.mean_reward;
  d["episode_mean_reward"] = r.episode_mean_reward;
  return d;
}

py::dict record_dict(const ResultRecord& r) {
  py::dict d;
  d["point_id"] = r.point.id();
  d["seed"] = r.seed;
  d["status"] = r.status;
  d["avg_aoi_slots"] = r.avg_aoi_slots;
  d["avg_energy_j"] = r.avg_energy_j;
  d["objective"] = r.objective;
  d["mean_reward"] = r.mean_reward;
  return d;
}

py::tuple action_tuple(const ActionTuple& a) { return py::make_tuple(rri_slots(a.gamma), a.power_w); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "NR-V2X sidelink AoI/energy simulator";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("rc0_of", &rc0_of, py::arg("rri_slots"));
  m.def("dbm_to_w", &dbm_to_w);

  m.def("validate_config", [](const std::string& path) { return validate_config_file(path).issues; },
        py::arg("path"), "Problems found in a config file; empty when valid.");
  m.def("canonical_config", [](const std::string& path) { return config_to_json(load_config(path)).dump(); },
        py::arg("path"), "Fully populated config as JSON text.");
  m.def(
      "run",
      [](const std::string& path, std::optional<std::string> out, int jobs, std::optional<std::uint64_t> seed) {
        const ExperimentConfig c = load_config(path);
        RunOptions o;
        o.jobs = jobs;
        o.out_dir = std::move(out);
        o.seed_override = seed;
        RunOutput r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c, o);
        }
        py::list records;
        for (const auto& rec : r.records) records.append(record_dict(rec));
        py::dict d;
        d["records"] = records;
        d["n_failed"] = r.n_failed;
        return d;
      },
      py::arg("config_path"), py::arg("out") = py::none(), py::arg("jobs") = 1, py::arg("seed_override") = py::none());
  m.def(
      "summarize",
      [](const std::string& dir) {
        py::list out;
        for (const auto& r : summarize_dir(dir)) {
          py::dict d;
          d["n_vehicles"] = r.n_vehicles;
          d["message_size_bits"] = r.message_size_bits;
          d["access"] = r.access;
          d["radio"] = r.radio;
          d["policy"] = r.policy;
          d["n_seeds"] = r.n_seeds;
          d["aoi_mean"] = r.aoi_mean;
          d["aoi_std"] = r.aoi_std;
          d["energy_mean"] = r.energy_mean;
          d["energy_std"] = r.energy_std;
          d["objective_mean"] = r.objective_mean;
          d["objective_std"] = r.objective_std;
          out.append(d);
        }
        return out;
      },
      py::arg("dir"));

  py::class_<V2xEnv>(m, "Env")
      .def(py::init([](int n, std::int64_t horizon, const std::string& access, const std::string& radio,
                       double bits, std::optional<std::string> config_json) {
             return V2xEnv(env_config(n, horizon, access, radio, bits, config_json));
           }),
           py::arg("n_vehicles") = 20, py::arg("horizon_slots") = 5000, py::arg("access") = "NOMA",
           py::arg("radio") = "NR", py::arg("message_bits") = 2400.0, py::arg("config_json") = py::none())
      .def("reset", &V2xEnv::reset, py::arg("seed"))
      .def("observe", [](const V2xEnv& e, int i) {
        const StateVector s = e.observe_normalized(i);
        return py::make_tuple(s[0], s[1], s[2], s[3]);
      })
      .def("apply_action", [](V2xEnv& e, int i, int rri, double power_w) { e.apply_action(i, {rri_arg(rri), power_w}); },
           py::arg("vehicle"), py::arg("rri"), py::arg("power_w"))
      .def("step", &V2xEnv::step)
      .def("close_epoch", [](V2xEnv& e, int i) -> py::object {
        const auto o = e.close_epoch(i);
        if (!o) return py::none();
        py::dict d;
        d["reward"] = o->reward;
        d["energy_j"] = o->energy_j;
        d["mean_aoi_slots"] = o->mean_aoi_slots;
        return d;
      })
      .def_property_readonly("done", &V2xEnv::done)
      .def_property_readonly("slot", [](const V2xEnv& e) { return e.world().clock_slots; })
      .def_property_readonly("p_max_w", [](const V2xEnv& e) { return e.config().p_max_w(); })
      .def_property_readonly("n_vehicles", [](const V2xEnv& e) { return e.config().scenario.n_vehicles; })
      .def("energy_total", [](const V2xEnv& e) { return e.energy().total(); })
      .def("metrics", [](const V2xEnv& e) { return metrics_dict(e.metrics()); })
      .def("event_counts", [](const V2xEnv& e) { return e.events().counts(); });

  m.def(
      "run_episode",
      [](V2xEnv& env, std::uint64_t seed, const std::function<py::tuple(int, py::tuple, int)>& policy) {
        PolicyFn fn = [&](int v, const StateVector& s, int epoch) {
          const py::tuple a = policy(v, py::make_tuple(s[0], s[1], s[2], s[3]), epoch);
          return ActionTuple{rri_arg(a[0].cast<int>()), a[1].cast<double>()};
        };
        const EpisodeSummary s = run_episode(env, seed, fn);
        py::dict d = metrics_dict(s.metrics);
        d["mean_reward"] = s.mean_reward;
        d["n_transitions"] = s.n_transitions;
        return d;
      },
      py::arg("env"), py::arg("seed"), py::arg("policy"),
      "Runs one episode; policy(vehicle, state, epoch) returns (rri_slots, power_w).");
  m.def(
      "run_random_episode",
      [](V2xEnv& env, std::uint64_t seed, std::uint64_t policy_seed) {
        const EpisodeSummary s = run_episode(env, seed, random_policy_fn(policy_seed, env.config().p_max_w()));
        py::dict d = metrics_dict(s.metrics);
        d["mean_reward"] = s.mean_reward;
        d["n_transitions"] = s.n_transitions;
        return d;
      },
      py::arg("env"), py::arg("seed"), py::arg("policy_seed") = 1);

  py::class_<MpdqnAgent>(m, "Agent")
      .def(py::init([](double p_max_w, int hidden, int batch_size, int buffer_capacity, int train_interval_slots,
                       std::uint64_t seed) {
             AgentParams p;
             p.hidden = hidden;
             p.batch_size = batch_size;
             p.buffer_capacity = buffer_capacity;
             p.train_interval_slots = train_interval_slots;
             p.seed = seed;
             return MpdqnAgent(p, p_max_w);
           }),
           py::arg("p_max_w"), py::arg("hidden") = 128, py::arg("batch_size") = 128,
           py::arg("buffer_capacity") = 2000, py::arg("train_interval_slots") = 1, py::arg("seed") = 1)
      .def("act", [](MpdqnAgent& a, std::array<double, kStateDim> s, bool explore) {
        return action_tuple(a.select_action(s, explore));
      }, py::arg("state"), py::arg("explore") = false)
      .def("q_values", [](const MpdqnAgent& a, std::array<double, kStateDim> s) {
        const Eigen::Vector3d q = a.q_values(s, a.actor_params(s));
        return std::vector<double>{q[0], q[1], q[2]};
      })
      .def("train", [](MpdqnAgent& a, V2xEnv& env, int episodes, std::uint64_t seed) {
        py::gil_scoped_release release;
        return train(env, a, episodes, seed).episode_mean_reward;
      }, py::arg("env"), py::arg("episodes"), py::arg("seed"))
      .def("evaluate", [](const MpdqnAgent& a, V2xEnv& env, int episodes, std::uint64_t seed) {
        return eval_dict(evaluate(env, a, episodes, seed));
      }, py::arg("env"), py::arg("episodes"), py::arg("seed"))
      .def_property_readonly("train_steps", &MpdqnAgent::train_steps)
      .def("save", &MpdqnAgent::save)
      .def_static("load", &MpdqnAgent::load);
}
