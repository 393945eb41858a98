#include "v2x/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "v2x/baselines.hpp"
#include "v2x/mpdqn.hpp"

namespace v2x {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

struct EvalTotals {
  double aoi = 0.0, energy = 0.0, objective = 0.0, reward = 0.0;
};

/// Evaluation episodes share seeds across sweep points with the same seed,
/// so OMA/NOMA and NR/LTE points are paired.
template <typename MakePolicy>
EvalTotals evaluate_points(const EnvConfig& cfg, int episodes, std::uint64_t seed, MakePolicy make_policy) {
  V2xEnv env(cfg);
  EvalTotals t;
  for (int ep = 0; ep < episodes; ++ep) {
    const std::uint64_t es = episode_seed(seed, ep);
    const EpisodeSummary s = run_episode(env, es, make_policy(es));
    t.aoi += s.metrics.avg_aoi_slots / episodes;
    t.energy += s.metrics.avg_energy_j / episodes;
    t.objective += s.metrics.objective / episodes;
    t.reward += s.mean_reward / episodes;
  }
  return t;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::uint64_t eval_seed_for(std::uint64_t seed) { return mix_seed(seed ^ 0xe7a1'0000'0000ULL); }

ResultRecord run_point(const ExperimentConfig& c, const SweepPoint& p, std::uint64_t seed,
                       std::vector<CurveRow>* curve, std::vector<CurveRow>* ga_progress,
                       const std::string& checkpoint_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const EnvConfig cfg = env_for(c, p);
  cfg.validate();
  const std::uint64_t eval_seed = eval_seed_for(seed);
  ResultRecord r;
  r.point = p;
  r.seed = seed;
  EvalTotals t;

  switch (p.policy) {
    case PolicyKind::kRandom: {
      const double p_max = cfg.p_max_w();
      t = evaluate_points(cfg, c.eval_episodes, eval_seed,
                          [&](std::uint64_t es) { return random_policy_fn(es, p_max); });
      break;
    }
    case PolicyKind::kGa: {
      GaConfig ga = c.ga;
      ga.seed = seed;
      const FitnessFn fitness = env_fitness(cfg, ga.fitness_horizon_slots, mix_seed(seed ^ 0x6a00ULL), ga.fitness_episodes);
      const GaResult best = ga_optimize(fitness, p.n_vehicles, cfg.p_max_w(), ga);
      if (ga_progress != nullptr)
        for (const auto& g : best.history) ga_progress->push_back({p.index, seed, g.generation, g.best_fitness});
      const PolicyFn policy = chromosome_policy(best.best);
      t = evaluate_points(cfg, c.eval_episodes, eval_seed, [&](std::uint64_t) { return policy; });
      break;
    }
    case PolicyKind::kMpdqn: {
      EnvConfig train_cfg = cfg;
      if (c.train_horizon_slots > 0) train_cfg.scenario.horizon_slots = c.train_horizon_slots;
      V2xEnv train_env(train_cfg);
      AgentParams ap = c.agent;
      ap.seed = seed;
      MpdqnAgent agent(ap, cfg.p_max_w());
      agent.attach_events(&train_env.events());
      const TrainResult tr = train(train_env, agent, c.train_episodes, seed);
      if (curve != nullptr)
        for (std::size_t ep = 0; ep < tr.episode_mean_reward.size(); ++ep)
          curve->push_back({p.index, seed, static_cast<int>(ep), tr.episode_mean_reward[ep]});
      if (!checkpoint_path.empty()) agent.save(checkpoint_path);
      const PolicyFn policy = [&agent](int, const StateVector& s, int) { return agent.greedy_action(s); };
      t = evaluate_points(cfg, c.eval_episodes, eval_seed, [&](std::uint64_t) { return policy; });
      break;
    }
  }
  r.avg_aoi_slots = t.aoi;
  r.avg_energy_j = t.energy;
  r.objective = t.objective;
  r.mean_reward = t.reward;
  for (double v : {r.avg_aoi_slots, r.avg_energy_j, r.objective, r.mean_reward})
    if (!std::isfinite(v)) throw std::runtime_error("non-finite metric");
  r.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string results_csv_header() {
  return "point_id,n_vehicles,message_size_bits,access,radio,policy,seed,status,avg_aoi_slots,avg_energy_j,"
         "objective,mean_reward";
}

std::string format_record(const ResultRecord& r) {
  std::ostringstream s;
  s << r.point.id() << ',' << r.point.n_vehicles << ',' << num(r.point.message_size_bits) << ','
    << to_string(r.point.access) << ',' << to_string(r.point.radio) << ',' << to_string(r.point.policy) << ','
    << r.seed << ',' << sanitize(r.status) << ',';
  if (r.status == "ok") {
    s << num(r.avg_aoi_slots) << ',' << num(r.avg_energy_j) << ',' << num(r.objective) << ',' << num(r.mean_reward);
  } else {
    s << ",,,";
  }
  return s.str();
}

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunOutput run_experiment(ExperimentConfig c, const RunOptions& options) {
  if (options.seed_override) c.seeds = {*options.seed_override};
  if (options.out_dir) c.output_dir = *options.out_dir;
  const auto points = expand_sweep(c.sweep);
  const fs::path out_dir(c.output_dir);
  fs::create_directories(out_dir);
  if (options.save_checkpoints && std::find(c.sweep.policy.begin(), c.sweep.policy.end(), PolicyKind::kMpdqn) !=
                                      c.sweep.policy.end())
    fs::create_directories(out_dir / "checkpoints");

  struct Task {
    SweepPoint point;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& p : points)
    for (auto s : c.seeds) tasks.push_back({p, s});

  std::vector<ResultRecord> records(tasks.size());
  std::vector<std::vector<CurveRow>> curves(tasks.size()), progress(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& task = tasks[k];
      std::string ckpt;
      if (options.save_checkpoints && task.point.policy == PolicyKind::kMpdqn)
        ckpt = (out_dir / "checkpoints" / (task.point.id() + "_s" + std::to_string(task.seed) + ".json")).string();
      try {
        records[k] = run_point(c, task.point, task.seed, &curves[k], &progress[k], ckpt);
      } catch (const std::exception& e) {
        records[k] = ResultRecord{};
        records[k].point = task.point;
        records[k].seed = task.seed;
        records[k].status = std::string("error: ") + e.what();
        curves[k].clear();
        progress[k].clear();
      }
      if (options.on_record) {
        std::lock_guard<std::mutex> lock(report_mu);
        options.on_record(records[k]);
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  RunOutput out;
  std::string results = results_csv_header() + "\n";
  std::string timings = "point_id,seed,wallclock_s\n";
  std::string lc = "point_id,seed,episode,mean_reward\n";
  std::string gp = "point_id,seed,generation,best_fitness\n";
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& r = records[k];
    if (r.status != "ok") ++out.n_failed;
    results += format_record(r) + "\n";
    timings += r.point.id() + "," + std::to_string(r.seed) + "," + num(r.wallclock_s) + "\n";
    for (const auto& row : curves[k])
      lc += points[static_cast<std::size_t>(row.point_index)].id() + "," + std::to_string(row.seed) + "," +
            std::to_string(row.episode) + "," + num(row.mean_reward) + "\n";
    for (const auto& row : progress[k])
      gp += points[static_cast<std::size_t>(row.point_index)].id() + "," + std::to_string(row.seed) + "," +
            std::to_string(row.episode) + "," + num(row.mean_reward) + "\n";
    out.learning_curves.insert(out.learning_curves.end(), curves[k].begin(), curves[k].end());
    out.ga_progress.insert(out.ga_progress.end(), progress[k].begin(), progress[k].end());
  }
  write_file(out_dir / "results.csv", results);
  write_file(out_dir / "timings.csv", timings);
  write_file(out_dir / "learning_curves.csv", lc);
  write_file(out_dir / "ga_progress.csv", gp);

  nlohmann::json manifest;
  manifest["format"] = "v2x-manifest";
  manifest["version"] = 1;
  manifest["software"] = {{"name", "v2xsim"}, {"version", kVersion}};
  manifest["config_hash"] = config_hash(c);
  manifest["config"] = config_to_json(c);
  manifest["seeds"] = c.seeds;
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& p : points) ids.push_back(p.id());
  manifest["points"] = ids;
  manifest["n_records"] = records.size();
  manifest["n_failed"] = out.n_failed;
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  out.records = std::move(records);
  return out;
}

std::vector<ResultRecord> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw CsvError(path + ":1: empty file");
  ++line_no;
  if (line != results_csv_header()) throw CsvError(path + ":1: unexpected header");
  std::vector<ResultRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    auto fail = [&](const std::string& why) { throw CsvError(path + ":" + std::to_string(line_no) + ": " + why); };
    if (f.size() != 12) fail("expected 12 fields, found " + std::to_string(f.size()));
    auto number = [&](const std::string& s, const char* what) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        fail(std::string("bad number in ") + what);
      }
      if (used != s.size()) fail(std::string("bad number in ") + what);
      return v;
    };
    ResultRecord r;
    r.point.n_vehicles = static_cast<int>(number(f[1], "n_vehicles"));
    r.point.message_size_bits = number(f[2], "message_size_bits");
    if (f[3] == "OMA") r.point.access = AccessMode::kOma;
    else if (f[3] == "NOMA") r.point.access = AccessMode::kNoma;
    else fail("bad access mode");
    if (f[4] == "NR") r.point.radio = RadioMode::kNrMode2;
    else if (f[4] == "LTE") r.point.radio = RadioMode::kLteMode4;
    else fail("bad radio mode");
    if (f[5] == "MPDQN") r.point.policy = PolicyKind::kMpdqn;
    else if (f[5] == "GA") r.point.policy = PolicyKind::kGa;
    else if (f[5] == "RANDOM") r.point.policy = PolicyKind::kRandom;
    else fail("bad policy");
    r.seed = static_cast<std::uint64_t>(number(f[6], "seed"));
    r.status = f[7];
    if (r.status == "ok") {
      r.avg_aoi_slots = number(f[8], "avg_aoi_slots");
      r.avg_energy_j = number(f[9], "avg_energy_j");
      r.objective = number(f[10], "objective");
      r.mean_reward = number(f[11], "mean_reward");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<SummaryRow> summarize_records(const std::vector<ResultRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) {
    if (r.status != "ok") continue;
    const std::string key = r.point.id();
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  auto stats = [](const std::vector<double>& v, double& mean, double& std) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  };
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    SummaryRow row;
    const SweepPoint& p = g.front()->point;
    row.n_vehicles = p.n_vehicles;
    row.message_size_bits = p.message_size_bits;
    row.access = to_string(p.access);
    row.radio = to_string(p.radio);
    row.policy = to_string(p.policy);
    row.n_seeds = static_cast<int>(g.size());
    std::vector<double> a, e, o, w;
    for (const auto* r : g) {
      a.push_back(r->avg_aoi_slots);
      e.push_back(r->avg_energy_j);
      o.push_back(r->objective);
      w.push_back(r->mean_reward);
    }
    stats(a, row.aoi_mean, row.aoi_std);
    stats(e, row.energy_mean, row.energy_std);
    stats(o, row.objective_mean, row.objective_std);
    stats(w, row.reward_mean, row.reward_std);
    out.push_back(row);
  }
  return out;
}

std::vector<SummaryRow> summarize_dir(const std::string& dir) {
  const auto rows = summarize_records(read_results_csv((fs::path(dir) / "results.csv").string()));
  std::string text =
      "n_vehicles,message_size_bits,access,radio,policy,n_seeds,avg_aoi_slots_mean,avg_aoi_slots_std,"
      "avg_energy_j_mean,avg_energy_j_std,objective_mean,objective_std,mean_reward_mean,mean_reward_std\n";
  for (const auto& r : rows) {
    text += std::to_string(r.n_vehicles) + "," + num(r.message_size_bits) + "," + r.access + "," + r.radio + "," +
            r.policy + "," + std::to_string(r.n_seeds) + "," + num(r.aoi_mean) + "," + num(r.aoi_std) + "," +
            num(r.energy_mean) + "," + num(r.energy_std) + "," + num(r.objective_mean) + "," +
            num(r.objective_std) + "," + num(r.reward_mean) + "," + num(r.reward_std) + "\n";
  }
  write_file(fs::path(dir) / "summary.csv", text);
  return rows;
}

}  // namespace v2x
