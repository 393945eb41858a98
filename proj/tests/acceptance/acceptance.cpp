// Acceptance suite. Usage: acceptance [criterion ...]; no arguments runs all.
// Prints one PASS/FAIL line per criterion and exits non-zero if any failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "v2x/baselines.hpp"
#include "v2x/experiment.hpp"
#include "v2x/mpdqn.hpp"

using namespace v2x;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

// Desk-scale configuration shared by the trend and policy criteria.
ExperimentConfig desk() {
  ExperimentConfig c;
  c.env.scenario.horizon_slots = 5000;
  c.eval_episodes = 1;
  return c;
}

double random_aoi(const ExperimentConfig& c, int n, double g, AccessMode access, RadioMode radio, std::uint64_t seed) {
  SweepPoint p;
  p.n_vehicles = n;
  p.message_size_bits = g;
  p.access = access;
  p.radio = radio;
  p.policy = PolicyKind::kRandom;
  return run_point(c, p, seed, nullptr, nullptr).avg_aoi_slots;
}

std::vector<double> random_aoi_seeds(int n, double g, AccessMode access, RadioMode radio) {
  const ExperimentConfig c = desk();
  std::vector<double> out;
  for (auto s : kSeeds) out.push_back(random_aoi(c, n, g, access, radio, s));
  return out;
}

Outcome c1_rc0() {
  bool ok = rc0_of(20) == 50 && rc0_of(50) == 20 && rc0_of(100) == 10;
  for (int g = 1; g <= 19; ++g) ok = ok && rc0_of(g) == 50;
  return {ok, "rc0(20,50,100) = (" + std::to_string(rc0_of(20)) + "," + std::to_string(rc0_of(50)) + "," +
                  std::to_string(rc0_of(100)) + "), rc0(1..19) = 50"};
}

Outcome c2_sps_oracle() {
  std::mt19937_64 rng(2024);
  const double thresholds[] = {-115.0, -105.0, -95.0};
  int mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    const auto inst = oracle::random_instance(rng);
    const auto grid = oracle::to_grid(inst, 1, 4);
    const double th = thresholds[k % 3];
    if (exclude_candidates(grid, 1, inst.candidates, th, inst.now) != oracle::exclude(inst, th)) ++mismatches;
  }
  return {mismatches == 0, fmt("%d of 200 instances differ from the sensing-log replay", mismatches)};
}

Outcome c3_sic() {
  Rng rng(3);
  const ChannelParams ch;
  const double bw = ch.bandwidth_hz / SpsParams{}.n_subchannels;
  const double noise = noise_power_w(bw, ch.noise_figure_db);
  const auto decodes = [&](double sinr) { return success_indicator(bw, sinr, 2400.0, 1e-3) >= 1; };
  std::uniform_int_distribution<int> count(2, 6), sub(0, 2);
  std::uniform_real_distribution<double> db(-10.0, 30.0);
  int violations = 0, strict = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    std::vector<CoSlotSignal> s;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) s.push_back({k, noise * db_to_linear(db(rng)), sub(rng)});
    const auto sic = sic_decode(s, noise, ch.adjacent_leakage(), decodes).sinr;
    const auto oma = oma_decode(s, noise, ch.adjacent_leakage());
    bool better = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (sic[k] < oma[k]) ++violations;
      if (sic[k] > oma[k]) better = true;
    }
    strict += better;
  }
  return {violations == 0 && strict >= 1,
          fmt("%d violations of SIC >= OMA, strict gain in %d of 1000 instances", violations, strict)};
}

Outcome c4_gradients() {
  Rng rng(4);
  const double p_max = dbm_to_w(23.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> k_pick(0, 2);
  std::normal_distribution<double> jitter(0.0, 0.05);
  double worst_q = 0.0, worst_x = 0.0;
  for (int point = 0; point < 10; ++point) {
    Mlp q(kQInputDim, 64, kNumRri, rng);
    Mlp a(kStateDim, 64, kNumRri, rng);
    for (auto* m : {&q, &a})
      for (Eigen::Index i = 0; i < m->parameters().size(); ++i) m->parameters()[i] += jitter(rng);
    std::vector<QSample> batch;
    std::vector<StateVector> states;
    for (int b = 0; b < 16; ++b) {
      batch.push_back({{u(rng), u(rng), u(rng), u(rng)}, k_pick(rng), u(rng) * p_max, -u(rng)});
      states.push_back({u(rng), u(rng), u(rng), u(rng)});
    }
    const Eigen::VectorXd gq = loss_q(q, batch, p_max).grad;
    worst_q = std::max(worst_q, oracle::max_relative_fd_error([&] { return loss_q(q, batch, p_max).loss; },
                                                              q.parameters(), gq));
    const Eigen::VectorXd gx = loss_actor(a, q, states, p_max).grad;
    worst_x = std::max(worst_x, oracle::max_relative_fd_error([&] { return loss_actor(a, q, states, p_max).loss; },
                                                              a.parameters(), gx));
  }
  return {worst_q <= 1e-4 && worst_x <= 1e-4,
          fmt("max relative error Q %.2e, actor %.2e (hidden 64, 10 points)", worst_q, worst_x)};
}

Outcome c5_multipass() {
  Rng rng(5);
  const double p_max = dbm_to_w(23.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double leak = 0.0, own_min = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    Mlp q(kQInputDim, 64, kNumRri, rng);
    const StateVector s{u(rng), u(rng), u(rng), u(rng)};
    const ParamVector x{u(rng) * p_max, u(rng) * p_max, u(rng) * p_max};
    const Eigen::Vector3d base = q_multipass(q, s, x, p_max);
    for (int j = 0; j < kNumRri; ++j) {
      ParamVector y = x;
      y[j] += 0.25 * p_max;
      const Eigen::Vector3d moved = q_multipass(q, s, y, p_max);
      for (int k = 0; k < kNumRri; ++k) {
        const double d = std::fabs(moved[k] - base[k]);
        if (k == j) own_min = std::min(own_min, d);
        else leak = std::max(leak, d);
      }
    }
  }
  return {leak <= 1e-10, fmt("max cross-pass change %.1e, min own-pass change %.2e", leak, own_min)};
}

Outcome c6_density() {
  bool ok = true;
  std::string detail;
  for (AccessMode a : {AccessMode::kOma, AccessMode::kNoma}) {
    const double m20 = mean(random_aoi_seeds(20, 2400, a, RadioMode::kNrMode2));
    const double m40 = mean(random_aoi_seeds(40, 2400, a, RadioMode::kNrMode2));
    ok = ok && m20 < m40;
    detail += fmt("%s N20 %.2f < N40 %.2f; ", to_string(a).c_str(), m20, m40);
  }
  return {ok, detail};
}

Outcome c7_noma() {
  bool ok = true;
  std::string detail;
  for (int n : {20, 40}) {
    const auto oma = random_aoi_seeds(n, 2400, AccessMode::kOma, RadioMode::kNrMode2);
    const auto noma = random_aoi_seeds(n, 2400, AccessMode::kNoma, RadioMode::kNrMode2);
    std::vector<double> diff;
    for (std::size_t k = 0; k < oma.size(); ++k) diff.push_back(noma[k] - oma[k]);
    const double md = median(diff);
    ok = ok && md <= 0.0 && mean(noma) <= mean(oma);
    detail += fmt("N%d NOMA %.2f vs OMA %.2f, median paired diff %.3f; ", n, mean(noma), mean(oma), md);
  }
  return {ok, detail};
}

Outcome c8_nr_lte() {
  bool ok = true;
  std::string detail;
  for (int n : {20, 40}) {
    const auto nr = random_aoi_seeds(n, 2400, AccessMode::kNoma, RadioMode::kNrMode2);
    const auto lte = random_aoi_seeds(n, 2400, AccessMode::kNoma, RadioMode::kLteMode4);
    std::vector<double> diff;
    for (std::size_t k = 0; k < nr.size(); ++k) diff.push_back(nr[k] - lte[k]);
    ok = ok && mean(nr) <= mean(lte);
    detail += fmt("N%d NR %.2f vs LTE %.2f, median paired diff %.3f; ", n, mean(nr), mean(lte), median(diff));
  }
  return {ok, detail};
}

Outcome c9_learning() {
  int improved = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    EnvConfig env;
    env.scenario.n_vehicles = 5;
    env.scenario.horizon_slots = 2000;
    V2xEnv e(env);
    AgentParams p;
    p.train_interval_slots = 10;
    p.seed = seed;
    MpdqnAgent agent(p, env.p_max_w());
    const TrainResult r = train(e, agent, 300, seed);
    const auto& rw = r.episode_mean_reward;
    const double first = median({rw.begin(), rw.begin() + 30});
    const double last = median({rw.end() - 30, rw.end()});
    improved += last > first;
    detail += fmt("%s%.3f->%.3f", detail.empty() ? "" : " ", first, last);
  }
  return {improved >= 8, fmt("%d/10 seeds improved (first vs last 10%% medians: ", improved) + detail + ")"};
}

Outcome c10_policies() {
  ExperimentConfig c = desk();
  c.eval_episodes = 3;
  c.train_episodes = 300;
  c.train_horizon_slots = 2000;
  c.agent.train_interval_slots = 10;
  std::map<PolicyKind, std::vector<double>> obj;
  for (PolicyKind k : {PolicyKind::kRandom, PolicyKind::kGa, PolicyKind::kMpdqn})
    for (auto seed : kSeeds) {
      SweepPoint p;
      p.n_vehicles = 20;
      p.policy = k;
      obj[k].push_back(run_point(c, p, seed, nullptr, nullptr).objective);
    }
  const double r = median(obj[PolicyKind::kRandom]);
  const double g = median(obj[PolicyKind::kGa]);
  const double m = median(obj[PolicyKind::kMpdqn]);
  return {m < r && g < r, fmt("median objective MPDQN %.4f, GA %.4f, random %.4f (MPDQN %s GA, not gated)", m, g, r,
                               m < g ? "<" : ">=")};
}

Outcome c11_message_size() {
  const double small = mean(random_aoi_seeds(20, 1000, AccessMode::kNoma, RadioMode::kNrMode2));
  const double large = mean(random_aoi_seeds(20, 8000, AccessMode::kNoma, RadioMode::kNrMode2));
  return {small < large, fmt("G=1000 %.2f < G=8000 %.2f", small, large)};
}

Outcome c12_energy() {
  double worst = 0.0;
  int runs = 0;
  for (RadioMode radio : {RadioMode::kNrMode2, RadioMode::kLteMode4}) {
    EnvConfig cfg;
    cfg.scenario.n_vehicles = 20;
    cfg.scenario.horizon_slots = 5000;
    cfg.sps.mode = radio;
    V2xEnv env(cfg);
    std::stringstream trace;
    env.attach_trace(&trace);
    run_episode(env, 12 + runs, random_policy_fn(99 + runs, cfg.p_max_w()));
    // Replay the log: a select sets the vehicle's power and charges one
    // lifetime, a keep charges another lifetime at the same power.
    const std::map<int, int> rc0{{20, 50}, {50, 20}, {100, 10}};
    std::map<int, std::pair<double, int>> held;
    double sum = 0.0;
    std::string line;
    while (std::getline(trace, line)) {
      const auto j = nlohmann::json::parse(line);
      const std::string ev = j.at("event");
      if (ev == "select") {
        const int v = j.at("vehicle");
        held[v] = {j.at("power_w").get<double>(), rc0.at(j.at("rri").get<int>())};
        sum += held[v].first * 1e-3 * held[v].second;
      } else if (ev == "keep") {
        const auto& h = held.at(j.at("vehicle").get<int>());
        sum += h.first * 1e-3 * h.second;
      }
    }
    worst = std::max(worst, std::fabs(env.energy().total() - sum) / sum);
    ++runs;
  }
  return {worst <= 1e-12, fmt("max relative gap between ledger and log replay %.1e over %d runs", worst, runs)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome c13_determinism() {
  const fs::path root = fs::temp_directory_path() / "v2x_acceptance_determinism";
  fs::remove_all(root);
  ExperimentConfig c;
  c.env.scenario.horizon_slots = 1000;
  c.eval_episodes = 1;
  c.train_episodes = 3;
  c.agent.train_interval_slots = 10;
  c.ga.population = 6;
  c.ga.generations = 2;
  c.ga.fitness_horizon_slots = 500;
  c.sweep.n_vehicles = {8};
  c.sweep.access = {AccessMode::kOma, AccessMode::kNoma};
  c.sweep.radio = {RadioMode::kNrMode2, RadioMode::kLteMode4};
  c.sweep.policy = {PolicyKind::kRandom, PolicyKind::kGa, PolicyKind::kMpdqn};
  c.seeds = {1, 2};
  RunOptions first;
  first.out_dir = (root / "a").string();
  first.jobs = 2;
  run_experiment(c, first);
  RunOptions second;
  second.out_dir = (root / "b").string();
  run_experiment(load_config((root / "a" / "manifest.json").string()), second);
  const std::string a = slurp(root / "a" / "results.csv");
  const bool same = !a.empty() && a == slurp(root / "b" / "results.csv");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  fs::remove_all(root);
  return {same, fmt("results.csv (%ld lines) %s after manifest rerun", static_cast<long>(lines),
                    same ? "byte-identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  set_warnings_enabled(false);
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"RC0 exactness", c1_rc0}},
      {2, {"SPS oracle equivalence", c2_sps_oracle}},
      {3, {"SIC dominance", c3_sic}},
      {4, {"gradient checks", c4_gradients}},
      {5, {"multi-pass isolation", c5_multipass}},
      {6, {"AoI grows with density", c6_density}},
      {7, {"NOMA improvement", c7_noma}},
      {8, {"NR vs LTE", c8_nr_lte}},
      {9, {"learning progress", c9_learning}},
      {10, {"policy ordering", c10_policies}},
      {11, {"message-size trend", c11_message_size}},
      {12, {"energy exactness", c12_energy}},
      {13, {"determinism", c13_determinism}},
  };
  std::vector<int> selected;
  for (int k = 1; k < argc; ++k) selected.push_back(std::stoi(argv[k]));
  if (selected.empty())
    for (const auto& [id, _] : criteria) selected.push_back(id);

  int failed = 0;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    while (!o.detail.empty() && (o.detail.back() == ' ' || o.detail.back() == ';')) o.detail.pop_back();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << it->second.first << ", "
              << fmt("%.1f s", secs) << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
