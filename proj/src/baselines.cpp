#include "v2x/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace v2x {

ActionTuple random_policy(Rng& rng, double p_max_w) {
  std::uniform_int_distribution<int> pick(0, 2);
  const Rri gamma = rri_from_index(pick(rng));
  return {gamma, std::uniform_real_distribution<double>(0.0, p_max_w)(rng)};
}

PolicyFn random_policy_fn(std::uint64_t seed, double p_max_w) {
  return [seed, p_max_w](int vehicle, const StateVector&, int epoch) {
    const auto key = (static_cast<std::uint64_t>(vehicle) << 32) ^ static_cast<std::uint64_t>(epoch);
    Rng rng = make_rng(seed ^ mix_seed(key), Stream::kPolicy);
    return random_policy(rng, p_max_w);
  };
}

void GaConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("ga: " + what); };
  if (population < 2) fail("population must be >= 2");
  if (generations < 0) fail("generations must be >= 0");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) fail("crossover_prob must be in [0, 1]");
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) fail("mutation_prob must be in [0, 1]");
  if (elitism < 0 || elitism > population) fail("elitism must be in [0, population]");
  if (fitness_horizon_slots < 1) fail("fitness_horizon_slots must be >= 1");
  if (fitness_episodes < 1) fail("fitness_episodes must be >= 1");
  if (epochs_per_vehicle < 1) fail("epochs_per_vehicle must be >= 1");
  if (!(power_sigma_frac >= 0.0)) fail("power_sigma_frac must be >= 0");
  if (workers < 1) fail("workers must be >= 1");
}

std::string encode_chromosome(const Chromosome& c) {
  nlohmann::json genes = nlohmann::json::array();
  for (const Gene& g : c.genes) genes.push_back({g.rri_index, g.power_w});
  return nlohmann::json{{"n_vehicles", c.n_vehicles}, {"n_epochs", c.n_epochs}, {"genes", genes}}.dump();
}

Chromosome decode_chromosome(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Chromosome c(j.at("n_vehicles").get<int>(), j.at("n_epochs").get<int>());
  const auto& genes = j.at("genes");
  if (genes.size() != c.genes.size()) throw std::invalid_argument("chromosome: gene count mismatch");
  for (std::size_t k = 0; k < c.genes.size(); ++k) {
    c.genes[k].rri_index = genes[k].at(0).get<int>();
    c.genes[k].power_w = genes[k].at(1).get<double>();
    if (c.genes[k].rri_index < 0 || c.genes[k].rri_index > 2) throw std::invalid_argument("chromosome: bad RRI index");
  }
  return c;
}

ActionTuple ga_policy_apply(const Chromosome& c, int vehicle, int epoch) {
  if (vehicle < 0 || vehicle >= c.n_vehicles) throw std::out_of_range("ga_policy_apply: vehicle out of range");
  const Gene& g = c.at(vehicle, std::clamp(epoch, 0, c.n_epochs - 1));
  return {rri_from_index(g.rri_index), g.power_w};
}

PolicyFn chromosome_policy(const Chromosome& c) {
  return [c](int vehicle, const StateVector&, int epoch) { return ga_policy_apply(c, vehicle, epoch); };
}

namespace {

Chromosome random_chromosome(int n_vehicles, int n_epochs, double p_max_w, Rng& rng) {
  Chromosome c(n_vehicles, n_epochs);
  for (Gene& g : c.genes) {
    const ActionTuple a = random_policy(rng, p_max_w);
    g = {rri_to_index(a.gamma), a.power_w};
  }
  return c;
}

std::vector<double> evaluate_all(const FitnessFn& fitness, const std::vector<Chromosome>& pop,
                                 const std::vector<bool>& need, std::vector<double> values, int workers) {
  auto run = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < pop.size(); k += stride)
      if (need[k]) values[k] = fitness(pop[k]);
  };
  if (workers <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run, static_cast<std::size_t>(w), static_cast<std::size_t>(workers));
    for (auto& t : threads) t.join();
  }
  for (double v : values)
    if (!std::isfinite(v)) throw std::runtime_error("ga: non-finite fitness");
  return values;
}

}  // namespace

GaResult ga_optimize(const FitnessFn& fitness, int n_vehicles, double p_max_w, const GaConfig& config,
                     const std::vector<Chromosome>& initial) {
  config.validate();
  if (n_vehicles < 1) throw std::invalid_argument("ga: n_vehicles must be >= 1");
  Rng rng = make_rng(config.seed, Stream::kGa);
  const auto pop_size = static_cast<std::size_t>(config.population);
  const int n_epochs = initial.empty() ? config.epochs_per_vehicle : initial.front().n_epochs;

  std::vector<Chromosome> pop;
  for (std::size_t k = 0; k < pop_size; ++k)
    pop.push_back(k < initial.size() ? initial[k] : random_chromosome(n_vehicles, n_epochs, p_max_w, rng));
  std::vector<double> fit =
      evaluate_all(fitness, pop, std::vector<bool>(pop_size, true), std::vector<double>(pop_size, 0.0), config.workers);

  GaResult result;
  auto record = [&](int gen) {
    const auto best = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
    double mean = 0.0;
    for (double f : fit) mean += f / static_cast<double>(fit.size());
    result.history.push_back({gen, fit[best], mean});
    result.best = pop[best];
    result.best_fitness = fit[best];
  };
  record(0);

  std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, config.power_sigma_frac * p_max_w);
  std::uniform_int_distribution<int> rri_pick(0, 2);
  auto tournament = [&]() -> std::size_t {
    std::size_t best = pick(rng);
    for (int r = 1; r < 3; ++r) {
      const std::size_t c = pick(rng);
      if (fit[c] > fit[best]) best = c;
    }
    return best;
  };

  for (int gen = 1; gen <= config.generations; ++gen) {
    std::vector<std::size_t> order(pop_size);
    for (std::size_t k = 0; k < pop_size; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });

    std::vector<Chromosome> next;
    std::vector<double> next_fit(pop_size, 0.0);
    std::vector<bool> need(pop_size, true);
    for (int e = 0; e < config.elitism; ++e) {
      next.push_back(pop[order[static_cast<std::size_t>(e)]]);
      next_fit[next.size() - 1] = fit[order[static_cast<std::size_t>(e)]];
      need[next.size() - 1] = false;
    }
    while (next.size() < pop_size) {
      Chromosome a = pop[tournament()];
      Chromosome b = pop[tournament()];
      if (u(rng) < config.crossover_prob) {
        for (std::size_t g = 0; g < a.genes.size(); ++g)
          if (u(rng) < 0.5) std::swap(a.genes[g], b.genes[g]);
      }
      for (Chromosome* c : {&a, &b}) {
        if (next.size() >= pop_size) break;
        for (Gene& g : c->genes) {
          if (u(rng) < config.mutation_prob) g.rri_index = rri_pick(rng);
          if (u(rng) < config.mutation_prob) g.power_w = std::clamp(g.power_w + gauss(rng), 0.0, p_max_w);
        }
        next.push_back(std::move(*c));
      }
    }
    pop = std::move(next);
    fit = evaluate_all(fitness, pop, need, next_fit, config.workers);
    record(gen);
  }
  return result;
}

constexpr int kFitnessWarmupEpisodes = 3;

FitnessFn env_fitness(const EnvConfig& env_config, std::int64_t horizon_slots, std::uint64_t eval_seed,
                      int episodes) {
  if (episodes < 1) throw std::invalid_argument("ga: fitness episodes must be >= 1");
  EnvConfig cfg = env_config;
  cfg.scenario.horizon_slots = horizon_slots;
  cfg.validate();
  // Warm the reward statistics with random play so that every chromosome is
  // scored against the same starting bounds.
  V2xEnv warm(cfg);
  for (int k = 0; k < kFitnessWarmupEpisodes; ++k)
    run_episode(warm, mix_seed(eval_seed ^ mix_seed(0xa11 + k)),
                random_policy_fn(mix_seed(eval_seed + k), cfg.p_max_w()));
  const RewardNormalizer base = warm.normalizer();
  return [cfg, eval_seed, base, episodes](const Chromosome& c) {
    const PolicyFn policy = chromosome_policy(c);
    double total = 0.0;
    for (int k = 0; k < episodes; ++k) {
      V2xEnv env(cfg);
      env.set_normalizer(base);
      total += run_episode(env, k == 0 ? eval_seed : mix_seed(eval_seed ^ mix_seed(0xf17 + k)), policy).mean_reward;
    }
    return total / episodes;
  };
}

void write_ga_progress_csv(std::ostream& out, const std::vector<GaGeneration>& history) {
  out << "generation,best_fitness,mean_fitness\n";
  out.precision(10);
  for (const auto& g : history) out << g.generation << ',' << g.best_fitness << ',' << g.mean_fitness << '\n';
}

}  // namespace v2x
