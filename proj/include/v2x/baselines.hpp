#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "v2x/env.hpp"

namespace v2x {

/// Γ uniform over the three RRIs, power uniform over [0, P_max].
ActionTuple random_policy(Rng& rng, double p_max_w);

/// Random policy whose draw for (vehicle, epoch) depends only on the seed, so
/// paired runs under different radio settings see the same action sequence.
PolicyFn random_policy_fn(std::uint64_t seed, double p_max_w);

struct GaConfig {
  int population = 40;
  int generations = 60;
  double crossover_prob = 0.9;
  double mutation_prob = 0.1;
  int elitism = 2;
  std::int64_t fitness_horizon_slots = 2000;
  int fitness_episodes = 1;  // evaluation episodes averaged per fitness call
  int epochs_per_vehicle = 1;  // genes per vehicle; later epochs reuse the last
  double power_sigma_frac = 0.1;  // mutation std as a fraction of P_max
  int workers = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Gene {
  int rri_index = 2;
  double power_w = 0.0;

  bool operator==(const Gene&) const = default;
};

struct Chromosome {
  int n_vehicles = 0;
  int n_epochs = 0;
  std::vector<Gene> genes;  // vehicle-major

  Chromosome() = default;
  Chromosome(int vehicles, int epochs)
      : n_vehicles(vehicles), n_epochs(epochs), genes(static_cast<std::size_t>(vehicles) * epochs) {}

  Gene& at(int vehicle, int epoch) { return genes[static_cast<std::size_t>(vehicle) * n_epochs + epoch]; }
  const Gene& at(int vehicle, int epoch) const {
    return genes[static_cast<std::size_t>(vehicle) * n_epochs + epoch];
  }
  bool operator==(const Chromosome&) const = default;
};

std::string encode_chromosome(const Chromosome& c);
Chromosome decode_chromosome(const std::string& text);

/// Epochs beyond the chromosome reuse the vehicle's last gene.
ActionTuple ga_policy_apply(const Chromosome& c, int vehicle, int epoch);

using FitnessFn = std::function<double(const Chromosome&)>;

struct GaGeneration {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
};

struct GaResult {
  Chromosome best;
  double best_fitness = 0.0;
  std::vector<GaGeneration> history;
};

/// Maximizes `fitness`. `initial` seeds the first generation (random
/// chromosomes fill any remaining slots).
GaResult ga_optimize(const FitnessFn& fitness, int n_vehicles, double p_max_w, const GaConfig& config,
                     const std::vector<Chromosome>& initial = {});

/// Mean episode reward of the chromosome's lookup policy over `episodes`
/// fixed evaluation episodes derived from `eval_seed`, each on a fresh
/// environment with the given horizon.
FitnessFn env_fitness(const EnvConfig& env_config, std::int64_t horizon_slots, std::uint64_t eval_seed,
                      int episodes = 1);

PolicyFn chromosome_policy(const Chromosome& c);

void write_ga_progress_csv(std::ostream& out, const std::vector<GaGeneration>& history);

}  // namespace v2x
