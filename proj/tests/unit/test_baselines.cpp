#include <cmath>
#include <map>

#include "doctest.h"
#include "v2x/baselines.hpp"

using namespace v2x;

namespace {

constexpr double kPmax = 0.19952623149688797;

}  // namespace

TEST_CASE("random policy") {
  Rng rng(1);
  std::map<Rri, int> counts;
  const int n = 30000;
  double power_sum = 0.0;
  for (int t = 0; t < n; ++t) {
    const ActionTuple a = random_policy(rng, kPmax);
    ++counts[a.gamma];
    CHECK(a.power_w >= 0.0);
    CHECK(a.power_w <= kPmax);
    power_sum += a.power_w;
  }
  for (Rri r : {Rri::k20, Rri::k50, Rri::k100})
    CHECK(std::fabs(counts[r] / static_cast<double>(n) - 1.0 / 3) <= 0.03);
  CHECK(power_sum / n == doctest::Approx(kPmax / 2).epsilon(0.02));

  Rng a(5), b(5);
  for (int t = 0; t < 100; ++t) {
    const ActionTuple x = random_policy(a, kPmax), y = random_policy(b, kPmax);
    CHECK(x.gamma == y.gamma);
    CHECK(x.power_w == y.power_w);
  }
}

TEST_CASE("seeded random policy depends only on seed, vehicle and epoch") {
  const PolicyFn p = random_policy_fn(42, kPmax);
  const PolicyFn q = random_policy_fn(42, kPmax);
  const StateVector s0{}, s1{1, 1, 1, 1};
  for (int v = 0; v < 5; ++v)
    for (int e = 0; e < 5; ++e) {
      const ActionTuple a = p(v, s0, e), b = q(v, s1, e);
      CHECK(a.gamma == b.gamma);
      CHECK(a.power_w == b.power_w);
    }
  const PolicyFn other = random_policy_fn(43, kPmax);
  int same = 0;
  for (int e = 0; e < 50; ++e) same += p(0, s0, e).power_w == other(0, s0, e).power_w;
  CHECK(same == 0);
}

TEST_CASE("chromosome encoding round trip") {
  Chromosome c(3, 4);
  Rng rng(2);
  for (Gene& g : c.genes) {
    const ActionTuple a = random_policy(rng, kPmax);
    g = {rri_to_index(a.gamma), a.power_w};
  }
  CHECK(decode_chromosome(encode_chromosome(c)) == c);
  CHECK_THROWS(decode_chromosome("{\"n_vehicles\":1,\"n_epochs\":1,\"genes\":[[5,0.1]]}"));
  CHECK_THROWS(decode_chromosome("{\"n_vehicles\":1,\"n_epochs\":2,\"genes\":[[0,0.1]]}"));
}

TEST_CASE("epochs past the chromosome reuse the last gene") {
  Chromosome c(2, 3);
  c.at(1, 0) = {0, 0.01};
  c.at(1, 2) = {1, 0.07};
  const ActionTuple late = ga_policy_apply(c, 1, 40);
  CHECK(late.gamma == Rri::k50);
  CHECK(late.power_w == 0.07);
  CHECK(ga_policy_apply(c, 1, 0).gamma == Rri::k20);
  CHECK_THROWS_AS(ga_policy_apply(c, 2, 0), std::out_of_range);
}

TEST_CASE("a population of identical chromosomes without mutation stays put") {
  Chromosome c(2, 3);
  for (Gene& g : c.genes) g = {1, 0.05};
  GaConfig cfg;
  cfg.population = 8;
  cfg.generations = 5;
  cfg.mutation_prob = 0.0;
  cfg.epochs_per_vehicle = 3;
  int calls = 0;
  const FitnessFn f = [&](const Chromosome& x) {
    ++calls;
    CHECK(x == c);
    return -1.25;
  };
  const GaResult r = ga_optimize(f, 2, kPmax, cfg, std::vector<Chromosome>(8, c));
  CHECK(r.best == c);
  for (const auto& g : r.history) {
    CHECK(g.best_fitness == -1.25);
    CHECK(g.mean_fitness == -1.25);
  }
  CHECK(calls == 8 + 5 * (8 - cfg.elitism));
}

TEST_CASE("with elitism the best fitness never decreases") {
  const FitnessFn f = [](const Chromosome& c) {
    double s = 0.0;
    for (const Gene& g : c.genes) s -= std::fabs(g.power_w - 0.03) + (g.rri_index == 1 ? 0.0 : 0.02);
    return s;
  };
  GaConfig cfg;
  cfg.population = 16;
  cfg.generations = 20;
  cfg.epochs_per_vehicle = 4;
  const GaResult r = ga_optimize(f, 3, kPmax, cfg);
  REQUIRE(r.history.size() == 21);
  for (std::size_t g = 1; g < r.history.size(); ++g) CHECK(r.history[g].best_fitness >= r.history[g - 1].best_fitness);
  CHECK(r.best_fitness == r.history.back().best_fitness);
  CHECK(f(r.best) == r.best_fitness);
  CHECK(r.history.back().best_fitness > r.history.front().best_fitness);
}

TEST_CASE("full elitism with no variation is a no-op") {
  GaConfig cfg;
  cfg.population = 6;
  cfg.generations = 4;
  cfg.elitism = 6;
  cfg.crossover_prob = 0.0;
  cfg.mutation_prob = 0.0;
  const FitnessFn f = [](const Chromosome& c) { return -c.genes[0].power_w; };
  const GaResult r = ga_optimize(f, 2, kPmax, cfg);
  for (const auto& g : r.history) {
    CHECK(g.best_fitness == r.history.front().best_fitness);
    CHECK(g.mean_fitness == doctest::Approx(r.history.front().mean_fitness).epsilon(1e-12));
  }
}

TEST_CASE("on a single-vehicle problem with a dominant gene the GA finds it") {
  // Γ = 100 at any power strictly beats every other gene.
  const FitnessFn f = [](const Chromosome& c) {
    double s = 0.0;
    for (const Gene& g : c.genes) s += (g.rri_index == 2 ? 1.0 : 0.0) - 0.1 * g.power_w;
    return s;
  };
  int found = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GaConfig cfg;
    cfg.population = 20;
    cfg.generations = 30;
    cfg.epochs_per_vehicle = 4;
    cfg.seed = seed;
    const GaResult r = ga_optimize(f, 1, kPmax, cfg);
    bool all = true;
    for (const Gene& g : r.best.genes) all = all && g.rri_index == 2;
    found += all;
  }
  CHECK(found >= 8);
}

TEST_CASE("GA is reproducible and rejects non-finite fitness") {
  const FitnessFn f = [](const Chromosome& c) { return -c.genes.back().power_w; };
  GaConfig cfg;
  cfg.population = 6;
  cfg.generations = 3;
  const GaResult a = ga_optimize(f, 2, kPmax, cfg);
  const GaResult b = ga_optimize(f, 2, kPmax, cfg);
  CHECK(a.best == b.best);
  cfg.workers = 3;
  CHECK(ga_optimize(f, 2, kPmax, cfg).best == a.best);

  const FitnessFn bad = [](const Chromosome&) { return std::nan(""); };
  CHECK_THROWS_AS(ga_optimize(bad, 2, kPmax, GaConfig{}), std::runtime_error);
  GaConfig wrong;
  wrong.elitism = 50;
  CHECK_THROWS_AS(wrong.validate(), ConfigError);
  wrong = GaConfig{};
  wrong.fitness_episodes = 0;
  CHECK_THROWS_AS(wrong.validate(), ConfigError);
}

TEST_CASE("environment fitness is deterministic and in the reward range") {
  EnvConfig env;
  env.scenario.n_vehicles = 4;
  const FitnessFn f = env_fitness(env, 600, 11);
  Chromosome c(4, 3);
  for (Gene& g : c.genes) g = {0, 0.1};
  const double a = f(c);
  CHECK(a == f(c));
  CHECK(a <= 0.0);
  CHECK(a >= -1.0);
  const FitnessFn two = env_fitness(env, 600, 11, 2);
  CHECK(std::isfinite(two(c)));
}
