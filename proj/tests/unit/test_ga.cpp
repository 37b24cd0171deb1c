#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <numeric>

#include "checkerboard/dataset.hpp"
#include "checkerboard/error.hpp"
#include "checkerboard/ga.hpp"
#include "checkerboard/surrogate.hpp"

using namespace checkerboard;
using namespace checkerboard::ga;

namespace {

Genome zeros(std::size_t n) { return Genome(n, 0); }
Genome ones(std::size_t n) { return Genome(n, 1); }

double one_max(const Genome& g) { return std::accumulate(g.begin(), g.end(), 0.0); }

}  // namespace

TEST(Roulette, FrequenciesFollowFitness) {
  const std::vector<double> fitness{1, 2, 3, 4};
  RouletteWheel wheel(fitness);
  Rng rng(1);
  std::vector<int> counts(4, 0);
  constexpr int kSpins = 100000;
  for (int i = 0; i < kSpins; ++i) ++counts[wheel.spin(rng)];
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(counts[i] / double(kSpins), fitness[i] / 10.0, 0.01);
}

TEST(Roulette, ShiftsNonpositiveFitnessAndFallsBackToUniform) {
  Rng rng(2);
  RouletteWheel shifted(std::vector<double>{-1, 0, 1});
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 60000; ++i) ++counts[shifted.spin(rng)];
  EXPECT_LT(counts[0], 60);
  EXPECT_NEAR(counts[1] / 60000.0, 1.0 / 3.0, 0.01);
  EXPECT_NEAR(counts[2] / 60000.0, 2.0 / 3.0, 0.01);

  RouletteWheel flat(std::vector<double>{0, 0, 0, 0});
  std::vector<int> flat_counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++flat_counts[flat.spin(rng)];
  for (int c : flat_counts) EXPECT_NEAR(c / 40000.0, 0.25, 0.01);
  EXPECT_THROW(RouletteWheel(std::vector<double>{}), ArgumentError);
}

TEST(Crossover, SwapsSegmentBetweenCuts) {
  const auto [c1, c2] = crossover_at(zeros(8), ones(8), 2, 5);
  EXPECT_EQ(c1, (Genome{0, 0, 1, 1, 1, 0, 0, 0}));
  EXPECT_EQ(c2, (Genome{1, 1, 0, 0, 0, 1, 1, 1}));
  EXPECT_THROW(crossover_at(zeros(8), ones(7), 2, 5), ArgumentError);
  EXPECT_THROW(crossover_at(zeros(8), ones(8), 5, 2), ArgumentError);
}

TEST(Crossover, IdenticalParentsAndConservation) {
  Rng rng(3);
  for (int trial = 0; trial < 10000; ++trial) {
    Genome a(32), b(32);
    for (auto& x : a) x = rng() & 1U;
    for (auto& x : b) x = rng() & 1U;
    const auto [s1, s2] = two_point_crossover(a, a, rng, 1.0);
    EXPECT_EQ(s1, a);
    EXPECT_EQ(s2, a);
    const auto [c1, c2] = two_point_crossover(a, b, rng, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(c1[i] + c2[i], a[i] + b[i]);
      EXPECT_TRUE((c1[i] == a[i] && c2[i] == b[i]) || (c1[i] == b[i] && c2[i] == a[i]));
    }
  }
  Genome a = zeros(16), b = ones(16);
  const auto [n1, n2] = two_point_crossover(a, b, rng, 0.0);
  EXPECT_EQ(n1, a);
  EXPECT_EQ(n2, b);
}

TEST(Mutation, RatesZeroOneAndNominal) {
  Rng rng(4);
  const Genome g = zeros(128);
  EXPECT_EQ(mutate(g, rng, 0.0), g);
  EXPECT_EQ(mutate(g, rng, 1.0), ones(128));
  long flips = 0;
  constexpr int kTrials = 7813;  // about 1e6 gene draws
  for (int i = 0; i < kTrials; ++i) flips += static_cast<long>(one_max(mutate(g, rng, 0.005)));
  const double rate = flips / double(kTrials * 128);
  EXPECT_NEAR(rate, 0.005, 0.0005);
}

TEST(Params, ValidationAndEliteCount) {
  GaParams p;
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.elite_count(), 102);
  p.generation_size = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = GaParams{};
  p.mutation_probability = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Evolve, SolvesOneMax) {
  GaParams p;
  p.generation_size = 128;
  p.gene_count = 64;
  p.max_generations = 100;
  FunctionOracle oracle(one_max);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = evolve(p, oracle, seed);
    EXPECT_EQ(r.best_fitness, 64.0) << "seed " << seed;
    EXPECT_EQ(r.best, ones(64)) << "seed " << seed;
  }
}

TEST(Evolve, BestFitnessIsMonotoneWithElitism) {
  GaParams p;
  p.generation_size = 60;
  p.gene_count = 40;
  p.max_generations = 60;
  p.stagnation_generations = 0;
  FunctionOracle oracle([](const Genome& g) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) s += (i % 3 == 0 ? -1.0 : 1.0) * g[i];
    return s;
  });
  const auto r = evolve(p, oracle, 6);
  ASSERT_EQ(r.history.size(), 60u);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_GE(r.history[i].best, r.history[i - 1].best);
}

TEST(Evolve, ConstantOracleStagnates) {
  GaParams p;
  p.generation_size = 20;
  p.gene_count = 16;
  p.max_generations = 150;
  FunctionOracle oracle([](const Genome&) { return 1.0; });
  const auto r = evolve(p, oracle, 7);
  EXPECT_TRUE(r.stagnated);
  EXPECT_EQ(r.history.size(), 31u);
  EXPECT_EQ(r.best_fitness, 1.0);
}

TEST(Evolve, DeterministicAndCachesFitness) {
  GaParams p;
  p.generation_size = 50;
  p.gene_count = 24;
  p.max_generations = 30;
  std::atomic<long> calls{0};
  FunctionOracle counted([&](const Genome& g) {
    ++calls;
    return one_max(g);
  });
  const auto a = evolve(p, counted, 8);
  const long first_calls = calls.load();
  FunctionOracle plain(one_max, 3);
  const auto b = evolve(p, plain, 8);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.final_generation.chromosomes, b.final_generation.chromosomes);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].mean, b.history[i].mean);
  // Elites are carried over, so the cache must save evaluations.
  EXPECT_LT(first_calls, static_cast<long>(a.history.size()) * p.generation_size);
}

TEST(Evolve, OracleFailureNamesGeneration) {
  GaParams p;
  p.generation_size = 10;
  p.gene_count = 8;
  FunctionOracle oracle([](const Genome&) -> double { throw NumericError("boom"); });
  try {
    evolve(p, oracle, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Numeric);
    EXPECT_NE(std::string(e.what()).find("generation 0"), std::string::npos);
  }
}

TEST(Evolve, TopGenomesAreDistinctAndSorted) {
  GaParams p;
  p.generation_size = 40;
  p.gene_count = 12;
  p.max_generations = 10;
  FunctionOracle oracle(one_max);
  const auto r = evolve(p, oracle, 9);
  const auto top = r.top(5);
  ASSERT_EQ(top.size(), 5u);
  for (std::size_t i = 1; i < top.size(); ++i) {
    EXPECT_GE(top[i - 1].fitness, top[i].fitness);
    EXPECT_NE(top[i - 1].genome, top[i].genome);
  }
  EXPECT_TRUE(ranks_before(2.0, ones(3), 1.0, zeros(3)));
  EXPECT_TRUE(ranks_before(1.0, zeros(3), 1.0, ones(3)));
  EXPECT_FALSE(ranks_before(1.0, ones(3), 1.0, ones(3)));
}

TEST(Evolve, FindsFemOptimumOnSmallGrid) {
  const auto all = data::enumerate_all(kGrid4x2);
  for (int k = 0; k < 3; ++k) {
    double best = -1;
    for (const auto& s : all.samples) best = std::max(best, data::label(s.properties, k));
    GaParams p;
    p.generation_size = 64;
    p.gene_count = 8;
    p.max_generations = 100;
    Objective obj;
    obj.property = static_cast<Property>(k);
    const auto r = surrogate::optimize(fem_property_model(kGrid4x2, {}), p, obj, 11);
    EXPECT_NEAR(r.best_fitness, best, 1e-12) << data::kPropertyNames[k];
  }
}

TEST(Aof, ExamplesAndValidation) {
  AofWeights w;
  w.modulus = 0.5;
  w.strength = 0.5;
  w.toughness = 0.0;
  w.exponent = 2;
  w.normalizers = fem::CompositeProperties{2.0, 4.0, 1.0};
  EXPECT_NEAR(aof({1.0, 2.0, 0.7}, w), 0.5 * 0.25 + 0.5 * 0.25, 1e-15);
  EXPECT_NEAR(aof({2.0, 4.0, 1.0}, w), 1.0, 1e-15);

  AofWeights rounded;
  rounded.modulus = rounded.strength = rounded.toughness = 0.333;
  EXPECT_NO_THROW(rounded.validate_weights());
  AofWeights doubled;
  doubled.modulus = 1.0;
  doubled.strength = 0.5;
  doubled.toughness = 0.5;
  EXPECT_THROW(doubled.validate_weights(), ConfigError);
  AofWeights negative;
  negative.modulus = -0.1;
  negative.strength = 0.6;
  negative.toughness = 0.5;
  EXPECT_THROW(negative.validate_weights(), ConfigError);
  AofWeights unnormalized;
  EXPECT_THROW(aof({1, 1, 1}, unnormalized), ConfigError);
}

TEST(Aof, SingleWeightReducesToScaledProperty) {
  AofWeights w;
  w.modulus = 0;
  w.strength = 1;
  w.toughness = 0;
  w.exponent = 1;
  w.normalizers = fem::CompositeProperties{1.0, 0.5, 1.0};
  Objective obj;
  obj.aof = w;
  EXPECT_NEAR(obj.score({0.3, 0.2, 0.1}), 0.4, 1e-15);
  EXPECT_EQ(parse_property("toughness"), Property::Toughness);
  EXPECT_THROW(parse_property("hardness"), ArgumentError);
}

TEST(Aof, StatedExamples) {
  const fem::CompositeProperties maxima{0.9, 0.2, 0.05};
  AofWeights thirds;
  thirds.modulus = thirds.strength = thirds.toughness = 0.333;
  thirds.normalizers = maxima;
  EXPECT_NEAR(aof(maxima, thirds), 0.999, 1e-15);

  AofWeights modulus_only;
  modulus_only.modulus = 1;
  modulus_only.strength = modulus_only.toughness = 0;
  modulus_only.normalizers = maxima;
  EXPECT_NEAR(aof({0.45, 0.2, 0.05}, modulus_only), 0.0625, 1e-15);

  // Zero toughness weight: the argmax ignores toughness perturbations.
  AofWeights two;
  two.modulus = two.strength = 0.5;
  two.toughness = 0;
  two.normalizers = maxima;
  Rng rng(12);
  std::vector<fem::CompositeProperties> set(50);
  for (auto& p : set) p = {uniform01(rng), uniform01(rng), uniform01(rng)};
  auto argmax = [&](const std::vector<fem::CompositeProperties>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (aof(v[i], two) > aof(v[best], two)) best = i;
    return best;
  };
  const auto before = argmax(set);
  for (auto& p : set) p.toughness = uniform01(rng);
  EXPECT_EQ(argmax(set), before);
}
