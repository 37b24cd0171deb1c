#include "checkerboard/ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string_view>
#include <unordered_map>

#include "checkerboard/error.hpp"
#include "checkerboard/parallel.hpp"

namespace checkerboard::ga {
namespace {

struct GenomeHash {
  std::size_t operator()(const Genome& g) const noexcept {
    return static_cast<std::size_t>(
        fnv1a(std::string_view(reinterpret_cast<const char*>(g.data()), g.size())));
  }
};

Genome random_genome(int genes, Rng& rng) {
  Genome g(static_cast<std::size_t>(genes));
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i % 64 == 0) word = rng();
    g[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return g;
}

}  // namespace

void GaParams::validate() const {
  if (generation_size < 1) throw ConfigError("generation_size must be >= 1");
  if (gene_count < 1) throw ConfigError("gene_count must be >= 1");
  if (max_generations < 1) throw ConfigError("max_generations must be >= 1");
  if (crossover_probability < 0.0 || crossover_probability > 1.0)
    throw ConfigError("crossover_probability must lie in [0, 1]");
  if (mutation_probability < 0.0 || mutation_probability > 1.0)
    throw ConfigError("mutation_probability must lie in [0, 1]");
  if (elitism_ratio < 0.0 || elitism_ratio > 1.0) throw ConfigError("elitism_ratio must lie in [0, 1]");
  if (crossover_points != 2) throw ConfigError("only two-point crossover is supported");
  if (stagnation_generations < 0) throw ConfigError("stagnation_generations must be >= 0");
  if (elite_count() < 1) throw ConfigError("elitism must keep at least one chromosome");
}

int GaParams::elite_count() const {
  return std::min(generation_size, static_cast<int>(std::lround(elitism_ratio * generation_size)));
}

RouletteWheel::RouletteWheel(std::span<const double> fitness) {
  if (fitness.empty()) throw ArgumentError("roulette wheel needs at least one chromosome");
  const double min = *std::min_element(fitness.begin(), fitness.end());
  const double shift = min > 0.0 ? 0.0 : -min + 1e-12;
  cumulative_.resize(fitness.size());
  double total = 0.0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    total += fitness[i] + shift;
    cumulative_[i] = total;
  }
  uniform_ = !(total > 0.0) || !std::isfinite(total);
}

std::size_t RouletteWheel::spin(Rng& rng) const {
  if (uniform_) return static_cast<std::size_t>(uniform_index(rng, cumulative_.size()));
  const double target = uniform01(rng) * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

std::size_t roulette_select(const Generation& generation, Rng& rng) {
  return RouletteWheel(generation.fitness).spin(rng);
}

std::pair<Genome, Genome> crossover_at(const Genome& p1, const Genome& p2, std::size_t first_cut,
                                       std::size_t second_cut) {
  if (p1.size() != p2.size()) throw ArgumentError("crossover parents differ in length");
  if (first_cut > second_cut || second_cut > p1.size()) throw ArgumentError("invalid crossover cuts");
  Genome c1 = p1;
  Genome c2 = p2;
  for (std::size_t i = first_cut; i < second_cut; ++i) std::swap(c1[i], c2[i]);
  return {std::move(c1), std::move(c2)};
}

std::pair<Genome, Genome> two_point_crossover(const Genome& p1, const Genome& p2, Rng& rng,
                                              double probability) {
  if (p1.size() < 3 || uniform01(rng) >= probability) return {p1, p2};
  const std::size_t slots = p1.size() - 1;  // cut positions 1..n-1
  std::size_t a = 1 + uniform_index(rng, slots);
  std::size_t b = 1 + uniform_index(rng, slots - 1);
  if (b >= a) ++b;
  if (a > b) std::swap(a, b);
  return crossover_at(p1, p2, a, b);
}

Genome mutate(Genome chromosome, Rng& rng, double probability) {
  for (auto& gene : chromosome)
    if (uniform01(rng) < probability) gene ^= 1U;
  return chromosome;
}

void FunctionOracle::evaluate(std::span<const Genome> genomes, std::span<double> fitness) {
  parallel_for(genomes.size(), workers_, [&](std::size_t i) { fitness[i] = fn_(genomes[i]); });
}

const char* property_name(Property p) {
  switch (p) {
    case Property::Modulus: return "modulus";
    case Property::Strength: return "strength";
    case Property::Toughness: return "toughness";
  }
  return "?";
}

Property parse_property(const std::string& name) {
  if (name == "modulus") return Property::Modulus;
  if (name == "strength") return Property::Strength;
  if (name == "toughness") return Property::Toughness;
  throw ArgumentError("unknown property '" + name + "' (expected modulus, strength or toughness)");
}

double property_value(const fem::CompositeProperties& props, Property p) {
  switch (p) {
    case Property::Modulus: return props.modulus;
    case Property::Strength: return props.strength;
    case Property::Toughness: return props.toughness;
  }
  return 0.0;
}

void AofWeights::validate_weights() const {
  if (modulus < 0.0 || strength < 0.0 || toughness < 0.0)
    throw ConfigError("AOF weights must be nonnegative");
  const double sum = modulus + strength + toughness;
  if (std::abs(sum - 1.0) > 5e-3)
    throw ConfigError("AOF weights must sum to 1 (got " + std::to_string(sum) + ")");
  if (exponent < 1) throw ConfigError("AOF exponent must be >= 1");
}

double aof(const fem::CompositeProperties& props, const AofWeights& weights) {
  if (!weights.normalizers) throw ConfigError("AOF normalizers are not set");
  const auto& n = *weights.normalizers;
  if (!(n.modulus > 0.0 && n.strength > 0.0 && n.toughness > 0.0))
    throw ConfigError("AOF normalizers must be positive");
  const auto term = [&](double w, double value, double max) {
    return w * std::pow(value / max, weights.exponent);
  };
  return term(weights.modulus, props.modulus, n.modulus) +
         term(weights.strength, props.strength, n.strength) +
         term(weights.toughness, props.toughness, n.toughness);
}

double Objective::score(const fem::CompositeProperties& props) const {
  return aof ? ga::aof(props, *aof) : property_value(props, property);
}

std::string Objective::describe() const {
  if (!aof) return property_name(property);
  return "aof(" + std::to_string(aof->modulus) + "," + std::to_string(aof->strength) + "," +
         std::to_string(aof->toughness) + ")";
}

void ObjectiveOracle::evaluate(std::span<const Genome> genomes, std::span<double> fitness) {
  const auto props = model_(genomes);
  if (props.size() != genomes.size()) throw NumericError("property model returned wrong batch size");
  for (std::size_t i = 0; i < genomes.size(); ++i) fitness[i] = objective_.score(props[i]);
}

PropertyModel fem_property_model(GridSize grid, const fem::MaterialPair& materials, unsigned workers) {
  workers = std::max(1u, workers);
  auto solvers = std::make_shared<std::vector<fem::Solver>>();
  for (unsigned w = 0; w < workers; ++w) solvers->emplace_back(grid, materials);
  return [grid, solvers, workers](std::span<const Genome> genomes) {
    std::vector<fem::CompositeProperties> out(genomes.size());
    // Static partition: worker w owns solver w and indices w, w + workers, ...
    parallel_for(workers, workers, [&](std::size_t w) {
      for (std::size_t i = w; i < genomes.size(); i += workers)
        out[i] = (*solvers)[w].evaluate(Microstructure(grid, genomes[i]));
    });
    return out;
  };
}

bool ranks_before(double fa, const Genome& a, double fb, const Genome& b) {
  if (fa != fb) return fa > fb;
  return a < b;
}

std::vector<RankedGenome> EvolutionResult::top(std::size_t k) const {
  std::vector<std::size_t> order(final_generation.chromosomes.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& g = final_generation;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return ranks_before(g.fitness[x], g.chromosomes[x], g.fitness[y], g.chromosomes[y]);
  });
  std::vector<RankedGenome> out;
  for (std::size_t idx : order) {
    if (out.size() == k) break;
    if (!out.empty() && out.back().genome == g.chromosomes[idx]) continue;
    out.push_back({g.chromosomes[idx], g.fitness[idx]});
  }
  return out;
}

EvolutionResult evolve(const GaParams& params, FitnessOracle& oracle, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(params.generation_size);
  const auto elites = static_cast<std::size_t>(params.elite_count());

  Generation gen;
  gen.chromosomes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) gen.chromosomes.push_back(random_genome(params.gene_count, rng));

  std::unordered_map<Genome, double, GenomeHash> cache;
  EvolutionResult result;
  double best_so_far = -std::numeric_limits<double>::infinity();
  int since_improvement = 0;

  for (int g = 0;; ++g) {
    gen.index = g;
    // Evaluate only genomes not seen before, in first-occurrence order.
    std::vector<Genome> pending;
    for (const auto& c : gen.chromosomes)
      if (cache.try_emplace(c, std::numeric_limits<double>::quiet_NaN()).second) pending.push_back(c);
    if (!pending.empty()) {
      std::vector<double> values(pending.size());
      try {
        oracle.evaluate(pending, values);
      } catch (const Error& e) {
        throw Error(e.category(), "generation " + std::to_string(g) + ": " + e.what());
      } catch (const std::exception& e) {
        throw NumericError("generation " + std::to_string(g) + ": " + e.what());
      }
      for (std::size_t i = 0; i < pending.size(); ++i) {
        if (!std::isfinite(values[i]))
          throw NumericError("generation " + std::to_string(g) + ": non-finite fitness");
        cache[pending[i]] = values[i];
      }
    }
    gen.fitness.resize(n);
    for (std::size_t i = 0; i < n; ++i) gen.fitness[i] = cache.at(gen.chromosomes[i]);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return ranks_before(gen.fitness[x], gen.chromosomes[x], gen.fitness[y], gen.chromosomes[y]);
    });

    const double best = gen.fitness[order[0]];
    const double mean = std::accumulate(gen.fitness.begin(), gen.fitness.end(), 0.0) / static_cast<double>(n);
    result.history.push_back({g, best, mean});
    if (best > best_so_far + params.stagnation_tolerance || g == 0) {
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    best_so_far = std::max(best_so_far, best);
    result.best = gen.chromosomes[order[0]];
    result.best_fitness = best;

    if (params.stagnation_generations > 0 && since_improvement >= params.stagnation_generations) {
      result.stagnated = true;
      break;
    }
    if (g + 1 >= params.max_generations) break;

    Generation next;
    next.chromosomes.reserve(n);
    for (std::size_t e = 0; e < elites; ++e) next.chromosomes.push_back(gen.chromosomes[order[e]]);
    const RouletteWheel wheel(gen.fitness);
    while (next.chromosomes.size() < n) {
      const Genome& a = gen.chromosomes[wheel.spin(rng)];
      const Genome& b = gen.chromosomes[wheel.spin(rng)];
      auto [c1, c2] = two_point_crossover(a, b, rng, params.crossover_probability);
      next.chromosomes.push_back(mutate(std::move(c1), rng, params.mutation_probability));
      if (next.chromosomes.size() < n)
        next.chromosomes.push_back(mutate(std::move(c2), rng, params.mutation_probability));
    }
    gen = std::move(next);
  }
  result.final_generation = std::move(gen);
  return result;
}

}  // namespace checkerboard::ga
