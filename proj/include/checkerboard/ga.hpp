#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "checkerboard/fem.hpp"
#include "checkerboard/rng.hpp"

namespace checkerboard::ga {

/// One gene per element, 1 = soft. Same ordering as Microstructure::bits().
using Genome = std::vector<std::uint8_t>;

struct GaParams {
  int generation_size = 1024;
  int gene_count = 128;
  int max_generations = 150;
  double crossover_probability = 0.95;
  int crossover_points = 2;
  double mutation_probability = 0.005;
  double elitism_ratio = 0.10;
  /// Stop after this many generations without the best fitness improving by
  /// more than `stagnation_tolerance`. 0 disables the criterion.
  int stagnation_generations = 30;
  double stagnation_tolerance = 1e-9;

  void validate() const;
  int elite_count() const;
};

struct Generation {
  std::vector<Genome> chromosomes;
  std::vector<double> fitness;
  int index = 0;
};

/// Fitness-proportional selection over one generation. Nonpositive fitness is
/// shifted by (-min + epsilon); a zero total falls back to uniform selection.
class RouletteWheel {
 public:
  explicit RouletteWheel(std::span<const double> fitness);
  std::size_t spin(Rng& rng) const;
  std::size_t size() const noexcept { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
  bool uniform_ = false;
};

std::size_t roulette_select(const Generation& generation, Rng& rng);

/// Children swap the segment [first_cut, second_cut).
std::pair<Genome, Genome> crossover_at(const Genome& p1, const Genome& p2, std::size_t first_cut,
                                       std::size_t second_cut);
/// With `probability`, two distinct cut points drawn from 1..n-1; otherwise copies.
std::pair<Genome, Genome> two_point_crossover(const Genome& p1, const Genome& p2, Rng& rng,
                                              double probability);
/// Flips each gene independently with `probability`.
Genome mutate(Genome chromosome, Rng& rng, double probability);

/// Batch fitness evaluation. Implementations must be deterministic.
class FitnessOracle {
 public:
  virtual ~FitnessOracle() = default;
  virtual void evaluate(std::span<const Genome> genomes, std::span<double> fitness) = 0;
};

/// Wraps a per-genome function; evaluation fans out over `workers` threads.
class FunctionOracle final : public FitnessOracle {
 public:
  explicit FunctionOracle(std::function<double(const Genome&)> fn, unsigned workers = 1)
      : fn_(std::move(fn)), workers_(workers) {}
  void evaluate(std::span<const Genome> genomes, std::span<double> fitness) override;

 private:
  std::function<double(const Genome&)> fn_;
  unsigned workers_;
};

enum class Property { Modulus, Strength, Toughness };

const char* property_name(Property p);
Property parse_property(const std::string& name);
double property_value(const fem::CompositeProperties& props, Property p);

/// Compromise-programming aggregate: sum_k w_k (value_k / max_k)^exponent.
struct AofWeights {
  double modulus = 1.0 / 3.0;
  double strength = 1.0 / 3.0;
  double toughness = 1.0 / 3.0;
  int exponent = 4;
  std::optional<fem::CompositeProperties> normalizers;

  /// Weights must be nonnegative and sum to one within 5e-3 (so 0.333 x 3 passes).
  void validate_weights() const;
};

double aof(const fem::CompositeProperties& props, const AofWeights& weights);

/// What the GA maximizes: a single property, or the AOF when `aof` is set.
struct Objective {
  Property property = Property::Modulus;
  std::optional<AofWeights> aof;

  double score(const fem::CompositeProperties& props) const;
  std::string describe() const;
};

/// Maps a batch of genomes to properties (FE or surrogate).
using PropertyModel =
    std::function<std::vector<fem::CompositeProperties>(std::span<const Genome>)>;

class ObjectiveOracle final : public FitnessOracle {
 public:
  ObjectiveOracle(PropertyModel model, Objective objective)
      : model_(std::move(model)), objective_(std::move(objective)) {}
  void evaluate(std::span<const Genome> genomes, std::span<double> fitness) override;

 private:
  PropertyModel model_;
  Objective objective_;
};

/// FE-backed property model; one solver per worker.
PropertyModel fem_property_model(GridSize grid, const fem::MaterialPair& materials,
                                 unsigned workers = 1);

struct HistoryEntry {
  int generation = 0;
  double best = 0;
  double mean = 0;
};

struct RankedGenome {
  Genome genome;
  double fitness = 0;
};

struct EvolutionResult {
  Genome best;
  double best_fitness = 0;
  std::vector<HistoryEntry> history;
  Generation final_generation;
  bool stagnated = false;

  /// Best `k` distinct genomes of the final generation, fitness descending.
  std::vector<RankedGenome> top(std::size_t k) const;
};

/// Runs the GA: uniform random start, then per generation evaluate, copy the
/// elites, and fill the rest via roulette selection, two-point crossover and
/// bit-flip mutation. Oracle failures are rethrown with the generation index.
EvolutionResult evolve(const GaParams& params, FitnessOracle& oracle, std::uint64_t seed);

/// Strict weak order used for elite ranking: higher fitness first, ties by
/// lexicographically smaller genome.
bool ranks_before(double fa, const Genome& a, double fb, const Genome& b);

}  // namespace checkerboard::ga
