#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "checkerboard/cnn.hpp"
#include "checkerboard/fem.hpp"
#include "checkerboard/ga.hpp"

namespace checkerboard {

/// Parses "8x4" style grid names; throws ArgumentError for unsupported grids.
GridSize parse_grid(const std::string& text);
std::string grid_name(GridSize grid);

struct DatasetSettings {
  std::size_t count = 100000;
  /// Batch size of the batch-means statistics.
  std::size_t stats_batch_size = 500;
  double train_fraction = 0.9;
};

struct OptimizeSettings {
  ga::GaParams params{};
  std::size_t top_k = 5;
  ga::AofWeights aof{};
};

/// Everything a command needs. Loaded from a JSON document; command-line
/// flags override individual fields afterwards.
///
/// {
///   "grid": "8x4", "seed": 1, "workers": 4, "output_dir": "out",
///   "materials": {"stiff": {"youngs_modulus": 1, "poisson_ratio": 0.333, "failure_strain": 0.1},
///                 "soft": {...}},
///   "dataset": {"count": 100000, "stats_batch_size": 500, "train_fraction": 0.9},
///   "train": {"epochs": 50, "batch_size": 128, "learning_rate": 0.001,
///             "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8},
///   "ga": {"generation_size": 1024, "max_generations": 150, "crossover_probability": 0.95,
///          "mutation_probability": 0.005, "elitism_ratio": 0.1,
///          "stagnation_generations": 30, "stagnation_tolerance": 1e-9, "top_k": 5},
///   "aof": {"weights": [0.333, 0.333, 0.333], "exponent": 4, "normalizers": [m, s, t]}
/// }
///
/// Unknown keys are rejected.
struct RunConfig {
  GridSize grid = kGrid8x4;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::filesystem::path output_dir = "out";
  fem::MaterialPair materials{};
  DatasetSettings dataset{};
  cnn::TrainConfig train{};
  OptimizeSettings optimize{};

  /// Throws ConfigError when any module precondition is violated.
  void validate() const;
};

/// Throws IoError when the file cannot be read and ConfigError on malformed
/// or unknown content.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

}  // namespace checkerboard
