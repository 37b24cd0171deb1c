#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "checkerboard/fem.hpp"
#include "checkerboard/microstructure.hpp"

namespace checkerboard::data {

struct LabeledSample {
  Microstructure microstructure;
  fem::CompositeProperties properties;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct LabeledDataset {
  GridSize grid{};
  std::vector<LabeledSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  /// Column k of the labels: 0 = modulus, 1 = strength, 2 = toughness.
  std::vector<double> column(int property) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

inline constexpr std::array<const char*, 3> kPropertyNames{"modulus", "strength", "toughness"};
double label(const fem::CompositeProperties& p, int property);

/// Uniformly sampled microstructures labeled by the FE solver. Sample i is
/// drawn from a seed derived from (seed, i), so the result does not depend
/// on `workers`.
LabeledDataset generate(std::size_t count, GridSize grid, std::uint64_t seed, unsigned workers,
                        const fem::MaterialPair& materials = {});

/// All 2^genes microstructures in genome-code order (small grids only).
LabeledDataset enumerate_all(GridSize grid, const fem::MaterialPair& materials = {},
                             unsigned workers = 1);

struct PropertyStats {
  std::size_t count = 0;
  double mean = 0;
  double stddev = 0;
  /// stddev / mean; non-finite when the mean is zero.
  double coefficient_of_variation = 0;
  double skew = 0;
  /// Fourth standardized moment minus 3 (zero for a normal distribution).
  double excess_kurtosis = 0;
};

using DatasetStats = std::array<PropertyStats, 3>;

/// Population-moment statistics. Throws ArgumentError for fewer than two
/// values and NumericError for zero variance.
PropertyStats summary_stats(std::span<const double> values);
DatasetStats summary_stats(const LabeledDataset& dataset);

struct BatchMeansTrace {
  std::size_t batch_size = 0;
  std::array<std::vector<double>, 3> batch_means;
  /// running_mean[k][b] = mean of batch_means[k][0..b].
  std::array<std::vector<double>, 3> running_mean;
};

/// Consecutive, non-overlapping batches in dataset order. Throws
/// ArgumentError unless batch_size divides the dataset size.
BatchMeansTrace batch_means(const LabeledDataset& dataset, std::size_t batch_size);

/// (max - min) of the last quarter of a running-mean series, relative to its
/// final value.
double last_quartile_relative_range(std::span<const double> running_mean);

struct Histogram {
  double lower = 0;
  double upper = 0;
  std::vector<std::size_t> counts;
};
Histogram histogram(std::span<const double> values, std::size_t bins);

/// Shuffled, disjoint, exhaustive split; train gets round(fraction * n) samples.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, double train_fraction,
                                                std::uint64_t seed);

/// Binary layout (little endian): "CBDS", version u8 = 1, width u16,
/// height u16, sample count u64, then per sample a packed genome record
/// followed by modulus, strength, toughness as IEEE-754 binary64.
inline constexpr std::uint8_t kDatasetVersion = 1;
std::size_t record_size(GridSize grid);
void write_dataset(std::ostream& out, const LabeledDataset& dataset);
LabeledDataset read_dataset(std::istream& in);
void write_dataset(const std::filesystem::path& path, const LabeledDataset& dataset);
LabeledDataset read_dataset(const std::filesystem::path& path);

void write_stats_csv(const std::filesystem::path& path, const DatasetStats& raw,
                     const DatasetStats* batch_mean_stats = nullptr);
void write_batch_means_csv(const std::filesystem::path& path, const BatchMeansTrace& trace);
void write_histogram_csv(const std::filesystem::path& path, const BatchMeansTrace& trace,
                         std::size_t bins);

}  // namespace checkerboard::data
