#include "checkerboard/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "checkerboard/binary_io.hpp"
#include "checkerboard/error.hpp"
#include "checkerboard/parallel.hpp"
#include "checkerboard/rng.hpp"

namespace checkerboard::data {

double label(const fem::CompositeProperties& p, int property) {
  switch (property) {
    case 0: return p.modulus;
    case 1: return p.strength;
    case 2: return p.toughness;
    default: throw ArgumentError("property index out of range");
  }
}

std::vector<double> LabeledDataset::column(int property) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(label(s.properties, property));
  return out;
}

namespace {

LabeledDataset label_all(GridSize grid, std::vector<Microstructure> structures,
                         const fem::MaterialPair& materials, unsigned workers) {
  workers = std::max(1u, workers);
  LabeledDataset ds;
  ds.grid = grid;
  ds.samples.resize(structures.size());
  parallel_for(workers, workers, [&](std::size_t w) {
    fem::Solver solver(grid, materials);
    for (std::size_t i = w; i < structures.size(); i += workers) {
      ds.samples[i].properties = solver.evaluate(structures[i]);
      ds.samples[i].microstructure = std::move(structures[i]);
    }
  });
  return ds;
}

}  // namespace

LabeledDataset generate(std::size_t count, GridSize grid, std::uint64_t seed, unsigned workers,
                        const fem::MaterialPair& materials) {
  if (count < 1) throw ArgumentError("sample count must be >= 1");
  validate_grid(grid);
  materials.validate();
  const std::uint64_t stream = domain_seed(seed, "sampling");
  std::vector<Microstructure> structures;
  structures.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    structures.push_back(Microstructure::random_uniform(grid, indexed_seed(stream, i)));
  return label_all(grid, std::move(structures), materials, workers);
}

LabeledDataset enumerate_all(GridSize grid, const fem::MaterialPair& materials, unsigned workers) {
  validate_grid(grid);
  if (grid.elements() > 20) throw ArgumentError("exhaustive enumeration is limited to 20 genes");
  std::vector<Microstructure> structures;
  const std::uint64_t total = std::uint64_t{1} << grid.elements();
  for (std::uint64_t code = 0; code < total; ++code) structures.push_back(Microstructure::from_index(grid, code));
  return label_all(grid, std::move(structures), materials, workers);
}

PropertyStats summary_stats(std::span<const double> values) {
  if (values.size() < 2) throw ArgumentError("statistics need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw NumericError("zero variance: statistics undefined");
  PropertyStats s;
  s.count = values.size();
  s.mean = mean;
  s.stddev = std::sqrt(m2);
  s.coefficient_of_variation = s.stddev / mean;
  s.skew = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return s;
}

DatasetStats summary_stats(const LabeledDataset& dataset) {
  DatasetStats out;
  for (int k = 0; k < 3; ++k) out[static_cast<std::size_t>(k)] = summary_stats(dataset.column(k));
  return out;
}

BatchMeansTrace batch_means(const LabeledDataset& dataset, std::size_t batch_size) {
  if (batch_size == 0 || dataset.empty() || dataset.size() % batch_size != 0)
    throw ArgumentError("batch size " + std::to_string(batch_size) + " does not divide dataset size " +
                        std::to_string(dataset.size()));
  BatchMeansTrace trace;
  trace.batch_size = batch_size;
  const std::size_t batches = dataset.size() / batch_size;
  for (int k = 0; k < 3; ++k) {
    auto& means = trace.batch_means[static_cast<std::size_t>(k)];
    auto& running = trace.running_mean[static_cast<std::size_t>(k)];
    double cumulative = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      double sum = 0.0;
      for (std::size_t i = b * batch_size; i < (b + 1) * batch_size; ++i)
        sum += label(dataset.samples[i].properties, k);
      means.push_back(sum / static_cast<double>(batch_size));
      cumulative += means.back();
      running.push_back(cumulative / static_cast<double>(b + 1));
    }
  }
  return trace;
}

double last_quartile_relative_range(std::span<const double> running_mean) {
  if (running_mean.empty()) throw ArgumentError("empty running-mean series");
  const std::size_t start = running_mean.size() - std::max<std::size_t>(1, running_mean.size() / 4);
  const auto tail = running_mean.subspan(start);
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  return (*hi - *lo) / std::abs(running_mean.back());
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty() || bins == 0) throw ArgumentError("histogram needs values and at least one bin");
  Histogram h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lower = *lo;
  h.upper = *hi;
  h.counts.assign(bins, 0);
  const double width = (h.upper - h.lower) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - h.lower) / width) : 0;
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, double train_fraction,
                                                std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw ArgumentError("train fraction must lie in [0, 1]");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(domain_seed(seed, "split"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  const auto train_count =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(dataset.size())));
  LabeledDataset train{dataset.grid, {}};
  LabeledDataset test{dataset.grid, {}};
  train.samples.reserve(train_count);
  test.samples.reserve(dataset.size() - train_count);
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < train_count ? train : test).samples.push_back(dataset.samples[order[i]]);
  return {std::move(train), std::move(test)};
}

std::size_t record_size(GridSize grid) { return packed_size(grid) + 3 * sizeof(double); }

void write_dataset(std::ostream& out, const LabeledDataset& dataset) {
  validate_grid(dataset.grid);
  out.write("CBDS", 4);
  binary::put_le<std::uint8_t>(out, kDatasetVersion);
  binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(dataset.grid.width));
  binary::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(dataset.grid.height));
  binary::put_le<std::uint64_t>(out, dataset.size());
  std::vector<std::uint8_t> genome(packed_size(dataset.grid));
  for (const auto& s : dataset.samples) {
    if (s.microstructure.grid() != dataset.grid) throw ArgumentError("sample grid differs from dataset grid");
    pack_into(s.microstructure, genome);
    out.write(reinterpret_cast<const char*>(genome.data()), static_cast<std::streamsize>(genome.size()));
    binary::put_f64(out, s.properties.modulus);
    binary::put_f64(out, s.properties.strength);
    binary::put_f64(out, s.properties.toughness);
  }
  if (!out) throw IoError("failed writing dataset");
}

LabeledDataset read_dataset(std::istream& in) {
  binary::expect_magic(in, "CBDS", "dataset file");
  const auto version = binary::get_le<std::uint8_t>(in, "version");
  if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  LabeledDataset ds;
  ds.grid.width = binary::get_le<std::uint16_t>(in, "grid width");
  ds.grid.height = binary::get_le<std::uint16_t>(in, "grid height");
  try {
    validate_grid(ds.grid);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("dataset header: ") + e.what());
  }
  const auto count = binary::get_le<std::uint64_t>(in, "sample count");
  std::vector<std::uint8_t> genome(packed_size(ds.grid));
  ds.samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(genome.data()), static_cast<std::streamsize>(genome.size())))
      throw FormatError("truncated dataset: record " + std::to_string(i) + " of " + std::to_string(count));
    LabeledSample s{unpack(genome, ds.grid), {}};
    s.properties.modulus = binary::get_f64(in, "modulus");
    s.properties.strength = binary::get_f64(in, "strength");
    s.properties.toughness = binary::get_f64(in, "toughness");
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_dataset(const std::filesystem::path& path, const LabeledDataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dataset(out, dataset);
}

LabeledDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return read_dataset(in);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_stats_csv(const std::filesystem::path& path, const DatasetStats& raw,
                     const DatasetStats* batch_mean_stats) {
  auto out = open_csv(path);
  out << "source,property,count,mean,stddev,coefficient_of_variation,skew,excess_kurtosis\n";
  auto rows = [&](const char* source, const DatasetStats& stats) {
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& s = stats[k];
      out << source << ',' << kPropertyNames[k] << ',' << s.count << ',' << s.mean << ',' << s.stddev << ','
          << s.coefficient_of_variation << ',' << s.skew << ',' << s.excess_kurtosis << '\n';
    }
  };
  rows("samples", raw);
  if (batch_mean_stats) rows("batch_means", *batch_mean_stats);
}

void write_batch_means_csv(const std::filesystem::path& path, const BatchMeansTrace& trace) {
  auto out = open_csv(path);
  out << "batch,modulus_mean,strength_mean,toughness_mean,modulus_running,strength_running,"
         "toughness_running\n";
  for (std::size_t b = 0; b < trace.batch_means[0].size(); ++b) {
    out << b;
    for (const auto& m : trace.batch_means) out << ',' << m[b];
    for (const auto& r : trace.running_mean) out << ',' << r[b];
    out << '\n';
  }
}

void write_histogram_csv(const std::filesystem::path& path, const BatchMeansTrace& trace,
                         std::size_t bins) {
  auto out = open_csv(path);
  out << "property,bin,lower,upper,count\n";
  for (std::size_t k = 0; k < 3; ++k) {
    const Histogram h = histogram(trace.batch_means[k], bins);
    const double width = (h.upper - h.lower) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b)
      out << kPropertyNames[k] << ',' << b << ',' << h.lower + width * static_cast<double>(b) << ','
          << h.lower + width * static_cast<double>(b + 1) << ',' << h.counts[b] << '\n';
  }
}

}  // namespace checkerboard::data
