#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "checkerboard/dataset.hpp"
#include "checkerboard/error.hpp"
#include "test_paths.hpp"

using namespace checkerboard;
using namespace checkerboard::data;

namespace {

std::vector<fem::CompositeProperties> read_golden() {
  std::ifstream in(test_paths::golden_4x2());
  std::string line;
  std::getline(in, line);
  std::vector<fem::CompositeProperties> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    rows.push_back({v.at(1), v.at(2), v.at(3)});
  }
  return rows;
}

std::uint64_t code_of(const Microstructure& m) {
  std::uint64_t c = 0;
  for (std::size_t g = 0; g < m.size(); ++g)
    if (m.bits()[g]) c |= std::uint64_t{1} << g;
  return c;
}

bool near(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST(Golden, ExhaustiveEnumerationMatchesStoredTable) {
  const auto golden = read_golden();
  ASSERT_EQ(golden.size(), 256u);
  const auto ds = enumerate_all(kGrid4x2);
  for (std::size_t c = 0; c < 256; ++c) {
    EXPECT_TRUE(near(ds.samples[c].properties.modulus, golden[c].modulus, 1e-12)) << c;
    EXPECT_TRUE(near(ds.samples[c].properties.strength, golden[c].strength, 1e-12)) << c;
    EXPECT_TRUE(near(ds.samples[c].properties.toughness, golden[c].toughness, 1e-12)) << c;
  }
}

TEST(Generate, SampledLabelsMatchGoldenTable) {
  const auto golden = read_golden();
  const auto ds = generate(256, kGrid4x2, 9, 2);
  ASSERT_EQ(ds.size(), 256u);
  std::map<std::uint64_t, int> seen;
  for (const auto& s : ds.samples) {
    const auto c = code_of(s.microstructure);
    ++seen[c];
    EXPECT_TRUE(near(s.properties.modulus, golden[c].modulus, 1e-12));
    EXPECT_TRUE(near(s.properties.strength, golden[c].strength, 1e-12));
    EXPECT_TRUE(near(s.properties.toughness, golden[c].toughness, 1e-12));
  }
  // Sampling with replacement over 256 codes: duplicates are expected.
  EXPECT_LT(seen.size(), 256u);
}

TEST(Generate, IndependentOfWorkerCount) {
  EXPECT_EQ(generate(300, kGrid8x4, 5, 1), generate(300, kGrid8x4, 5, 8));
  EXPECT_NE(generate(10, kGrid8x4, 5, 1), generate(10, kGrid8x4, 6, 1));
}

TEST(Generate, InvariantSweepOnTenThousandSamples) {
  const auto ds = generate(10000, kGrid8x4, 21, 2);
  ASSERT_EQ(ds.size(), 10000u);
  for (const auto& s : ds.samples) {
    const auto& p = s.properties;
    ASSERT_GT(p.modulus, 0.0);
    ASSERT_TRUE(near(p.toughness, p.strength * p.strength / (2 * p.modulus), 1e-12));
  }
}

TEST(Generate, RejectsZeroCount) { EXPECT_THROW(generate(0, kGrid8x4, 1, 1), ArgumentError); }

TEST(Stats, SymmetricValues) {
  const std::vector<double> v{-1, 0, 1};
  const auto s = summary_stats(v);
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_NEAR(s.skew, 0.0, 1e-15);
  EXPECT_FALSE(std::isfinite(s.coefficient_of_variation));
  EXPECT_NEAR(s.excess_kurtosis, 1.5 - 3.0, 1e-12);
}

TEST(Stats, KnownMomentsOfSkewedSample) {
  const std::vector<double> v{1, 2, 3, 10};
  const auto s = summary_stats(v);
  // Population (not sample) central moments.
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : v) {
    m2 += std::pow(x - 4, 2) / 4;
    m3 += std::pow(x - 4, 3) / 4;
    m4 += std::pow(x - 4, 4) / 4;
  }
  EXPECT_NEAR(s.mean, 4.0, 1e-15);
  EXPECT_NEAR(s.stddev, std::sqrt(m2), 1e-14);
  EXPECT_NEAR(s.skew, m3 / std::pow(m2, 1.5), 1e-13);
  EXPECT_NEAR(s.excess_kurtosis, m4 / (m2 * m2) - 3, 1e-13);
  EXPECT_NEAR(s.coefficient_of_variation, std::sqrt(m2) / 4, 1e-15);
}

TEST(Stats, NormalSamplesHaveNearZeroShape) {
  Rng rng(123);
  std::normal_distribution<double> normal;
  std::vector<double> v(1000000);
  for (auto& x : v) x = normal(rng);
  const auto s = summary_stats(v);
  EXPECT_LT(std::abs(s.skew), 0.01);
  EXPECT_LT(std::abs(s.excess_kurtosis), 0.02);
}

TEST(Stats, Errors) {
  const std::vector<double> constant(10, 2.0);
  EXPECT_THROW(summary_stats(constant), NumericError);
  const std::vector<double> one{1.0};
  EXPECT_THROW(summary_stats(one), ArgumentError);
}

TEST(BatchMeans, ConstantLabelsGiveFlatTrace) {
  LabeledDataset ds{kGrid4x2, {}};
  for (int i = 0; i < 20; ++i) ds.samples.push_back({Microstructure::from_index(kGrid4x2, i), {2, 3, 4}});
  const auto t = batch_means(ds, 5);
  ASSERT_EQ(t.batch_means[0].size(), 4u);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t b = 0; b < 4; ++b) {
      EXPECT_EQ(t.batch_means[k][b], 2.0 + static_cast<double>(k));
      EXPECT_EQ(t.running_mean[k][b], 2.0 + static_cast<double>(k));
    }
  EXPECT_EQ(last_quartile_relative_range(t.running_mean[0]), 0.0);
  EXPECT_THROW(batch_means(ds, 3), ArgumentError);
}

TEST(BatchMeans, RunningMeanIsMeanOfBatchMeans) {
  const auto ds = generate(400, kGrid8x4, 4, 1);
  const auto t = batch_means(ds, 50);
  for (std::size_t k = 0; k < 3; ++k) {
    double acc = 0;
    for (std::size_t b = 0; b < t.batch_means[k].size(); ++b) {
      acc += t.batch_means[k][b];
      EXPECT_NEAR(t.running_mean[k][b], acc / static_cast<double>(b + 1), 1e-15);
    }
  }
}

TEST(BatchMeans, ReduceSkewRelativeToRawSamples) {
  const auto ds = generate(20000, kGrid8x4, 8, 2);
  const auto raw = summary_stats(ds);
  const auto t = batch_means(ds, 500);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_LT(std::abs(summary_stats(t.batch_means[k]).skew), std::abs(raw[k].skew)) << kPropertyNames[k];
}

TEST(Histogram, CountsEveryValue) {
  const std::vector<double> v{0, 0.1, 0.5, 0.9, 1.0};
  const auto h = histogram(v, 2);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 3}));
}

TEST(Split, SizesAndEdgeCases) {
  const auto ds = generate(10, kGrid4x2, 1, 1);
  auto [tr, te] = split(ds, 0.8, 3);
  EXPECT_EQ(tr.size(), 8u);
  EXPECT_EQ(te.size(), 2u);
  auto [all, none] = split(ds, 1.0, 3);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_TRUE(none.empty());
  EXPECT_THROW(split(ds, 1.5, 3), ArgumentError);
}

TEST(Split, DisjointExhaustiveDeterministic) {
  const auto ds = generate(500, kGrid8x4, 2, 1);
  const auto [tr, te] = split(ds, 0.9, 77);
  const auto [tr2, te2] = split(ds, 0.9, 77);
  EXPECT_EQ(tr, tr2);
  EXPECT_EQ(te, te2);
  auto key = [](const LabeledSample& s) {
    return std::make_tuple(s.microstructure, s.properties.modulus, s.properties.strength, s.properties.toughness);
  };
  std::vector<decltype(key(ds.samples[0]))> a, b;
  for (const auto& s : ds.samples) a.push_back(key(s));
  for (const auto& s : tr.samples) b.push_back(key(s));
  for (const auto& s : te.samples) b.push_back(key(s));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_NE(tr.samples.front(), ds.samples.front());
}

TEST(DatasetFile, RoundTrips) {
  std::stringstream empty;
  write_dataset(empty, LabeledDataset{kGrid8x4, {}});
  EXPECT_EQ(read_dataset(empty), (LabeledDataset{kGrid8x4, {}}));

  const auto ds = generate(10000, kGrid8x4, 31, 2);
  std::stringstream buf;
  write_dataset(buf, ds);
  EXPECT_EQ(buf.str().size(), 4 + 1 + 2 + 2 + 8 + ds.size() * record_size(kGrid8x4));
  const auto back = read_dataset(buf);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ASSERT_EQ(back.samples[i].microstructure, ds.samples[i].microstructure);
    ASSERT_EQ(std::bit_cast<std::uint64_t>(back.samples[i].properties.toughness),
              std::bit_cast<std::uint64_t>(ds.samples[i].properties.toughness));
  }
  EXPECT_EQ(back, ds);
}

TEST(DatasetFile, HeaderLayout) {
  std::stringstream buf;
  write_dataset(buf, generate(3, kGrid16x8, 1, 1));
  const std::string s = buf.str();
  EXPECT_EQ(s.substr(0, 4), "CBDS");
  EXPECT_EQ(static_cast<unsigned char>(s[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(s[5]), 16);
  EXPECT_EQ(static_cast<unsigned char>(s[6]), 0);
  EXPECT_EQ(static_cast<unsigned char>(s[7]), 8);
  EXPECT_EQ(static_cast<unsigned char>(s[9]), 3);
}

TEST(DatasetFile, CorruptInputIsFormatError) {
  std::stringstream buf;
  write_dataset(buf, generate(5, kGrid4x2, 1, 1));
  std::string bytes = buf.str();
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  EXPECT_THROW(read_dataset(a), FormatError);
  std::stringstream b(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_dataset(b), FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::stringstream c(bad_version);
  EXPECT_THROW(read_dataset(c), FormatError);
  EXPECT_THROW(read_dataset(std::filesystem::path("/nonexistent/x.cbds")), IoError);
}
