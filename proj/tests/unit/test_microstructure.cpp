#include <gtest/gtest.h>

#include <vector>

#include "checkerboard/error.hpp"
#include "checkerboard/fem.hpp"
#include "checkerboard/microstructure.hpp"

using namespace checkerboard;

TEST(Grid, OnlySupportedSizes) {
  EXPECT_NO_THROW(validate_grid(kGrid4x2));
  EXPECT_NO_THROW(validate_grid(kGrid8x4));
  EXPECT_NO_THROW(validate_grid(kGrid16x8));
  EXPECT_THROW(validate_grid({8, 8}), ArgumentError);
  EXPECT_THROW(validate_grid({6, 3}), ArgumentError);
  EXPECT_THROW(Microstructure(kGrid4x2, std::vector<std::uint8_t>(7)), ArgumentError);
}

TEST(RandomUniform, SameSeedSameMicrostructure) {
  EXPECT_EQ(Microstructure::random_uniform(kGrid16x8, 42), Microstructure::random_uniform(kGrid16x8, 42));
  EXPECT_NE(Microstructure::random_uniform(kGrid16x8, 42), Microstructure::random_uniform(kGrid16x8, 43));
}

TEST(RandomUniform, PerBitFrequencyAndVolumeFraction) {
  constexpr int kDraws = 100000;
  Rng rng(7);
  std::vector<int> soft(32, 0);
  double vf = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const auto m = Microstructure::random_uniform(kGrid8x4, rng);
    for (int g = 0; g < 32; ++g) soft[static_cast<std::size_t>(g)] += m.is_soft(g);
    vf += volume_fraction_soft(m);
  }
  for (int g = 0; g < 32; ++g) {
    const double f = soft[static_cast<std::size_t>(g)] / static_cast<double>(kDraws);
    EXPECT_GE(f, 0.49) << "gene " << g;
    EXPECT_LE(f, 0.51) << "gene " << g;
  }
  EXPECT_NEAR(vf / kDraws, 0.5, 0.005);
}

TEST(Image, AllStiffIsZero) {
  for (double p : to_image(Microstructure::all_stiff(kGrid8x4))) EXPECT_EQ(p, 0.0);
}

TEST(Image, CrackTipElementMapsToOnePixel) {
  const fem::HalfModelMesh mesh(kGrid8x4);
  auto m = Microstructure::all_stiff(kGrid8x4);
  const int tip = mesh.crack_tip_element();
  m.set(tip, true);
  EXPECT_TRUE(m.is_soft(0, 2));
  const auto image = to_image(m);
  int nonzero = 0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (image[i] != 0.0) {
      ++nonzero;
      EXPECT_EQ(i, 2u);  // row 0 (symmetry line), column 2
    }
  }
  EXPECT_EQ(nonzero, 1);
}

TEST(Image, ThresholdDecodeRoundTrip) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto m = Microstructure::random_uniform(kGrid16x8, rng);
    EXPECT_EQ(from_image(kGrid16x8, to_image(m)), m);
  }
}

TEST(Pack, AllSoftLayout) {
  const auto bytes = pack(Microstructure::all_soft(kGrid8x4));
  EXPECT_EQ(bytes, (std::vector<std::uint8_t>{8, 4, 0xFF, 0xFF, 0xFF, 0xFF}));
  EXPECT_EQ(packed_size(kGrid16x8), 2u + 16u);
  EXPECT_EQ(packed_size(kGrid4x2), 3u);
}

TEST(Pack, LsbFirstBitOrder) {
  auto m = Microstructure::all_stiff(kGrid4x2);
  m.set(0, true);
  m.set(7, true);
  EXPECT_EQ(pack(m), (std::vector<std::uint8_t>{4, 2, 0x81}));
}

TEST(Pack, RoundTripRandomGenomes) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const GridSize g = i % 2 ? kGrid16x8 : kGrid8x4;
    const auto m = Microstructure::random_uniform(g, rng);
    EXPECT_EQ(unpack(pack(m)), m);
  }
}

TEST(Pack, TruncationAndDimensionErrors) {
  EXPECT_THROW(unpack(std::vector<std::uint8_t>{}), FormatError);
  EXPECT_THROW(unpack(std::vector<std::uint8_t>{8, 4, 0xFF}), FormatError);
  EXPECT_THROW(unpack(std::vector<std::uint8_t>{7, 3, 0xFF, 0xFF, 0xFF}), FormatError);
  EXPECT_THROW(unpack(pack(Microstructure::all_soft(kGrid8x4)), kGrid16x8), FormatError);
}

TEST(VolumeFraction, Granularity) {
  EXPECT_EQ(volume_fraction_soft(Microstructure::all_stiff(kGrid16x8)), 0.0);
  EXPECT_EQ(volume_fraction_soft(Microstructure::all_soft(kGrid16x8)), 1.0);
  auto m = Microstructure::all_stiff(kGrid16x8);
  m.set(0, true);
  m.set(5, true);
  m.set(100, true);
  EXPECT_NEAR(volume_fraction_soft(m), 3.0 / 128.0, 1e-15);
  EXPECT_NEAR(100 * volume_fraction_soft(m), 2.34, 5e-3);
}

TEST(FromIndex, GeneBitsFollowCode) {
  const auto m = Microstructure::from_index(kGrid4x2, 0b10100001);
  EXPECT_TRUE(m.is_soft(0));
  EXPECT_FALSE(m.is_soft(1));
  EXPECT_TRUE(m.is_soft(5));
  EXPECT_TRUE(m.is_soft(1, 3));
  EXPECT_EQ(m.soft_count(), 3);
}
