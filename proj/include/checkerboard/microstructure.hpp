#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "checkerboard/rng.hpp"

namespace checkerboard {

/// Grid of the half model: `width` elements across, `height` = width / 2
/// elements from the symmetry line upward.
struct GridSize {
  int width = 0;
  int height = 0;

  int elements() const noexcept { return width * height; }
  friend bool operator==(const GridSize&, const GridSize&) = default;
};

inline constexpr GridSize kGrid4x2{4, 2};
inline constexpr GridSize kGrid8x4{8, 4};
inline constexpr GridSize kGrid16x8{16, 8};

/// Throws ArgumentError unless the grid is one of the supported half-model sizes.
void validate_grid(GridSize grid);

/// Two-phase checkerboard on the half model.
///
/// Genome index g, element (row, col) and image pixel (row, col) all refer to
/// the same element via g = row * width + col. Row 0 lies on the symmetry line
/// and contains the crack-tip ligament element; rows grow upward. A set bit
/// (1) is the soft phase, a clear bit (0) the stiff phase.
class Microstructure {
 public:
  Microstructure() = default;
  Microstructure(GridSize grid, std::vector<std::uint8_t> bits);

  static Microstructure all_stiff(GridSize grid);
  static Microstructure all_soft(GridSize grid);
  /// Each bit independently soft with probability 1/2; reproducible from `seed`.
  static Microstructure random_uniform(GridSize grid, std::uint64_t seed);
  static Microstructure random_uniform(GridSize grid, Rng& rng);
  /// Bits taken from the low `grid.elements()` bits of `code` (bit g = gene g).
  static Microstructure from_index(GridSize grid, std::uint64_t code);

  GridSize grid() const noexcept { return grid_; }
  int width() const noexcept { return grid_.width; }
  int height() const noexcept { return grid_.height; }
  std::size_t size() const noexcept { return bits_.size(); }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  bool is_soft(int gene) const { return bits_[static_cast<std::size_t>(gene)] != 0; }
  bool is_soft(int row, int col) const { return is_soft(gene_index(row, col)); }
  void set(int gene, bool soft) { bits_[static_cast<std::size_t>(gene)] = soft ? 1 : 0; }

  int gene_index(int row, int col) const noexcept { return row * grid_.width + col; }
  int soft_count() const noexcept;

  friend bool operator==(const Microstructure&, const Microstructure&) = default;
  friend auto operator<=>(const Microstructure& a, const Microstructure& b) {
    return a.bits_ <=> b.bits_;
  }

 private:
  GridSize grid_{};
  std::vector<std::uint8_t> bits_;
};

double volume_fraction_soft(const Microstructure& m);

/// Row-major (height x width) image, pixel = 0.0 for stiff and 1.0 for soft.
std::vector<double> to_image(const Microstructure& m);
/// Inverse of to_image; pixels >= 0.5 decode as soft.
Microstructure from_image(GridSize grid, std::span<const double> pixels);

/// Packed genome record: [width, height] header bytes, then ceil(bits / 8)
/// bytes with gene g stored in byte g / 8 at bit position g % 8 (LSB first).
std::size_t packed_size(GridSize grid);
std::vector<std::uint8_t> pack(const Microstructure& m);
void pack_into(const Microstructure& m, std::span<std::uint8_t> out);
/// Throws FormatError on a truncated buffer or when the header disagrees with
/// `expected` (if given).
Microstructure unpack(std::span<const std::uint8_t> bytes);
Microstructure unpack(std::span<const std::uint8_t> bytes, GridSize expected);

}  // namespace checkerboard
