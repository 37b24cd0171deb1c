#include "checkerboard/microstructure.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "checkerboard/error.hpp"

namespace checkerboard {

void validate_grid(GridSize grid) {
  if (grid == kGrid4x2 || grid == kGrid8x4 || grid == kGrid16x8) return;
  throw ArgumentError("unsupported grid " + std::to_string(grid.width) + "x" +
                      std::to_string(grid.height) + " (expected 4x2, 8x4 or 16x8)");
}

Microstructure::Microstructure(GridSize grid, std::vector<std::uint8_t> bits)
    : grid_(grid), bits_(std::move(bits)) {
  validate_grid(grid);
  if (bits_.size() != static_cast<std::size_t>(grid.elements()))
    throw ArgumentError("microstructure has " + std::to_string(bits_.size()) +
                        " genes, grid needs " + std::to_string(grid.elements()));
  for (auto& b : bits_) b = b ? 1 : 0;
}

Microstructure Microstructure::all_stiff(GridSize grid) {
  validate_grid(grid);
  return {grid, std::vector<std::uint8_t>(static_cast<std::size_t>(grid.elements()), 0)};
}

Microstructure Microstructure::all_soft(GridSize grid) {
  validate_grid(grid);
  return {grid, std::vector<std::uint8_t>(static_cast<std::size_t>(grid.elements()), 1)};
}

Microstructure Microstructure::random_uniform(GridSize grid, std::uint64_t seed) {
  Rng rng(seed);
  return random_uniform(grid, rng);
}

Microstructure Microstructure::random_uniform(GridSize grid, Rng& rng) {
  validate_grid(grid);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(grid.elements()));
  std::uint64_t word = 0;
  for (std::size_t g = 0; g < bits.size(); ++g) {
    if (g % 64 == 0) word = rng();
    bits[g] = static_cast<std::uint8_t>((word >> (g % 64)) & 1U);
  }
  return {grid, std::move(bits)};
}

Microstructure Microstructure::from_index(GridSize grid, std::uint64_t code) {
  validate_grid(grid);
  if (grid.elements() > 64) throw ArgumentError("from_index supports at most 64 genes");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(grid.elements()));
  for (std::size_t g = 0; g < bits.size(); ++g) bits[g] = (code >> g) & 1U;
  return {grid, std::move(bits)};
}

int Microstructure::soft_count() const noexcept {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double volume_fraction_soft(const Microstructure& m) {
  if (m.size() == 0) return 0.0;
  return static_cast<double>(m.soft_count()) / static_cast<double>(m.size());
}

std::vector<double> to_image(const Microstructure& m) {
  std::vector<double> image(m.size());
  std::transform(m.bits().begin(), m.bits().end(), image.begin(),
                 [](std::uint8_t b) { return b ? 1.0 : 0.0; });
  return image;
}

Microstructure from_image(GridSize grid, std::span<const double> pixels) {
  std::vector<std::uint8_t> bits(pixels.size());
  std::transform(pixels.begin(), pixels.end(), bits.begin(),
                 [](double p) -> std::uint8_t { return p >= 0.5 ? 1 : 0; });
  return {grid, std::move(bits)};
}

std::size_t packed_size(GridSize grid) {
  return 2 + (static_cast<std::size_t>(grid.elements()) + 7) / 8;
}

void pack_into(const Microstructure& m, std::span<std::uint8_t> out) {
  if (out.size() < packed_size(m.grid())) throw ArgumentError("pack buffer too small");
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(packed_size(m.grid())), 0);
  out[0] = static_cast<std::uint8_t>(m.width());
  out[1] = static_cast<std::uint8_t>(m.height());
  for (std::size_t g = 0; g < m.size(); ++g)
    if (m.bits()[g]) out[2 + g / 8] |= static_cast<std::uint8_t>(1U << (g % 8));
}

std::vector<std::uint8_t> pack(const Microstructure& m) {
  std::vector<std::uint8_t> out(packed_size(m.grid()));
  pack_into(m, out);
  return out;
}

Microstructure unpack(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw FormatError("truncated genome record: missing dimension header");
  const GridSize grid{bytes[0], bytes[1]};
  try {
    validate_grid(grid);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("genome record: ") + e.what());
  }
  if (bytes.size() < packed_size(grid))
    throw FormatError("truncated genome record: need " + std::to_string(packed_size(grid)) +
                      " bytes, have " + std::to_string(bytes.size()));
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(grid.elements()));
  for (std::size_t g = 0; g < bits.size(); ++g) bits[g] = (bytes[2 + g / 8] >> (g % 8)) & 1U;
  return {grid, std::move(bits)};
}

Microstructure unpack(std::span<const std::uint8_t> bytes, GridSize expected) {
  if (bytes.size() >= 2 && (bytes[0] != expected.width || bytes[1] != expected.height))
    throw FormatError("genome record dimensions " + std::to_string(bytes[0]) + "x" +
                      std::to_string(bytes[1]) + " do not match expected " +
                      std::to_string(expected.width) + "x" + std::to_string(expected.height));
  return unpack(bytes);
}

}  // namespace checkerboard
