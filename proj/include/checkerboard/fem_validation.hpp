#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "checkerboard/fem.hpp"

namespace checkerboard::fem {

/// Outcome of one analytical check. `error` is the quantity compared against
/// `tolerance` (a relative or absolute deviation, see `detail`).
struct CheckResult {
  std::string name;
  double measured = 0;
  double expected = 0;
  double error = 0;
  double tolerance = 0;
  bool passed = false;
  std::string detail;
};

struct ValidationOptions {
  GridSize grid = kGrid8x4;
  MaterialPair materials{};
  /// Random microstructures used by the sweep checks.
  int random_samples = 100;
  std::uint64_t seed = 1;
  /// Test hook forwarded to SolverOptions; nonzero values must make checks fail.
  double stiffness_perturbation = 0.0;
};

/// Independent element stiffness: the plane-stress integrand evaluated in
/// physical coordinates with 3x3 Simpson quadrature (exact for the bilinear
/// square element).
ElementMatrix reference_element_stiffness(const ElasticMaterial& material, double element_size);

/// The full analytical suite: element symmetry, rigid-body null space,
/// E-linearity and quadrature agreement; homogeneous uncracked patch test;
/// all-stiff / all-soft ratios; global E scaling; energy balance, vertical
/// equilibrium, solver residual and the linear-response toughness identity
/// over random microstructures.
std::vector<CheckResult> run_validation(const ValidationOptions& options = {});

bool all_passed(const std::vector<CheckResult>& results);
void write_report(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace checkerboard::fem
