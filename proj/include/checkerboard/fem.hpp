#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "checkerboard/microstructure.hpp"

namespace checkerboard::fem {

/// Isotropic linear-elastic phase. Moduli in GPa, strains dimensionless.
struct ElasticMaterial {
  double youngs_modulus = 1.0;
  double poisson_ratio = 1.0 / 3.0;
  /// von Mises strain at which the phase fails.
  double failure_strain = 0.1;

  /// Throws ArgumentError when E <= 0, nu outside (0, 0.5) or failure strain <= 0.
  void validate() const;
  /// K = E / (3 (1 - 2 nu)). Documented for completeness; the plane-stress
  /// assembly does not need it.
  double bulk_modulus() const { return youngs_modulus / (3.0 * (1.0 - 2.0 * poisson_ratio)); }
};

struct MaterialPair {
  ElasticMaterial stiff{1.0, 1.0 / 3.0, 0.10};
  ElasticMaterial soft{0.1, 1.0 / 3.0, 1.00};

  void validate() const {
    stiff.validate();
    soft.validate();
  }
  const ElasticMaterial& of(bool is_soft) const { return is_soft ? soft : stiff; }
};

using ElementMatrix = Eigen::Matrix<double, 8, 8>;
using ElementVector = Eigen::Matrix<double, 8, 1>;

/// Plane-stress bilinear quadrilateral stiffness of a square element of side
/// `element_size` and unit thickness, integrated with 2x2 Gauss points.
/// Element DOFs are (ux, uy) of the corners in counter-clockwise order from
/// the lower-left corner.
ElementMatrix element_stiffness(const ElasticMaterial& material, double element_size);

/// Structured mesh of the upper half of the cracked plate (L = 1, height L/2).
///
/// The symmetry line is y = 0. Its first `crack_elements` element edges form the
/// crack faces (free); the remainder is the bonded ligament.
class HalfModelMesh {
 public:
  /// `crack_fraction` = l / L; 0 builds the uncracked validation geometry.
  explicit HalfModelMesh(GridSize grid, double crack_fraction = 0.25);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  GridSize grid() const noexcept { return {nx_, ny_}; }
  double element_size() const noexcept { return element_size_; }
  double width() const noexcept { return nx_ * element_size_; }
  double height() const noexcept { return ny_ * element_size_; }
  int crack_elements() const noexcept { return crack_elements_; }

  int node_count() const noexcept { return (nx_ + 1) * (ny_ + 1); }
  int dof_count() const noexcept { return 2 * node_count(); }
  int node_id(int i, int j) const noexcept { return j * (nx_ + 1) + i; }
  Eigen::Vector2d node_position(int node) const;

  int element_count() const noexcept { return nx_ * ny_; }
  /// Corner nodes (counter-clockwise from lower-left) of element (row, col).
  std::array<int, 4> element_nodes(int element) const noexcept;
  std::array<int, 8> element_dofs(int element) const noexcept;

  /// First bonded element on the symmetry line: its left edge sits at x = l.
  int crack_tip_element() const noexcept { return crack_elements_; }

 private:
  int nx_;
  int ny_;
  double element_size_;
  int crack_elements_;
};

/// Strain (tensorial shear, plus out-of-plane e33) and stress at a point.
struct StrainState {
  double e11 = 0, e22 = 0, e12 = 0, e33 = 0;
};
struct StressState {
  double s11 = 0, s22 = 0, s12 = 0;
};
struct PointState {
  StrainState strain;
  StressState stress;
};

/// Per-quadrature-point state of one element.
struct ElementState {
  std::array<PointState, 4> points;

  /// Gauss-point average of every strain component.
  StrainState averaged_strain() const;
};

/// (2/3) * sqrt( 3/2 (e11^2 + e22^2 + e33^2) + 3/4 e12^2 ), e12 tensorial.
double von_mises_strain(const StrainState& strain);

struct Solution {
  /// Nodal displacements, DOF 2n = ux, 2n+1 = uy of node n.
  Eigen::VectorXd displacements;
  /// K u for every DOF; nonzero only on constrained DOFs up to round-off.
  Eigen::VectorXd reactions;
  /// ||K_ff u_f + K_fc u_c|| / ||K_fc u_c||.
  double relative_residual = 0;
  double strain_energy = 0;
  /// 1/2 sum of reaction * prescribed displacement over constrained DOFs.
  double boundary_work = 0;
  double top_reaction = 0;
  double ligament_reaction = 0;
  std::vector<int> constrained_dofs;
};

struct CompositeProperties {
  double modulus = 0;
  double strength = 0;
  double toughness = 0;

  friend bool operator==(const CompositeProperties&, const CompositeProperties&) = default;
};

struct SolverOptions {
  double crack_fraction = 0.25;
  /// Added to the (0,0) entry of every element matrix. Zero in normal use;
  /// the validation suite uses it to prove its checks can fail.
  double stiffness_perturbation = 0.0;
};

/// Reusable FE evaluator for one grid. Owns its mesh, element matrices and
/// factorization workspace; give each worker thread its own instance.
class Solver {
 public:
  Solver(GridSize grid, MaterialPair materials, SolverOptions options = {});

  const HalfModelMesh& mesh() const noexcept { return mesh_; }
  const MaterialPair& materials() const noexcept { return materials_; }
  const ElementMatrix& element_matrix(bool soft) const { return soft ? k_soft_ : k_stiff_; }

  /// Displacement-controlled solve: symmetry-line ligament u_y = 0, crack
  /// faces free, top edge u_y = applied_displacement, and the crack-tip node
  /// pinned in u_x. Throws NumericError if the reduced system is singular.
  Solution solve(const Microstructure& m, double applied_displacement);

  ElementState element_state(const Microstructure& m, const Eigen::VectorXd& displacements,
                             int element) const;

  /// Modulus, strength and toughness of the cracked specimen from one solve at
  /// unit nominal strain (nominal strain = top displacement / model height).
  CompositeProperties evaluate(const Microstructure& m);

 private:
  void check_grid(const Microstructure& m) const;

  HalfModelMesh mesh_;
  MaterialPair materials_;
  ElementMatrix k_stiff_;
  ElementMatrix k_soft_;
  std::vector<int> dof_to_free_;  // -1 for constrained DOFs
  std::vector<int> constrained_;
  Eigen::VectorXd prescribed_unit_;  // prescribed values at applied_displacement = 1
  int free_count_ = 0;
  Eigen::MatrixXd k_free_;
  Eigen::MatrixXd k_coupled_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// One-shot convenience wrapper around Solver::evaluate.
CompositeProperties evaluate_properties(const Microstructure& m, const ElasticMaterial& stiff,
                                        const ElasticMaterial& soft);

}  // namespace checkerboard::fem
