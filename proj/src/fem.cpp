#include "checkerboard/fem.hpp"

#include <cmath>
#include <string>

#include "checkerboard/error.hpp"

namespace checkerboard::fem {
namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)
constexpr std::array<double, 4> kCornerXi{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kCornerEta{-1.0, -1.0, 1.0, 1.0};
constexpr std::array<double, 4> kPointXi{-kGauss, kGauss, kGauss, -kGauss};
constexpr std::array<double, 4> kPointEta{-kGauss, -kGauss, kGauss, kGauss};

using StrainDisplacement = Eigen::Matrix<double, 3, 8>;

Eigen::Matrix3d plane_stress_matrix(const ElasticMaterial& m) {
  const double e = m.youngs_modulus;
  const double nu = m.poisson_ratio;
  const double c = e / (1.0 - nu * nu);
  Eigen::Matrix3d d;
  d << c, c * nu, 0.0,
       c * nu, c, 0.0,
       0.0, 0.0, c * (1.0 - nu) / 2.0;
  return d;
}

// Rows: e11, e22, gamma12 (engineering shear).
StrainDisplacement strain_displacement(double xi, double eta, double element_size) {
  StrainDisplacement b = StrainDisplacement::Zero();
  const double scale = 2.0 / element_size;
  for (int a = 0; a < 4; ++a) {
    const double dx = 0.25 * kCornerXi[a] * (1.0 + eta * kCornerEta[a]) * scale;
    const double dy = 0.25 * kCornerEta[a] * (1.0 + xi * kCornerXi[a]) * scale;
    b(0, 2 * a) = dx;
    b(1, 2 * a + 1) = dy;
    b(2, 2 * a) = dy;
    b(2, 2 * a + 1) = dx;
  }
  return b;
}

}  // namespace

void ElasticMaterial::validate() const {
  if (!(youngs_modulus > 0.0)) throw ArgumentError("Young's modulus must be positive");
  if (!(poisson_ratio > 0.0 && poisson_ratio < 0.5))
    throw ArgumentError("Poisson ratio must lie in (0, 0.5)");
  if (!(failure_strain > 0.0)) throw ArgumentError("failure strain must be positive");
}

ElementMatrix element_stiffness(const ElasticMaterial& material, double element_size) {
  material.validate();
  const Eigen::Matrix3d d = plane_stress_matrix(material);
  const double det_j = 0.25 * element_size * element_size;
  ElementMatrix k = ElementMatrix::Zero();
  for (int p = 0; p < 4; ++p) {
    const StrainDisplacement b = strain_displacement(kPointXi[p], kPointEta[p], element_size);
    k.noalias() += b.transpose() * d * b * det_j;
  }
  return 0.5 * (k + k.transpose());
}

HalfModelMesh::HalfModelMesh(GridSize grid, double crack_fraction)
    : nx_(grid.width), ny_(grid.height), element_size_(1.0 / grid.width) {
  validate_grid(grid);
  if (crack_fraction < 0.0 || crack_fraction >= 1.0)
    throw ArgumentError("crack fraction must lie in [0, 1)");
  crack_elements_ = static_cast<int>(std::lround(crack_fraction * nx_));
}

Eigen::Vector2d HalfModelMesh::node_position(int node) const {
  const int i = node % (nx_ + 1);
  const int j = node / (nx_ + 1);
  return {i * element_size_, j * element_size_};
}

std::array<int, 4> HalfModelMesh::element_nodes(int element) const noexcept {
  const int row = element / nx_;
  const int col = element % nx_;
  return {node_id(col, row), node_id(col + 1, row), node_id(col + 1, row + 1),
          node_id(col, row + 1)};
}

std::array<int, 8> HalfModelMesh::element_dofs(int element) const noexcept {
  const auto nodes = element_nodes(element);
  std::array<int, 8> dofs{};
  for (int a = 0; a < 4; ++a) {
    dofs[2 * a] = 2 * nodes[a];
    dofs[2 * a + 1] = 2 * nodes[a] + 1;
  }
  return dofs;
}

StrainState ElementState::averaged_strain() const {
  StrainState avg;
  for (const auto& p : points) {
    avg.e11 += p.strain.e11;
    avg.e22 += p.strain.e22;
    avg.e12 += p.strain.e12;
    avg.e33 += p.strain.e33;
  }
  avg.e11 /= 4.0;
  avg.e22 /= 4.0;
  avg.e12 /= 4.0;
  avg.e33 /= 4.0;
  return avg;
}

double von_mises_strain(const StrainState& s) {
  return (2.0 / 3.0) *
         std::sqrt(1.5 * (s.e11 * s.e11 + s.e22 * s.e22 + s.e33 * s.e33) + 0.75 * s.e12 * s.e12);
}

Solver::Solver(GridSize grid, MaterialPair materials, SolverOptions options)
    : mesh_(grid, options.crack_fraction), materials_(materials) {
  materials_.validate();
  k_stiff_ = element_stiffness(materials_.stiff, mesh_.element_size());
  k_soft_ = element_stiffness(materials_.soft, mesh_.element_size());
  k_stiff_(0, 0) += options.stiffness_perturbation;
  k_soft_(0, 0) += options.stiffness_perturbation;

  const int dofs = mesh_.dof_count();
  dof_to_free_.assign(static_cast<std::size_t>(dofs), 0);
  prescribed_unit_ = Eigen::VectorXd::Zero(dofs);
  auto constrain = [&](int dof, double value) {
    dof_to_free_[static_cast<std::size_t>(dof)] = -1;
    prescribed_unit_[dof] = value;
  };
  for (int i = mesh_.crack_elements(); i <= mesh_.nx(); ++i)
    constrain(2 * mesh_.node_id(i, 0) + 1, 0.0);
  for (int i = 0; i <= mesh_.nx(); ++i) constrain(2 * mesh_.node_id(i, mesh_.ny()) + 1, 1.0);
  constrain(2 * mesh_.node_id(mesh_.crack_elements(), 0), 0.0);

  for (int dof = 0; dof < dofs; ++dof) {
    if (dof_to_free_[static_cast<std::size_t>(dof)] < 0) {
      constrained_.push_back(dof);
    } else {
      dof_to_free_[static_cast<std::size_t>(dof)] = free_count_++;
    }
  }
  k_free_.resize(free_count_, free_count_);
  k_coupled_.resize(free_count_, static_cast<Eigen::Index>(constrained_.size()));
}

void Solver::check_grid(const Microstructure& m) const {
  if (m.grid() != mesh_.grid())
    throw ArgumentError("microstructure grid " + std::to_string(m.width()) + "x" +
                        std::to_string(m.height()) + " does not match mesh " +
                        std::to_string(mesh_.nx()) + "x" + std::to_string(mesh_.ny()));
}

Solution Solver::solve(const Microstructure& m, double applied_displacement) {
  check_grid(m);
  if (!(applied_displacement > 0.0)) throw ArgumentError("applied displacement must be positive");

  // Column index of each constrained DOF inside k_coupled_.
  std::vector<int> constrained_column(dof_to_free_.size(), -1);
  for (std::size_t c = 0; c < constrained_.size(); ++c)
    constrained_column[static_cast<std::size_t>(constrained_[c])] = static_cast<int>(c);

  k_free_.setZero();
  k_coupled_.setZero();
  for (int e = 0; e < mesh_.element_count(); ++e) {
    const ElementMatrix& ke = element_matrix(m.is_soft(e));
    const auto dofs = mesh_.element_dofs(e);
    for (int a = 0; a < 8; ++a) {
      const int fa = dof_to_free_[static_cast<std::size_t>(dofs[a])];
      if (fa < 0) continue;
      for (int b = 0; b < 8; ++b) {
        const int fb = dof_to_free_[static_cast<std::size_t>(dofs[b])];
        if (fb >= 0) {
          k_free_(fa, fb) += ke(a, b);
        } else {
          k_coupled_(fa, constrained_column[static_cast<std::size_t>(dofs[b])]) += ke(a, b);
        }
      }
    }
  }

  Eigen::VectorXd prescribed(static_cast<Eigen::Index>(constrained_.size()));
  for (std::size_t c = 0; c < constrained_.size(); ++c)
    prescribed[static_cast<Eigen::Index>(c)] = applied_displacement * prescribed_unit_[constrained_[c]];
  const Eigen::VectorXd load = -(k_coupled_ * prescribed);

  factor_.compute(k_free_);
  if (factor_.info() != Eigen::Success)
    throw NumericError("reduced stiffness matrix is not positive definite (missing constraint?)");
  const Eigen::VectorXd free_u = factor_.solve(load);

  Solution sol;
  sol.displacements = Eigen::VectorXd::Zero(mesh_.dof_count());
  for (std::size_t dof = 0; dof < dof_to_free_.size(); ++dof) {
    const int f = dof_to_free_[dof];
    sol.displacements[static_cast<Eigen::Index>(dof)] =
        f >= 0 ? free_u[f] : applied_displacement * prescribed_unit_[static_cast<Eigen::Index>(dof)];
  }

  sol.reactions = Eigen::VectorXd::Zero(mesh_.dof_count());
  for (int e = 0; e < mesh_.element_count(); ++e) {
    const auto dofs = mesh_.element_dofs(e);
    ElementVector ue;
    for (int a = 0; a < 8; ++a) ue[a] = sol.displacements[dofs[a]];
    const ElementVector fe = element_matrix(m.is_soft(e)) * ue;
    sol.strain_energy += 0.5 * ue.dot(fe);
    for (int a = 0; a < 8; ++a) sol.reactions[dofs[a]] += fe[a];
  }

  double residual_sq = 0.0;
  for (std::size_t dof = 0; dof < dof_to_free_.size(); ++dof)
    if (dof_to_free_[dof] >= 0) residual_sq += sol.reactions[static_cast<Eigen::Index>(dof)] *
                                              sol.reactions[static_cast<Eigen::Index>(dof)];
  const double load_norm = load.norm();
  sol.relative_residual = load_norm > 0.0 ? std::sqrt(residual_sq) / load_norm : std::sqrt(residual_sq);

  for (int dof : constrained_) sol.boundary_work += 0.5 * sol.reactions[dof] * sol.displacements[dof];
  for (int i = 0; i <= mesh_.nx(); ++i) {
    sol.top_reaction += sol.reactions[2 * mesh_.node_id(i, mesh_.ny()) + 1];
    if (i >= mesh_.crack_elements()) sol.ligament_reaction += sol.reactions[2 * mesh_.node_id(i, 0) + 1];
  }
  sol.constrained_dofs = constrained_;
  return sol;
}

ElementState Solver::element_state(const Microstructure& m, const Eigen::VectorXd& displacements,
                                   int element) const {
  check_grid(m);
  const ElasticMaterial& mat = materials_.of(m.is_soft(element));
  const Eigen::Matrix3d d = plane_stress_matrix(mat);
  const auto dofs = mesh_.element_dofs(element);
  ElementVector ue;
  for (int a = 0; a < 8; ++a) ue[a] = displacements[dofs[a]];

  ElementState state;
  for (int p = 0; p < 4; ++p) {
    const Eigen::Vector3d strain =
        strain_displacement(kPointXi[p], kPointEta[p], mesh_.element_size()) * ue;
    const Eigen::Vector3d stress = d * strain;
    PointState& ps = state.points[static_cast<std::size_t>(p)];
    ps.stress = {stress[0], stress[1], stress[2]};
    ps.strain.e11 = strain[0];
    ps.strain.e22 = strain[1];
    ps.strain.e12 = 0.5 * strain[2];
    ps.strain.e33 = -mat.poisson_ratio / mat.youngs_modulus * (stress[0] + stress[1]);
  }
  return state;
}

CompositeProperties Solver::evaluate(const Microstructure& m) {
  constexpr double kNominalStrain = 1.0;
  const double applied = kNominalStrain * mesh_.height();
  const Solution sol = solve(m, applied);

  const double nominal_stress = sol.top_reaction / mesh_.width();
  const int tip = mesh_.crack_tip_element();
  const double tip_strain = von_mises_strain(element_state(m, sol.displacements, tip).averaged_strain());
  if (!(tip_strain > 0.0) || !std::isfinite(tip_strain))
    throw NumericError("von Mises strain at the crack-tip element is zero; degenerate problem");

  const double scale = materials_.of(m.is_soft(tip)).failure_strain / tip_strain;
  CompositeProperties props;
  props.modulus = nominal_stress / kNominalStrain;
  props.strength = props.modulus * kNominalStrain * scale;
  props.toughness = 0.5 * props.strength * kNominalStrain * scale;
  return props;
}

CompositeProperties evaluate_properties(const Microstructure& m, const ElasticMaterial& stiff,
                                        const ElasticMaterial& soft) {
  Solver solver(m.grid(), MaterialPair{stiff, soft});
  return solver.evaluate(m);
}

}  // namespace checkerboard::fem
