#include "checkerboard/fem_validation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "checkerboard/rng.hpp"

namespace checkerboard::fem {
namespace {

double relative(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

CheckResult make(std::string name, double measured, double expected, double error, double tolerance,
                 std::string detail) {
  return {std::move(name), measured, expected, error, tolerance, std::isfinite(error) && error <= tolerance,
          std::move(detail)};
}

// Rigid translations in x and y, and the infinitesimal rotation about the
// element centre, for a square element of side h.
std::array<ElementVector, 3> rigid_modes(double h) {
  constexpr std::array<double, 4> cx{0.0, 1.0, 1.0, 0.0};
  constexpr std::array<double, 4> cy{0.0, 0.0, 1.0, 1.0};
  std::array<ElementVector, 3> modes;
  for (auto& m : modes) m.setZero();
  for (int a = 0; a < 4; ++a) {
    modes[0][2 * a] = 1.0;
    modes[1][2 * a + 1] = 1.0;
    const double x = (cx[a] - 0.5) * h;
    const double y = (cy[a] - 0.5) * h;
    modes[2][2 * a] = -y;
    modes[2][2 * a + 1] = x;
  }
  return modes;
}

}  // namespace

ElementMatrix reference_element_stiffness(const ElasticMaterial& material, double h) {
  material.validate();
  const double e = material.youngs_modulus;
  const double nu = material.poisson_ratio;
  const double c = e / (1.0 - nu * nu);
  Eigen::Matrix3d d;
  d << c, c * nu, 0, c * nu, c, 0, 0, 0, c * (1 - nu) / 2;

  // Shape functions on [0, h]^2, corners (0,0), (h,0), (h,h), (0,h).
  auto grads = [h](double x, double y) {
    std::array<std::array<double, 2>, 4> g{};
    const double s = 1.0 / (h * h);
    g[0] = {-(h - y) * s, -(h - x) * s};
    g[1] = {(h - y) * s, -x * s};
    g[2] = {y * s, x * s};
    g[3] = {-y * s, (h - x) * s};
    return g;
  };
  constexpr std::array<double, 3> kWeights{1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};
  ElementMatrix k = ElementMatrix::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto g = grads(0.5 * h * i, 0.5 * h * j);
      Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
      for (int a = 0; a < 4; ++a) {
        b(0, 2 * a) = g[a][0];
        b(1, 2 * a + 1) = g[a][1];
        b(2, 2 * a) = g[a][1];
        b(2, 2 * a + 1) = g[a][0];
      }
      k += kWeights[i] * kWeights[j] * h * h * (b.transpose() * d * b);
    }
  }
  return k;
}

std::vector<CheckResult> run_validation(const ValidationOptions& options) {
  options.materials.validate();
  std::vector<CheckResult> out;
  SolverOptions cracked;
  cracked.stiffness_perturbation = options.stiffness_perturbation;
  SolverOptions uncracked = cracked;
  uncracked.crack_fraction = 0.0;

  Solver solver(options.grid, options.materials, cracked);
  const double h = solver.mesh().element_size();
  const ElementMatrix& k = solver.element_matrix(false);

  out.push_back(make("element_symmetry", (k - k.transpose()).norm() / k.norm(), 0.0,
                     (k - k.transpose()).norm() / k.norm(), 1e-14, "||K - K^T|| / ||K||"));

  double null_residual = 0.0;
  for (const auto& mode : rigid_modes(h)) null_residual = std::max(null_residual, (k * mode).norm() / (k.norm() * mode.norm()));
  out.push_back(make("element_rigid_body_null_space", null_residual, 0.0, null_residual, 1e-13,
                     "max ||K r|| / (||K|| ||r||) over 3 rigid modes"));

  const Eigen::SelfAdjointEigenSolver<ElementMatrix> eig(k);
  const auto& ev = eig.eigenvalues();
  const double gap = ev[3] > 0.0 ? std::abs(ev[2]) / ev[3] : 1.0;
  out.push_back(make("element_three_zero_eigenvalues", gap, 0.0, gap, 1e-12,
                     "|lambda_3| / lambda_4 (exactly three zero eigenvalues)"));

  {
    ElasticMaterial scaled = options.materials.stiff;
    scaled.youngs_modulus *= 3.5;
    SolverOptions s = cracked;
    MaterialPair pair{scaled, options.materials.soft};
    Solver scaled_solver(options.grid, pair, s);
    const double err = (scaled_solver.element_matrix(false) - 3.5 * k).norm() / (3.5 * k.norm());
    out.push_back(make("element_linear_in_E", err, 0.0, err, 1e-12,
                       "||K(3.5 E) - 3.5 K(E)|| / ||3.5 K(E)||"));
  }

  {
    const ElementMatrix ref = reference_element_stiffness(options.materials.stiff, h);
    const double err = (k - ref).norm() / ref.norm();
    out.push_back(make("element_matches_reference_quadrature", k(0, 0), ref(0, 0), err, 1e-12,
                       "||K - K_simpson|| / ||K_simpson||; measured/expected show entry (0,0)"));
  }

  {
    Solver patch(options.grid, options.materials, uncracked);
    const Microstructure stiff = Microstructure::all_stiff(options.grid);
    const CompositeProperties p = patch.evaluate(stiff);
    const double e = options.materials.stiff.youngs_modulus;
    out.push_back(make("patch_test_modulus", p.modulus, e, relative(p.modulus, e), 1e-10,
                       "uncracked homogeneous modulus vs E"));

    const double delta = 0.01;
    const Solution sol = patch.solve(stiff, delta);
    const double e22 = delta / patch.mesh().height();
    double worst = 0.0;
    for (int el = 0; el < patch.mesh().element_count(); ++el) {
      const ElementState st = patch.element_state(stiff, sol.displacements, el);
      for (const auto& pt : st.points) {
        worst = std::max(worst, std::abs(pt.strain.e22 - e22) / e22);
        worst = std::max(worst, std::abs(pt.strain.e11 + options.materials.stiff.poisson_ratio * e22) / e22);
        worst = std::max(worst, std::abs(pt.strain.e12) / e22);
      }
    }
    out.push_back(make("patch_test_uniform_strain", e22 * (1.0 + worst), e22, worst, 1e-10,
                       "max deviation from e22 = delta/height, e11 = -nu e22, e12 = 0 (relative to e22)"));
  }

  {
    const CompositeProperties s = solver.evaluate(Microstructure::all_stiff(options.grid));
    const CompositeProperties f = solver.evaluate(Microstructure::all_soft(options.grid));
    const double modulus_ratio = s.modulus / f.modulus;
    const double expected_modulus = options.materials.stiff.youngs_modulus / options.materials.soft.youngs_modulus;
    out.push_back(make("homogeneous_modulus_ratio", modulus_ratio, expected_modulus,
                       relative(modulus_ratio, expected_modulus), 1e-9, "all-stiff / all-soft modulus"));
    const double strength_ratio = s.strength / f.strength;
    const double expected_strength = expected_modulus * options.materials.stiff.failure_strain /
                                     options.materials.soft.failure_strain;
    out.push_back(make("homogeneous_strength_ratio", strength_ratio, expected_strength,
                       relative(strength_ratio, expected_strength), 1e-9, "all-stiff / all-soft strength"));
    const double toughness_ratio = s.toughness / f.toughness;
    const double expected_toughness = expected_strength * options.materials.stiff.failure_strain /
                                      options.materials.soft.failure_strain;
    out.push_back(make("homogeneous_toughness_ratio", toughness_ratio, expected_toughness,
                       relative(toughness_ratio, expected_toughness), 1e-9, "all-stiff / all-soft toughness"));
  }

  Rng rng(domain_seed(options.seed, "validation"));
  std::vector<Microstructure> samples;
  for (int i = 0; i < options.random_samples; ++i) samples.push_back(Microstructure::random_uniform(options.grid, rng));

  {
    constexpr double kScale = 2.75;
    MaterialPair scaled = options.materials;
    scaled.stiff.youngs_modulus *= kScale;
    scaled.soft.youngs_modulus *= kScale;
    Solver scaled_solver(options.grid, scaled, cracked);
    double worst = 0.0;
    for (const auto& m : samples) {
      const CompositeProperties a = solver.evaluate(m);
      const CompositeProperties b = scaled_solver.evaluate(m);
      worst = std::max({worst, relative(b.modulus, kScale * a.modulus), relative(b.strength, kScale * a.strength),
                        relative(b.toughness, kScale * a.toughness)});
    }
    out.push_back(make("global_E_scaling", kScale * (1.0 + worst), kScale, worst, 1e-12,
                       "max relative deviation of properties(2.75 E) from 2.75 properties(E)"));
  }

  double energy = 0.0, equilibrium = 0.0, residual = 0.0, identity = 0.0;
  for (const auto& m : samples) {
    const Solution sol = solver.solve(m, solver.mesh().height());
    energy = std::max(energy, relative(sol.strain_energy, sol.boundary_work));
    equilibrium = std::max(equilibrium, std::abs(sol.top_reaction + sol.ligament_reaction) / std::abs(sol.top_reaction));
    residual = std::max(residual, sol.relative_residual);
    const CompositeProperties p = solver.evaluate(m);
    identity = std::max(identity, relative(p.toughness, p.strength * p.strength / (2.0 * p.modulus)));
  }
  out.push_back(make("energy_balance", energy, 0.0, energy, 1e-9,
                     "max |U - W| / max(U, W), U = 1/2 u^T K u, W = 1/2 sum reaction * prescribed"));
  out.push_back(make("vertical_equilibrium", equilibrium, 0.0, equilibrium, 1e-10,
                     "max |R_top + R_ligament| / |R_top|"));
  out.push_back(make("solver_residual", residual, 0.0, residual, 1e-10, "max relative residual"));
  out.push_back(make("toughness_identity", identity, 0.0, identity, 1e-12,
                     "max relative deviation of toughness from strength^2 / (2 modulus)"));
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

void write_report(std::ostream& out, const std::vector<CheckResult>& results) {
  const auto flags = out.flags();
  out << std::setprecision(6);
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(40) << r.name << std::right
        << " measured=" << std::setw(13) << r.measured << " expected=" << std::setw(13) << r.expected
        << " error=" << std::setw(12) << r.error << " tol=" << r.tolerance << "  (" << r.detail << ")\n";
  }
  out.flags(flags);
}

}  // namespace checkerboard::fem
