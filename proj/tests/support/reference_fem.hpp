#pragma once

// Second, deliberately naive FE path used as an oracle: full global matrix,
// boundary conditions by row replacement, Gaussian elimination with partial
// pivoting, element matrices from Simpson quadrature and crack-tip strain from
// centroid differences.

#include <cmath>
#include <utility>
#include <vector>

#include "checkerboard/fem.hpp"
#include "checkerboard/fem_validation.hpp"

namespace reference {

using checkerboard::GridSize;
using checkerboard::Microstructure;
using checkerboard::fem::CompositeProperties;
using checkerboard::fem::MaterialPair;

struct Result {
  std::vector<double> u;
  double top_reaction = 0;
};

inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

inline Result solve(const Microstructure& m, const MaterialPair& mat, double delta, double crack_fraction = 0.25) {
  const int nx = m.width(), ny = m.height();
  const double h = 1.0 / nx;
  const int crack = static_cast<int>(std::lround(crack_fraction * nx));
  const auto node = [nx](int i, int j) { return j * (nx + 1) + i; };
  const std::size_t n = static_cast<std::size_t>(2 * (nx + 1) * (ny + 1));
  std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
  const auto ks = checkerboard::fem::reference_element_stiffness(mat.stiff, h);
  const auto kf = checkerboard::fem::reference_element_stiffness(mat.soft, h);
  for (int row = 0; row < ny; ++row) {
    for (int col = 0; col < nx; ++col) {
      const auto& ke = m.is_soft(row, col) ? kf : ks;
      const int nodes[4] = {node(col, row), node(col + 1, row), node(col + 1, row + 1), node(col, row + 1)};
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
          k[static_cast<std::size_t>(2 * nodes[a / 2] + a % 2)][static_cast<std::size_t>(2 * nodes[b / 2] + b % 2)] +=
              ke(a, b);
    }
  }
  const auto full = k;
  std::vector<double> rhs(n, 0.0);
  auto fix = [&](int dof, double value) {
    auto& r = k[static_cast<std::size_t>(dof)];
    std::fill(r.begin(), r.end(), 0.0);
    r[static_cast<std::size_t>(dof)] = 1.0;
    rhs[static_cast<std::size_t>(dof)] = value;
  };
  for (int i = crack; i <= nx; ++i) fix(2 * node(i, 0) + 1, 0.0);
  for (int i = 0; i <= nx; ++i) fix(2 * node(i, ny) + 1, delta);
  fix(2 * node(crack, 0), 0.0);

  Result r;
  r.u = gauss_solve(std::move(k), std::move(rhs));
  for (int i = 0; i <= nx; ++i) {
    const std::size_t dof = static_cast<std::size_t>(2 * node(i, ny) + 1);
    for (std::size_t c = 0; c < n; ++c) r.top_reaction += full[dof][c] * r.u[c];
  }
  return r;
}

inline CompositeProperties properties(const Microstructure& m, const MaterialPair& mat) {
  const int nx = m.width(), ny = m.height();
  const double h = 1.0 / nx;
  const double height = ny * h;
  const Result r = solve(m, mat, height);
  const int crack = static_cast<int>(std::lround(0.25 * nx));
  const auto node = [nx](int i, int j) { return j * (nx + 1) + i; };
  const auto ux = [&](int i, int j) { return r.u[static_cast<std::size_t>(2 * node(i, j))]; };
  const auto uy = [&](int i, int j) { return r.u[static_cast<std::size_t>(2 * node(i, j) + 1)]; };
  const int c = crack;
  const double e11 = (ux(c + 1, 0) + ux(c + 1, 1) - ux(c, 0) - ux(c, 1)) / (2 * h);
  const double e22 = (uy(c, 1) + uy(c + 1, 1) - uy(c, 0) - uy(c + 1, 0)) / (2 * h);
  const double du_dy = (ux(c, 1) + ux(c + 1, 1) - ux(c, 0) - ux(c + 1, 0)) / (2 * h);
  const double dv_dx = (uy(c + 1, 0) + uy(c + 1, 1) - uy(c, 0) - uy(c, 1)) / (2 * h);
  const double e12 = 0.5 * (du_dy + dv_dx);
  const auto& tip = mat.of(m.is_soft(0, c));
  const double nu = tip.poisson_ratio;
  const double e33 = -nu / (1.0 - nu) * (e11 + e22);
  const double vm = (2.0 / 3.0) * std::sqrt(1.5 * (e11 * e11 + e22 * e22 + e33 * e33) + 0.75 * e12 * e12);
  const double s = tip.failure_strain / vm;
  CompositeProperties p;
  p.modulus = r.top_reaction / 1.0;
  p.strength = p.modulus * s;
  p.toughness = 0.5 * p.strength * s;
  return p;
}

}  // namespace reference
