#pragma once

#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdlab/errors.hpp"
#include "rdlab/parallel.hpp"

namespace rdlab {

/// Uniform cell-centred grid on (0,1) or (0,1)^2.
///
/// Cells are numbered row-major: index = j * nx + i with i along x.
class Grid {
 public:
  static Grid make(int dim, int nx, int ny = 0) {
    if (dim == 1) {
      if (nx < 4) throw InputError("grid needs at least 4 cells");
      return Grid(1, nx, 1);
    }
    if (dim == 2) {
      if (ny == 0) ny = nx;
      if (nx < 4 || ny < 4) throw InputError("grid needs at least 4 cells per direction");
      if (nx != ny) throw InputError("2D grids on the unit square need nx == ny for uniform spacing");
      return Grid(2, nx, ny);
    }
    throw InputError("grid dimension must be 1 or 2");
  }

  int dim() const noexcept { return dim_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double h() const noexcept { return 1.0 / nx_; }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }

  std::size_t index(int i, int j = 0) const noexcept { return static_cast<std::size_t>(j) * nx_ + i; }
  int ix(std::size_t cell) const noexcept { return static_cast<int>(cell % nx_); }
  int iy(std::size_t cell) const noexcept { return static_cast<int>(cell / nx_); }

  double x(std::size_t cell) const noexcept { return (ix(cell) + 0.5) / nx_; }
  double y(std::size_t cell) const noexcept { return dim_ == 2 ? (iy(cell) + 0.5) / ny_ : 0.0; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Grid(int dim, int nx, int ny) : dim_(dim), nx_(nx), ny_(ny) {}

  int dim_;
  int nx_;
  int ny_;
};

inline Grid build_grid(int dim, int n, int ny = 0) { return Grid::make(dim, n, ny); }

/// Assignment of every cell to one region 1..J.
class DomainPartition {
 public:
  DomainPartition(Grid grid, std::vector<int> assignment, int regions)
      : grid_(grid), assignment_(std::move(assignment)), regions_(regions) {
    if (assignment_.size() != grid_.cell_count()) throw InputError("partition size does not match the grid");
    if (regions_ < 1) throw InputError("partition needs at least one region");
    counts_.assign(regions_, 0);
    for (int r : assignment_) {
      if (r < 1 || r > regions_) {
        throw InputError("region index " + std::to_string(r) + " outside 1.." + std::to_string(regions_));
      }
      ++counts_[r - 1];
    }
  }

  /// Every cell in region 1, with `regions` regions declared.
  static DomainPartition uniform(const Grid& grid, int regions = 1) {
    return DomainPartition(grid, std::vector<int>(grid.cell_count(), 1), regions);
  }

  const Grid& grid() const noexcept { return grid_; }
  int regions() const noexcept { return regions_; }
  int region(std::size_t cell) const { return assignment_[cell]; }
  const std::vector<int>& assignment() const noexcept { return assignment_; }

  std::size_t count(int region) const { return counts_.at(region - 1); }

  /// |Omega_region| = (cell count) / (total cells).
  double measure(int region) const {
    return static_cast<double>(count(region)) / static_cast<double>(grid_.cell_count());
  }

  /// Sum of region measures, computed from integer counts.
  double total_measure() const {
    std::size_t total = 0;
    for (auto c : counts_) total += c;
    return static_cast<double>(total) / static_cast<double>(grid_.cell_count());
  }

  /// True when a cell within `width` cells (per axis) has another region.
  bool near_interface(std::size_t cell, int width = 2) const {
    const int i0 = grid_.ix(cell), j0 = grid_.iy(cell);
    const int r = assignment_[cell];
    const int jw = grid_.dim() == 2 ? width : 0;
    for (int dj = -jw; dj <= jw; ++dj) {
      for (int di = -width; di <= width; ++di) {
        const int i = i0 + di, j = j0 + dj;
        if (i < 0 || j < 0 || i >= grid_.nx() || j >= grid_.ny()) continue;
        if (assignment_[grid_.index(i, j)] != r) return true;
      }
    }
    return false;
  }

 private:
  Grid grid_;
  std::vector<int> assignment_;
  int regions_;
  std::vector<std::size_t> counts_;
};

/// Region 2 = cells whose centre has x in (lo, hi); everything else region 1.
inline DomainPartition stripe_partition(const Grid& grid, double lo, double hi) {
  std::vector<int> assignment(grid.cell_count(), 1);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const double x = grid.x(c);
    if (x > lo && x < hi) assignment[c] = 2;
  }
  return DomainPartition(grid, std::move(assignment), 2);
}

/// Centred stripe of width `fraction` (region 2).
inline DomainPartition centered_stripe(const Grid& grid, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InputError("stripe fraction must lie in [0, 1)");
  return stripe_partition(grid, 0.5 - 0.5 * fraction, 0.5 + 0.5 * fraction);
}

/// Neumann Laplacian on the cell-centred grid: 3-/5-point stencil with
/// reflected ghost cells, scaled by 1/h^2.
class NeumannLaplacian {
 public:
  explicit NeumannLaplacian(const Grid& grid)
      : grid_(grid), inv_h2_(static_cast<double>(grid.nx()) * grid.nx()) {  // 1/h^2 = n^2, exact
    const std::size_t n = grid.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * n);
    for (std::size_t c = 0; c < n; ++c) {
      int neighbours = 0;
      for_each_neighbour(c, [&](std::size_t nb) {
        trips.emplace_back(static_cast<int>(c), static_cast<int>(nb), inv_h2_);
        ++neighbours;
      });
      trips.emplace_back(static_cast<int>(c), static_cast<int>(c), -neighbours * inv_h2_);
    }
    matrix_.resize(static_cast<int>(n), static_cast<int>(n));
    matrix_.setFromTriplets(trips.begin(), trips.end());
    matrix_.makeCompressed();
  }

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::SparseMatrix<double>& matrix() const noexcept { return matrix_; }
  double inv_h2() const noexcept { return inv_h2_; }

  /// Calls fn(neighbour) for each in-domain neighbour; reflected ghosts drop out.
  template <class Fn>
  void for_each_neighbour(std::size_t c, Fn&& fn) const {
    const int i = grid_.ix(c), j = grid_.iy(c);
    if (i > 0) fn(c - 1);
    if (i + 1 < grid_.nx()) fn(c + 1);
    if (grid_.dim() == 2) {
      if (j > 0) fn(c - grid_.nx());
      if (j + 1 < grid_.ny()) fn(c + grid_.nx());
    }
  }

  /// (L v)_c = sum over neighbours of (v_nb - v_c) / h^2; exact zero on constants.
  double apply_at(std::span<const double> v, std::size_t c) const {
    const double vc = v[c];
    double acc = 0.0;
    const int i = grid_.ix(c), j = grid_.iy(c);
    if (i > 0) acc += v[c - 1] - vc;
    if (i + 1 < grid_.nx()) acc += v[c + 1] - vc;
    if (grid_.dim() == 2) {
      if (j > 0) acc += v[c - grid_.nx()] - vc;
      if (j + 1 < grid_.ny()) acc += v[c + grid_.nx()] - vc;
    }
    return acc * inv_h2_;
  }

  void apply(std::span<const double> v, std::span<double> out) const {
    for (std::size_t c = 0; c < grid_.cell_count(); ++c) out[c] = apply_at(v, c);
  }

  void apply(std::span<const double> v, std::span<double> out, WorkerPool& pool) const {
    pool.parallel_for(grid_.cell_count(), [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) out[c] = apply_at(v, c);
    });
  }

 private:
  Grid grid_;
  double inv_h2_;
  Eigen::SparseMatrix<double> matrix_;
};

inline NeumannLaplacian neumann_laplacian(const Grid& grid) { return NeumannLaplacian(grid); }

enum class SpectrumKind { Analytic, Discrete };

/// Eigenvalue of -Lap with its multiplicity.
struct LaplacianEigenvalue {
  double mu = 0.0;
  int multiplicity = 1;
};

/// Discrete 1D eigenvalue (4/h^2) sin^2(k pi / (2n)) of -L.
inline double discrete_mode_1d(int n, int k) {
  const double s = std::sin(k * std::numbers::pi / (2.0 * n));
  return 4.0 * n * n * s * s;
}

/// First `count` distinct eigenvalues of -Lap (Neumann), ascending.
///
/// Analytic: (k pi)^2 on (0,1), pi^2 (j^2 + k^2) on (0,1)^2. Discrete: the
/// eigenvalues of -L for this grid (sums of 1D values in 2D).
inline std::vector<LaplacianEigenvalue> laplacian_eigenvalues(const Grid& grid, std::size_t count, SpectrumKind kind) {
  if (count < 1) throw InputError("eigenvalue count must be at least 1");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  std::vector<LaplacianEigenvalue> out;
  if (grid.dim() == 1) {
    const int kmax = kind == SpectrumKind::Discrete ? std::min<int>(grid.nx(), static_cast<int>(count))
                                                    : static_cast<int>(count);
    for (int k = 0; k < kmax; ++k) {
      out.push_back({kind == SpectrumKind::Analytic ? pi2 * k * k : discrete_mode_1d(grid.nx(), k), 1});
    }
    return out;
  }
  // 2D: enumerate (j, k) by j^2 + k^2, enough shells to cover `count` values.
  const int n = grid.nx();
  if (kind == SpectrumKind::Analytic) {
    std::map<long, int> shells;
    int r = 1;
    for (;;) {
      shells.clear();
      for (int j = 0; j <= r; ++j) {
        for (int k = 0; k <= r; ++k) {
          const long s = static_cast<long>(j) * j + static_cast<long>(k) * k;
          if (s <= static_cast<long>(r) * r) ++shells[s];
        }
      }
      if (shells.size() >= count) break;
      r *= 2;
    }
    for (const auto& [s, mult] : shells) {
      if (out.size() == count) break;
      out.push_back({pi2 * static_cast<double>(s), mult});
    }
    return out;
  }
  std::map<double, int> values;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) ++values[discrete_mode_1d(n, j) + discrete_mode_1d(n, k)];
  }
  for (const auto& [mu, mult] : values) {
    if (out.size() == count) break;
    out.push_back({mu, mult});
  }
  return out;
}

/// Just the eigenvalue values of laplacian_eigenvalues.
inline std::vector<double> eigenvalue_values(const std::vector<LaplacianEigenvalue>& ev) {
  std::vector<double> out;
  out.reserve(ev.size());
  for (const auto& e : ev) out.push_back(e.mu);
  return out;
}

}  // namespace rdlab
