#pragma once

// Stationary solutions of
//
//   f(U, V) = 0,   gamma L V + g(U, V) = 0   (Neumann),
//
// built by eliminating U = k_sigma(x)(V) and solving the reduced equation for V
// with damped Newton.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdlab/errors.hpp"
#include "rdlab/grid.hpp"
#include "rdlab/kinetics.hpp"
#include "rdlab/masks.hpp"

namespace rdlab {

/// Sup-norm distance of a field from the constant state it was built around.
struct DeviationReport {
  double v_dev = 0.0;           ///< ||V - V_bar||_inf
  std::vector<double> u_dev;    ///< per region i: ||U - k_i(V_bar)||_inf over Omega_i (region 1 uses U_bar)
  double omega2_measure = 0.0;  ///< |Omega \ Omega_1|

  double u_dev_1() const { return u_dev.empty() ? 0.0 : u_dev[0]; }
  double u_dev_2() const { return u_dev.size() < 2 ? 0.0 : u_dev[1]; }
};

/// Grid functions (U, V) solving the stationary problem on a partition.
struct StationaryField {
  DomainPartition partition;
  SteadyState steady;
  double gamma = 0.0;
  std::vector<double> U;
  std::vector<double> V;
  std::vector<int> branch_labels;  ///< branch label used at each cell
  double residual_inf = 0.0;       ///< ||gamma L V + g(U, V)||_inf
  int iterations = 0;
  bool converged = false;
  DeviationReport deviation;

  const Grid& grid() const noexcept { return partition.grid(); }
};

struct NewtonOptions {
  double tol = 1e-9;
  int max_iterations = 50;
  int max_halvings = 20;
};

/// det/a0 for the steady state; throws when a0 == 0.
inline double det_over_a0(const SteadyState& s) {
  if (!(std::abs(s.a0) > 1e-12)) throw InputError("f_u vanishes at the constant state (a0 = 0)");
  return s.det() / s.a0;
}

/// min_k |det/a0 - gamma mu_k|, with the minimising index in *worst.
inline double sineq_margin(const SteadyState& s, double gamma, std::span<const double> mus, std::size_t* worst = nullptr) {
  const double q = det_over_a0(s);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mus.size(); ++k) {
    const double m = std::abs(q - gamma * mus[k]);
    if (m < best) {
      best = m;
      if (worst) *worst = k;
    }
  }
  return best;
}

/// Refuses gamma within 1e-8 of a bifurcation value det/(a0 mu_k).
inline void check_sineq(const SteadyState& s, double gamma, std::span<const double> mus) {
  const double q = det_over_a0(s);
  for (std::size_t k = 0; k < mus.size(); ++k) {
    const double mu = mus[k];
    const bool hit = mu > 0.0 ? std::abs(q - gamma * mu) <= 1e-8 * mu : std::abs(q) <= 1e-12;
    if (hit) {
      throw ResonanceError("gamma = " + std::to_string(gamma) + " resonates with Laplacian mode " + std::to_string(k) +
                               " (det/a0 = gamma mu_k)",
                           k);
    }
  }
}

struct BifurcationPoint {
  std::size_t k = 0;
  double gamma = 0.0;
};

/// gamma_k = det / (a0 mu_k) for every mu_k > 0 giving gamma_k > 0.
inline std::vector<BifurcationPoint> bifurcation_gammas(const SteadyState& s, std::span<const double> mus) {
  const double q = det_over_a0(s);
  std::vector<BifurcationPoint> out;
  if (!(q > 0.0)) return out;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    if (mus[k] > 0.0) out.push_back({k, q / mus[k]});
  }
  return out;
}

namespace detail {

using SparseLU = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

inline double inf_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double two_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Per-cell data of the reduced map h(V) = g(k(V), V).
struct ReducedPoint {
  double u;       // k(V)
  double h;       // g(k(V), V)
  double dh;      // g_u k' + g_v
};

inline ReducedPoint reduced_point(const KineticModel& m, const BranchInfo& br, double v) {
  const double u = branch_value(m, br, v);
  const Jacobian j = m.jacobian(u, v);
  if (std::abs(j.fu) < 1e-12) throw FoldError("f_u vanishes on branch k" + std::to_string(br.label), v);
  const double kp = -j.fv / j.fu;
  return {u, m.g(u, v), j.gu * kp + j.gv};
}

// Damped Newton for F(V) = 0 where residual(V, F) fills F and jacobian(V)
// returns dF/dV. Iterates must stay inside (lo, hi).
struct NewtonResult {
  std::vector<double> x;
  double residual_inf = 0.0;
  int iterations = 0;
};

inline NewtonResult damped_newton(std::vector<double> x, double lo, double hi, const NewtonOptions& opt,
                                  const std::function<void(std::span<const double>, std::span<double>)>& residual,
                                  const std::function<Eigen::SparseMatrix<double>(std::span<const double>)>& jacobian) {
  const std::size_t n = x.size();
  std::vector<double> F(n), Ft(n), xt(n);
  residual(x, F);
  int it = 0;
  for (;; ++it) {
    const double rinf = inf_norm(F);
    if (!std::isfinite(rinf)) throw ConvergenceError("Newton residual is not finite", it, rinf);
    if (rinf <= opt.tol) return {std::move(x), rinf, it};
    if (it >= opt.max_iterations) {
      throw ConvergenceError("Newton did not converge in " + std::to_string(opt.max_iterations) +
                                 " iterations (last residual " + std::to_string(rinf) + ")",
                             it, rinf);
    }
    SparseLU lu;
    lu.compute(jacobian(x));
    if (lu.info() != Eigen::Success) throw ConvergenceError("singular Newton Jacobian", it, rinf);
    Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(F.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd step = lu.solve(rhs);
    const double f2 = two_norm(F);
    double lambda = 1.0;
    bool accepted = false;
    bool last_was_window = false;
    for (int k = 0; k <= opt.max_halvings; ++k, lambda *= 0.5) {
      bool inside = true;
      for (std::size_t i = 0; i < n; ++i) {
        xt[i] = x[i] + lambda * step[static_cast<Eigen::Index>(i)];
        if (!(xt[i] > lo && xt[i] < hi)) inside = false;
      }
      if (!inside) {
        last_was_window = true;
        continue;
      }
      last_was_window = false;
      residual(xt, Ft);
      const double ft2 = two_norm(Ft);
      if (std::isfinite(ft2) && ft2 <= (1.0 - 1e-4 * lambda) * f2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (last_was_window) {
        throw WindowError("Newton iterate leaves the trust window (" + std::to_string(lo) + ", " + std::to_string(hi) +
                          ") around V_bar");
      }
      throw ConvergenceError("line search failed (residual " + std::to_string(rinf) + ")", it, rinf);
    }
    x.swap(xt);
    F.swap(Ft);
  }
}

inline Eigen::SparseMatrix<double> shifted_operator(const NeumannLaplacian& lap, double scale, std::span<const double> diag) {
  Eigen::SparseMatrix<double> J = scale * lap.matrix();
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    J.coeffRef(ii, ii) += diag[i];
  }
  return J;
}

}  // namespace detail

/// Fills U, branch labels, residual and deviation report for a converged V.
inline void finish_field(const KineticModel& m, const BranchSet& bs, StationaryField& field) {
  const Grid& grid = field.grid();
  const std::size_t n = grid.cell_count();
  const NeumannLaplacian lap(grid);
  field.U.resize(n);
  field.branch_labels.resize(n);
  std::vector<double> lv(n);
  lap.apply(field.V, lv);
  double res = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t r = static_cast<std::size_t>(field.partition.region(c)) - 1;
    field.U[c] = bs.value(r, field.V[c]);
    field.branch_labels[c] = bs.label(r);
    const double fres = std::abs(m.f(field.U[c], field.V[c]));
    if (!(fres <= 1e-9)) throw Error("reconstructed U violates f(U, V) = 0 at cell " + std::to_string(c));
    res = std::max(res, std::abs(field.gamma * lv[c] + m.g(field.U[c], field.V[c])));
  }
  field.residual_inf = res;

  DeviationReport& d = field.deviation;
  const int regions = field.partition.regions();
  d.u_dev.assign(static_cast<std::size_t>(regions), 0.0);
  std::vector<double> centre(static_cast<std::size_t>(regions));
  for (int r = 0; r < regions; ++r) {
    centre[r] = (r == 0) ? field.steady.u_bar : bs.value(static_cast<std::size_t>(r), field.steady.v_bar);
  }
  d.v_dev = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const int r = field.partition.region(c) - 1;
    d.v_dev = std::max(d.v_dev, std::abs(field.V[c] - field.steady.v_bar));
    d.u_dev[r] = std::max(d.u_dev[r], std::abs(field.U[c] - centre[r]));
  }
  d.omega2_measure = 1.0 - field.partition.measure(1);
  if (regions == 1) d.omega2_measure = 0.0;
}

/// The constant solution (U_bar, V_bar) as a field on `grid`.
inline StationaryField constant_field(const KineticModel& m, const Grid& grid, const SteadyState& steady, double gamma) {
  StationaryField field{DomainPartition::uniform(grid), steady, gamma, {}, {}, {}, 0.0, 0, true, {}};
  const std::size_t n = grid.cell_count();
  field.U.assign(n, steady.u_bar);
  field.V.assign(n, steady.v_bar);
  field.branch_labels.assign(n, 0);
  double res = 0.0;
  for (std::size_t c = 0; c < n; ++c) res = std::max(res, std::abs(m.g(steady.u_bar, steady.v_bar)));
  field.residual_inf = res;
  field.deviation.u_dev = {0.0};
  return field;
}

/// Jump-discontinuous stationary solution with U = k_i(V) on region i.
///
/// Region i of the partition uses branch i-1 of `bs`; region 1's branch must
/// pass through the steady state. Damped Newton on
/// F(V) = gamma L V + g(k_sigma(V), V) from V = V_bar, with iterates confined to
/// V_bar +- half the distance to the nearest fold/singularity of a used branch
/// (intersected with the branch window).
inline StationaryField solve_discontinuous(const KineticModel& m, const DomainPartition& part, const BranchSet& bs,
                                           double gamma, const SteadyState& steady, const NewtonOptions& opt = {}) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  det_over_a0(steady);
  const Grid& grid = part.grid();
  if (bs.size() < static_cast<std::size_t>(part.regions())) {
    throw InputError("partition has " + std::to_string(part.regions()) + " regions but only " +
                     std::to_string(bs.size()) + " branches were supplied");
  }
  if (!bs.contains(steady.v_bar)) throw InputError("branch window does not contain V_bar");
  const double k1 = bs.value(0, steady.v_bar);
  if (std::abs(k1 - steady.u_bar) > 1e-8 * std::max(1.0, std::abs(steady.u_bar))) {
    throw InputError("the first branch does not pass through the constant state");
  }

  std::vector<int> used;
  for (int r = 1; r <= part.regions(); ++r) {
    if (part.count(r) > 0) used.push_back(bs.label(static_cast<std::size_t>(r) - 1));
  }
  const auto mus = eigenvalue_values(laplacian_eigenvalues(grid, grid.cell_count(), SpectrumKind::Discrete));
  check_sineq(steady, gamma, mus);

  const double w = trust_radius(m, steady.v_bar, used);
  const double lo = std::max(steady.v_bar - w, bs.v_lo());
  const double hi = std::min(steady.v_bar + w, bs.v_hi());

  const NeumannLaplacian lap(grid);
  const std::size_t n = grid.cell_count();
  std::vector<std::size_t> region_branch(n);
  for (std::size_t c = 0; c < n; ++c) region_branch[c] = static_cast<std::size_t>(part.region(c)) - 1;

  auto residual = [&](std::span<const double> V, std::span<double> F) {
    lap.apply(V, F);
    for (std::size_t c = 0; c < n; ++c) {
      const double u = bs.value(region_branch[c], V[c]);
      F[c] = gamma * F[c] + m.g(u, V[c]);
    }
  };
  auto jac = [&](std::span<const double> V) {
    std::vector<double> diag(n);
    for (std::size_t c = 0; c < n; ++c) diag[c] = detail::reduced_point(m, bs.branch(region_branch[c]), V[c]).dh;
    return detail::shifted_operator(lap, gamma, diag);
  };

  auto result = detail::damped_newton(std::vector<double>(n, steady.v_bar), lo, hi, opt, residual, jac);
  StationaryField field{part, steady, gamma, {}, std::move(result.x), {}, 0.0, result.iterations, true, {}};
  finish_field(m, bs, field);
  return field;
}

/// Solves on partitions of decreasing |Omega_2| and collects deviation reports.
///
/// Fractions must lie in [0, 1); `make_partition` maps a fraction to a
/// partition (default: centred stripe in 1D, EY mask in 2D).
inline std::vector<DeviationReport> deviation_sweep(
    const KineticModel& m, const Grid& grid, const BranchSet& bs, double gamma, const SteadyState& steady,
    const std::vector<double>& fractions, const NewtonOptions& opt = {},
    std::function<DomainPartition(double)> make_partition = nullptr) {
  for (double f : fractions) {
    if (!(f >= 0.0 && f < 1.0)) throw InputError("Omega_2 fractions must lie in [0, 1)");
  }
  if (!make_partition) {
    make_partition = [&grid](double f) { return grid.dim() == 1 ? centered_stripe(grid, f) : generate_ey_mask(grid, f); };
  }
  std::vector<DeviationReport> out;
  for (double f : fractions) out.push_back(solve_discontinuous(m, make_partition(f), bs, gamma, steady, opt).deviation);
  return out;
}

/// Nonconstant regular solution of the perturbed problem together with the
/// bifurcation pivot it was continued from.
struct PerturbedSolution {
  StationaryField field;
  double d_ell = 1.0;
  double gamma_pivot = 0.0;        ///< gamma_k = det / (a0 mu_k), mu_k the grid eigenvalue
  double amplitude = 0.0;          ///< ||V - V_bar||_inf
  double mode_energy_fraction = 0;  ///< share of ||V - V_bar||^2 in cos(k pi x)
  double branch_direction = 0.0;   ///< sign of d - 1 on which the nonconstant branch lives
};

struct PerturbedOptions {
  double amp = 1e-2;        ///< initial cos amplitude
  double tol = 1e-10;
  int max_steps = 400;
};

/// Regular solution of d gamma_k L V + (1 - d)(V - V_bar) + g(k(V), V) = 0 near
/// the mode-k bifurcation, with d = d_ell.
///
/// The diffusion is d_ell * gamma_k so that the constant state loses
/// stability in mode k exactly at d_ell = 1. The branch is traced by
/// predictor-corrector continuation in the cos(k pi x) amplitude (bordered
/// Newton in (V, d)), then corrected at fixed d_ell. On the side of d_ell = 1
/// without a bifurcating branch, Newton from V_bar + amp cos(k pi x) collapses to
/// the constant and CollapseError is raised.
inline PerturbedSolution solve_perturbed_regular(const KineticModel& m, const Grid& grid, int branch_label,
                                                 const SteadyState& steady, int mode, double d_ell,
                                                 const PerturbedOptions& opt = {}) {
  if (grid.dim() != 1) throw InputError("perturbed-problem continuation is implemented on 1D grids only");
  if (mode < 1 || mode >= grid.nx()) throw InputError("mode index out of range");
  if (!(d_ell > 0.0)) throw InputError("d_ell must be positive");
  const double q = det_over_a0(steady);
  const double mu = discrete_mode_1d(grid.nx(), mode);
  const double gk = q / mu;
  if (!(gk > 0.0)) throw InputError("no bifurcation: det/a0 <= 0 for this constant state");

  const BranchInfo br = branch_info(m, branch_label);
  if (std::abs(branch_value(m, br, steady.v_bar) - steady.u_bar) > 1e-8 * std::max(1.0, std::abs(steady.u_bar))) {
    throw InputError("branch does not pass through the constant state");
  }
  const double w = trust_radius(m, steady.v_bar, {branch_label});
  const double lo = steady.v_bar - w, hi = steady.v_bar + w;

  const std::size_t n = grid.cell_count();
  const NeumannLaplacian lap(grid);
  std::vector<double> cosk(n);
  double c2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cosk[i] = std::cos(mode * std::numbers::pi * grid.x(i));
    c2 += cosk[i] * cosk[i];
  }
  auto amplitude_of = [&](std::span<const double> V) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (V[i] - steady.v_bar) * cosk[i];
    return s / c2;
  };
  auto residual = [&](std::span<const double> V, double d, std::span<double> F) {
    lap.apply(V, F);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = branch_value(m, br, V[i]);
      F[i] = d * gk * F[i] + (1.0 - d) * (V[i] - steady.v_bar) + m.g(u, V[i]);
    }
  };
  auto jac_v = [&](std::span<const double> V, double d) {
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = (1.0 - d) + detail::reduced_point(m, br, V[i]).dh;
    return detail::shifted_operator(lap, d * gk, diag);
  };
  auto inside = [&](std::span<const double> V) {
    for (double v : V) {
      if (!(v > lo && v < hi)) return false;
    }
    return true;
  };

  // Bordered Newton: F(V, d) = 0 and amplitude(V) = s.
  auto bordered = [&](std::vector<double> V, double d, double s) {
    std::vector<double> F(n), lv(n);
    for (int it = 0; it < 40; ++it) {
      if (!inside(V)) throw WindowError("continuation left the trust window around V_bar");
      residual(V, d, F);
      const double ga = amplitude_of(V) - s;
      if (detail::inf_norm(F) <= opt.tol && std::abs(ga) <= opt.tol) return std::pair{V, d};
      Eigen::SparseMatrix<double> J = jac_v(V, d);
      lap.apply(V, lv);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(J.nonZeros() + 2 * n);
      for (int k = 0; k < J.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator itj(J, k); itj; ++itj) {
          trips.emplace_back(static_cast<int>(itj.row()), static_cast<int>(itj.col()), itj.value());
        }
      }
      const int N = static_cast<int>(n);
      for (int i = 0; i < N; ++i) {
        trips.emplace_back(i, N, gk * lv[i] - (V[i] - steady.v_bar));
        trips.emplace_back(N, i, cosk[i] / c2);
      }
      Eigen::SparseMatrix<double> B(N + 1, N + 1);
      B.setFromTriplets(trips.begin(), trips.end());
      detail::SparseLU lu;
      lu.compute(B);
      if (lu.info() != Eigen::Success) throw ConvergenceError("singular bordered system", it, detail::inf_norm(F));
      Eigen::VectorXd rhs(N + 1);
      for (int i = 0; i < N; ++i) rhs[i] = -F[i];
      rhs[N] = -ga;
      const Eigen::VectorXd delta = lu.solve(rhs);
      for (int i = 0; i < N; ++i) V[i] += delta[i];
      d += delta[N];
    }
    throw ConvergenceError("bordered continuation step did not converge", 40, 0.0);
  };

  auto fixed_d = [&](std::vector<double> V0, double d) {
    NewtonOptions nopt;
    nopt.tol = opt.tol;
    auto res = detail::damped_newton(
        std::move(V0), lo, hi, nopt, [&](std::span<const double> V, std::span<double> F) { residual(V, d, F); },
        [&](std::span<const double> V) { return jac_v(V, d); });
    return res;
  };

  auto guess = [&](double s) {
    std::vector<double> V(n);
    for (std::size_t i = 0; i < n; ++i) V[i] = steady.v_bar + s * cosk[i];
    return V;
  };

  // Which side of d = 1 carries the branch.
  double s_prev = opt.amp;
  auto [V_prev, d_prev] = bordered(guess(s_prev), 1.0, s_prev);
  const double direction = (d_prev >= 1.0) ? 1.0 : -1.0;

  detail::NewtonResult final{};
  if ((d_ell - 1.0) * direction <= 0.0) {
    final = fixed_d(guess(opt.amp), d_ell);
  } else {
    std::vector<double> V_guess;
    if ((d_ell - 1.0) * direction <= (d_prev - 1.0) * direction) {
      // Inside the first step: d - 1 ~ s^2 near a pitchfork.
      const double s = s_prev * std::sqrt((d_ell - 1.0) / (d_prev - 1.0));
      V_guess = bordered(guess(s), d_ell, s).first;
    } else {
      double s = s_prev;
      std::vector<double> V_old = V_prev;
      double s_old = s_prev;
      int steps = 0;
      for (;;) {
        if (++steps > opt.max_steps) throw ConvergenceError("continuation did not reach d_ell", steps, 0.0);
        const double s_next = s * 1.25;
        std::vector<double> pred(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double slope = (s != s_old) ? (V_prev[i] - V_old[i]) / (s - s_old) : cosk[i];
          pred[i] = V_prev[i] + slope * (s_next - s);
        }
        auto [V_next, d_next] = bordered(pred, d_prev, s_next);
        if ((d_next - 1.0) * direction >= (d_ell - 1.0) * direction) {
          const double t = (d_ell - d_prev) / (d_next - d_prev);
          V_guess.resize(n);
          for (std::size_t i = 0; i < n; ++i) V_guess[i] = V_prev[i] + t * (V_next[i] - V_prev[i]);
          break;
        }
        V_old = std::move(V_prev);
        s_old = s;
        V_prev = std::move(V_next);
        d_prev = d_next;
        s = s_next;
      }
    }
    final = fixed_d(std::move(V_guess), d_ell);
  }

  double amp_inf = 0.0, e_tot = 0.0, proj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dv = final.x[i] - steady.v_bar;
    amp_inf = std::max(amp_inf, std::abs(dv));
    e_tot += dv * dv;
    proj += dv * cosk[i];
  }
  if (amp_inf < 1e-6) {
    throw CollapseError("no nonconstant solution found at this d_ell = " + std::to_string(d_ell) +
                        " (Newton collapsed to the constant state)");
  }

  PerturbedSolution out{StationaryField{DomainPartition::uniform(grid), steady, d_ell * gk, {}, std::move(final.x), {},
                                        0.0, final.iterations, true, {}},
                        d_ell, gk, amp_inf, (proj * proj / c2) / e_tot, direction};
  // U and the perturbed residual.
  StationaryField& f = out.field;
  f.U.resize(n);
  f.branch_labels.assign(n, branch_label);
  std::vector<double> F(n);
  residual(f.V, d_ell, F);
  f.residual_inf = detail::inf_norm(F);
  f.deviation.u_dev = {0.0};
  for (std::size_t i = 0; i < n; ++i) {
    f.U[i] = branch_value(m, br, f.V[i]);
    f.deviation.v_dev = std::max(f.deviation.v_dev, std::abs(f.V[i] - steady.v_bar));
    f.deviation.u_dev[0] = std::max(f.deviation.u_dev[0], std::abs(f.U[i] - steady.u_bar));
  }
  return out;
}

/// Three-branch certificate for the Oregonator at a given alpha.
struct OregonatorAlphaCertificate {
  double alpha = 0.0;
  double beta = 0.0;
  double v_lo = 0.0;  ///< window containing all three V_bar
  double v_hi = 0.0;
  double fold_lo = 0.0;
  double fold_hi = 0.0;
  double min_separation = 0.0;
  double max_residual = 0.0;
  std::vector<double> v_bars;
};

/// Certificate when k1, k2, k3 coexist on a window holding V_bar_1..3, else nullopt.
inline std::optional<OregonatorAlphaCertificate> oregonator_alpha_admissible(double alpha, double beta) {
  if (!(beta > 1.0)) throw InputError("the Oregonator three-branch picture needs beta > 1");
  const KineticModel m(Family::Oregonator, alpha, beta);
  const auto states = constant_steady_states(m);
  const auto [fold_lo, fold_hi] = oregonator_folds(m);
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  std::vector<double> vbars;
  for (const auto& s : states) {
    vmin = std::min(vmin, s.v_bar);
    vmax = std::max(vmax, s.v_bar);
    vbars.push_back(s.v_bar);
  }
  if (!(fold_lo < vmin && vmax < fold_hi)) return std::nullopt;
  const double margin = 0.5 * std::min(vmin - fold_lo, fold_hi - vmax);
  try {
    const BranchSet bs(m, vmin - margin, vmax + margin, {1, 2, 3});
    for (const auto& s : states) {
      if (steady_branch_label(m, s) != s.label) return std::nullopt;
    }
    return OregonatorAlphaCertificate{alpha,        beta, bs.v_lo(), bs.v_hi(), fold_lo, fold_hi, bs.min_separation(),
                                      bs.max_residual(), vbars};
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// Largest alpha in {0.2, 0.1, 0.05, 0.02, 0.01} (then further decades down)
/// admitting the three-branch Oregonator nullcline picture.
inline OregonatorAlphaCertificate find_admissible_oregonator_alpha(double beta) {
  if (!(beta > 1.0)) throw InputError("find_admissible_oregonator_alpha needs beta > 1");
  const std::vector<double> scan{0.2, 0.1, 0.05, 0.02, 0.01, 1e-3, 1e-4, 1e-5, 1e-6};
  for (double a : scan) {
    if (auto cert = oregonator_alpha_admissible(a, beta)) return *cert;
  }
  throw Error("no admissible Oregonator alpha found down to 1e-6 for beta = " + std::to_string(beta));
}

struct PredatorPreyScanResult {
  double alpha = 1.0;
  double beta = 0.0;
  double u_bar = 0.0;
  double v_bar = 0.0;
  double clearance = 0.0;  ///< min(V_bar_1, V_fold - V_bar_1): room for k1 and k3 = 0 around V_bar_1
};

/// alpha = 1, beta over {0.8, 1.6, 2.4, 3.2, 4.0}: among states with
/// U_bar_1 > U_m, the one whose V_bar_1 sits furthest from both ends of the k1
/// interval (0, V_fold).
inline PredatorPreyScanResult find_predator_prey_parameters() {
  PredatorPreyScanResult best;
  best.clearance = -1.0;
  for (double beta : {0.8, 1.6, 2.4, 3.2, 4.0}) {
    const KineticModel m(Family::PredatorPrey, 1.0, beta);
    const SteadyState s = steady_state_by_label(m, 1);
    if (!(s.u_bar > predator_prey_um())) continue;
    const double clearance = std::min(s.v_bar, predator_prey_fold_v() - s.v_bar);
    if (clearance > best.clearance) best = {1.0, beta, s.u_bar, s.v_bar, clearance};
  }
  if (!(best.clearance > 0.0)) throw Error("no predator-prey parameters with U_bar_1 > U_m in the scan");
  return best;
}

}  // namespace rdlab
