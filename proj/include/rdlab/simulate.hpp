#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdlab/errors.hpp"
#include "rdlab/grid.hpp"
#include "rdlab/kinetics.hpp"
#include "rdlab/parallel.hpp"
#include "rdlab/stationary.hpp"

namespace rdlab {

/// f = g = 0; leaves pure diffusion in v. Test hook for conservation checks.
struct ZeroReaction {
  double f(double, double) const noexcept { return 0.0; }
  double g(double, double) const noexcept { return 0.0; }
  Jacobian jacobian(double, double) const noexcept { return {}; }
};

struct SimState {
  std::vector<double> u;
  std::vector<double> v;
};

struct SimulationConfig {
  Grid grid;
  double gamma = 1.0;
  double dt = 0.0;
  double t_end = 0.0;
  std::size_t snapshot_stride = 1;
  double cfl_safety = 0.9;
  std::size_t norm_stride = 1;  ///< record norms every this many steps (and at the last step)
};

struct NormSample {
  double t = 0.0;
  double du_inf = 0.0;
  double dv_inf = 0.0;
};

struct Trajectory {
  std::vector<double> times;  ///< snapshot times
  std::vector<SimState> snapshots;
  std::vector<NormSample> norms;  ///< against the reference, empty without one
  std::size_t steps = 0;
  double dt = 0.0;
  SimState final_state;
};

/// h^2 / (2 dim gamma).
inline double diffusive_dt_limit(const Grid& grid, double gamma) {
  const double h = grid.h();
  return h * h / (2.0 * grid.dim() * gamma);
}

/// max over cells of |f_u| + |f_v| + |g_u| + |g_v|.
template <class Reaction>
double reaction_lipschitz(const Reaction& r, const SimState& s, WorkerPool& pool) {
  std::mutex mu;
  double best = 0.0;
  pool.parallel_for(s.u.size(), [&](std::size_t b, std::size_t e) {
    double local = 0.0;
    for (std::size_t c = b; c < e; ++c) {
      const Jacobian j = r.jacobian(s.u[c], s.v[c]);
      const double l = std::abs(j.fu) + std::abs(j.fv) + std::abs(j.gu) + std::abs(j.gv);
      local = std::isnan(l) || std::isnan(local) ? std::numeric_limits<double>::quiet_NaN() : std::max(local, l);
    }
    std::lock_guard lock(mu);
    best = std::isnan(local) || std::isnan(best) ? std::numeric_limits<double>::quiet_NaN() : std::max(best, local);
  });
  return best;
}

/// Largest admissible step: safety * min(diffusive limit, 1 / Lipschitz).
template <class Reaction>
double stable_dt(const Reaction& r, const Grid& grid, double gamma, const SimState& s, double safety, WorkerPool& pool) {
  const double lip = reaction_lipschitz(r, s, pool);
  double dt = diffusive_dt_limit(grid, gamma);
  if (lip > 0.0) dt = std::min(dt, 1.0 / lip);
  return safety * dt;
}

/// One explicit Euler step, every cell reading only `in`:
/// u += dt f(u, v), v += dt (gamma L v + g(u, v)).
template <class Reaction>
void step(const Reaction& r, const NeumannLaplacian& lap, double gamma, const SimState& in, SimState& out, double dt,
          WorkerPool& pool, std::size_t step_index = 0) {
  const std::size_t n = in.u.size();
  out.u.resize(n);
  out.v.resize(n);
  std::mutex mu;
  std::exception_ptr failure;
  std::size_t bad_cell = n;
  pool.parallel_for(n, [&](std::size_t b, std::size_t e) {
    try {
      for (std::size_t c = b; c < e; ++c) {
        const double u = in.u[c], v = in.v[c];
        const double nu = u + dt * r.f(u, v);
        const double nv = v + dt * (gamma * lap.apply_at(in.v, c) + r.g(u, v));
        out.u[c] = nu;
        out.v[c] = nv;
        if (!std::isfinite(nu) || !std::isfinite(nv)) {
          std::lock_guard lock(mu);
          bad_cell = std::min(bad_cell, c);
          return;
        }
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const Error& e) {
      throw BlowUpError("step " + std::to_string(step_index) + ": " + e.what(), step_index);
    }
  }
  if (bad_cell < n) {
    throw BlowUpError("non-finite value at step " + std::to_string(step_index) + ", cell " + std::to_string(bad_cell),
                      step_index);
  }
}

/// Single-threaded convenience form of one Euler step.
template <class Reaction>
SimState step(const Reaction& r, const Grid& grid, double gamma, const SimState& state, double dt) {
  WorkerPool pool(1);
  SimState out;
  step(r, NeumannLaplacian(grid), gamma, state, out, dt, pool);
  return out;
}

inline NormSample state_distance(double t, const SimState& s, const SimState& ref) {
  NormSample out{t, 0.0, 0.0};
  for (std::size_t c = 0; c < s.u.size(); ++c) {
    out.du_inf = std::max(out.du_inf, std::abs(s.u[c] - ref.u[c]));
    out.dv_inf = std::max(out.dv_inf, std::abs(s.v[c] - ref.v[c]));
  }
  if (std::isnan(out.du_inf + out.dv_inf)) out.du_inf = out.dv_inf = std::numeric_limits<double>::infinity();
  return out;
}

/// Integrates from `init` to cfg.t_end with N = ceil(t_end / dt) equal steps of
/// t_end / N. Snapshots at steps 0, stride, 2 stride, ...
template <class Reaction>
Trajectory simulate(const Reaction& r, const SimulationConfig& cfg, SimState init, WorkerPool& pool,
                    const SimState* reference = nullptr) {
  const Grid& grid = cfg.grid;
  const std::size_t n = grid.cell_count();
  if (init.u.size() != n || init.v.size() != n) throw InputError("initial state does not match the grid");
  if (reference && (reference->u.size() != n || reference->v.size() != n)) {
    throw InputError("reference state does not match the grid");
  }
  if (!(cfg.gamma > 0.0)) throw InputError("gamma must be positive");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InputError("dt must be positive");
  if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) throw InputError("t_end must be non-negative");
  if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) throw InputError("cfl_safety must lie in (0, 1]");
  if (cfg.snapshot_stride == 0 || cfg.norm_stride == 0) throw InputError("strides must be at least 1");

  const double steps_real = std::ceil(cfg.t_end / cfg.dt * (1.0 - 1e-12));
  if (steps_real > 1e9) throw InputError("more than 1e9 time steps requested");
  const auto steps = static_cast<std::size_t>(steps_real);
  const double dt = steps == 0 ? cfg.dt : cfg.t_end / static_cast<double>(steps);

  const double diff_limit = cfg.cfl_safety * diffusive_dt_limit(grid, cfg.gamma);
  if (dt > diff_limit) {
    throw CflError("dt = " + std::to_string(dt) + " exceeds the diffusive bound " + std::to_string(diff_limit));
  }

  const NeumannLaplacian lap(grid);
  Trajectory traj;
  traj.steps = steps;
  traj.dt = dt;
  traj.times.push_back(0.0);
  traj.snapshots.push_back(init);
  if (reference) traj.norms.push_back(state_distance(0.0, init, *reference));

  SimState cur = std::move(init), next;
  for (std::size_t k = 0; k < steps; ++k) {
    if (k % 100 == 0) {
      const double lip = reaction_lipschitz(r, cur, pool);
      if (std::isnan(lip)) throw BlowUpError("non-finite Jacobian at step " + std::to_string(k), k);
      if (lip > 0.0 && dt > cfg.cfl_safety / lip) {
        throw CflError("dt = " + std::to_string(dt) + " exceeds the reaction bound " + std::to_string(cfg.cfl_safety / lip) +
                       " at step " + std::to_string(k));
      }
    }
    step(r, lap, cfg.gamma, cur, next, dt, pool, k + 1);
    std::swap(cur, next);
    const std::size_t done = k + 1;
    const double t = static_cast<double>(done) * dt;
    if (done % cfg.snapshot_stride == 0) {
      traj.times.push_back(t);
      traj.snapshots.push_back(cur);
    }
    if (reference && (done % cfg.norm_stride == 0 || done == steps)) traj.norms.push_back(state_distance(t, cur, *reference));
  }
  traj.final_state = std::move(cur);
  return traj;
}

// ---------------------------------------------------------------------------
// EY experiment

struct RegionStats {
  std::size_t omega1_interior = 0;
  std::size_t omega2_interior = 0;
  double u_inf_omega2 = 0.0;  ///< max |u| over the interior of Omega_2
  double u_dev_omega1 = 0.0;  ///< max |u - U_bar_1| over the interior of Omega_1
  double v_dev = 0.0;         ///< max |v - V_bar_1| over all cells
  double v_dev_interior = 0.0;
};

/// Region statistics with cells within `band` cells of an assignment change excluded.
inline RegionStats region_stats(const DomainPartition& part, const SimState& s, const SteadyState& steady, int band = 2) {
  RegionStats st;
  for (std::size_t c = 0; c < s.u.size(); ++c) {
    const double dv = std::abs(s.v[c] - steady.v_bar);
    st.v_dev = std::max(st.v_dev, dv);
    if (part.near_interface(c, band)) continue;
    st.v_dev_interior = std::max(st.v_dev_interior, dv);
    if (part.region(c) == 1) {
      ++st.omega1_interior;
      st.u_dev_omega1 = std::max(st.u_dev_omega1, std::abs(s.u[c] - steady.u_bar));
    } else {
      ++st.omega2_interior;
      st.u_inf_omega2 = std::max(st.u_inf_omega2, std::abs(s.u[c]));
    }
  }
  return st;
}

struct EyOptions {
  double dt = 0.0;  ///< 0: cfl_safety times the stable step of the initial state
  double cfl_safety = 0.9;
  std::size_t snapshot_stride = 0;  ///< 0: ten intervals
  std::size_t norm_stride = 0;      ///< 0: about 1000 samples
  int band = 2;
};

struct EyResult {
  Trajectory trajectory;
  RegionStats stats;
};

/// u0 = U_bar_1 on Omega_1 and 0 on Omega_2, v0 = V_bar_1 everywhere.
inline SimState ey_initial_state(const DomainPartition& part, const SteadyState& steady1) {
  const std::size_t n = part.grid().cell_count();
  SimState s{std::vector<double>(n), std::vector<double>(n, steady1.v_bar)};
  for (std::size_t c = 0; c < n; ++c) s.u[c] = part.region(c) == 1 ? steady1.u_bar : 0.0;
  return s;
}

inline std::size_t auto_steps(double t_end, double dt) {
  return static_cast<std::size_t>(std::max(0.0, std::ceil(t_end / dt * (1.0 - 1e-12))));
}

/// Predator-prey run from the EY initial data; `reference` (optional) is the
/// field the norm series is measured against.
inline EyResult run_ey_experiment(const KineticModel& m, const DomainPartition& part, double gamma,
                                  const SteadyState& steady1, double t_end, const EyOptions& opt, WorkerPool& pool,
                                  const SimState* reference = nullptr) {
  if (m.family() != Family::PredatorPrey) throw InputError("the EY experiment uses predator-prey kinetics");
  if (part.grid().dim() != 2) throw InputError("the EY experiment needs a 2D grid");
  if (part.regions() != 2) throw InputError("the EY experiment needs a two-region partition");
  if (!(steady1.u_bar > predator_prey_um())) {
    throw InputError("the EY experiment needs U_bar_1 > U_m = 2^(1/3); got U_bar_1 = " + std::to_string(steady1.u_bar));
  }
  SimState init = ey_initial_state(part, steady1);
  SimulationConfig cfg{part.grid(), gamma, opt.dt, t_end, opt.snapshot_stride, opt.cfl_safety, opt.norm_stride};
  if (cfg.dt == 0.0) cfg.dt = stable_dt(m, part.grid(), gamma, init, opt.cfl_safety, pool);
  const std::size_t steps = auto_steps(t_end, cfg.dt);
  if (cfg.snapshot_stride == 0) cfg.snapshot_stride = std::max<std::size_t>(1, steps / 10);
  if (cfg.norm_stride == 0) cfg.norm_stride = std::max<std::size_t>(1, steps / 1000);
  EyResult out;
  out.trajectory = simulate(m, cfg, std::move(init), pool, reference);
  out.stats = region_stats(part, out.trajectory.final_state, steady1, opt.band);
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation decay

struct DecayOptions {
  double dt = 0.0;  ///< 0: cfl_safety times the stable step of the perturbed state
  double cfl_safety = 0.9;
  std::uint64_t seed = 20240601;
  std::size_t norm_stride = 0;  ///< 0: about 2000 samples
};

struct DecayResult {
  double rate = 0.0;  ///< least-squares slope of log deviation over the second half
  double initial_dev = 0.0;
  double final_dev = 0.0;
  std::string verdict;  ///< "decayed", "escaped", "stationary" or "inconclusive"
  std::string failure;  ///< blow-up message when escaped by blow-up
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<NormSample> norms;
};

/// Slope of log(dev) against t over samples with t >= t_from and dev > 0.
inline double fit_log_rate(const std::vector<NormSample>& norms, double t_from) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t k = 0;
  for (const auto& s : norms) {
    const double dev = std::max(s.du_inf, s.dv_inf);
    if (s.t < t_from || !(dev > 0.0) || !std::isfinite(dev)) continue;
    const double y = std::log(dev);
    st += s.t;
    sy += y;
    stt += s.t * s.t;
    sty += s.t * y;
    ++k;
  }
  if (k < 2) return 0.0;
  const double kk = static_cast<double>(k);
  const double den = kk * stt - st * st;
  return den > 0.0 ? (kk * sty - st * sy) / den : 0.0;
}

/// Perturbs V by amplitude * (+-1 per cell, fixed seed), sets U on each cell's
/// branch, integrates to t_end and fits the decay rate of
/// max(||u - U||_inf, ||v - V||_inf).
inline DecayResult perturbation_decay(const KineticModel& m, const StationaryField& field, double amplitude, double t_end,
                                      const DecayOptions& opt, WorkerPool& pool) {
  if (!field.converged) throw InputError("perturbation_decay needs a converged stationary field");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw InputError("amplitude must be non-negative");
  if (!(t_end > 0.0)) throw InputError("t_end must be positive");
  const std::size_t n = field.grid().cell_count();
  const SimState ref{field.U, field.V};

  SimState init = ref;
  std::mt19937_64 rng(opt.seed);
  int fallback_label = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const double sign = (rng() >> 63) ? 1.0 : -1.0;
    if (amplitude == 0.0) continue;
    int label = field.branch_labels.empty() ? 0 : field.branch_labels[c];
    if (label == 0) {
      if (fallback_label == 0) fallback_label = steady_branch_label(m, field.steady);
      label = fallback_label;
    }
    init.v[c] = field.V[c] + amplitude * sign;
    init.u[c] = branch_value(m, label, init.v[c]);
  }

  DecayResult out;
  out.seed = opt.seed;
  out.initial_dev = std::max(state_distance(0.0, init, ref).du_inf, state_distance(0.0, init, ref).dv_inf);
  SimulationConfig cfg{field.grid(), field.gamma, opt.dt, t_end, 0, opt.cfl_safety, opt.norm_stride};
  if (cfg.dt == 0.0) cfg.dt = stable_dt(m, field.grid(), field.gamma, init, opt.cfl_safety, pool);
  const std::size_t steps = auto_steps(t_end, cfg.dt);
  cfg.snapshot_stride = std::max<std::size_t>(1, steps);
  if (cfg.norm_stride == 0) cfg.norm_stride = std::max<std::size_t>(1, steps / 2000);
  out.dt = t_end / static_cast<double>(std::max<std::size_t>(1, steps));
  out.steps = steps;

  try {
    Trajectory traj = simulate(m, cfg, std::move(init), pool, &ref);
    out.norms = std::move(traj.norms);
  } catch (const BlowUpError& e) {
    out.verdict = "escaped";
    out.failure = e.what();
    out.final_dev = std::numeric_limits<double>::infinity();
    return out;
  } catch (const CflError& e) {
    out.verdict = "escaped";
    out.failure = e.what();
    out.final_dev = std::numeric_limits<double>::infinity();
    return out;
  }
  const NormSample& last = out.norms.back();
  out.final_dev = std::max(last.du_inf, last.dv_inf);
  if (amplitude == 0.0) {
    out.rate = 0.0;
    out.verdict = "stationary";
    return out;
  }
  out.rate = fit_log_rate(out.norms, 0.5 * t_end);
  if (out.rate < 0.0 && out.final_dev < out.initial_dev) {
    out.verdict = "decayed";
  } else if (out.rate > 0.0 && out.final_dev > out.initial_dev) {
    out.verdict = "escaped";
  } else {
    out.verdict = "inconclusive";
  }
  return out;
}

}  // namespace rdlab
