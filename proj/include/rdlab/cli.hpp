#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rdlab/io.hpp"
#include "rdlab/masks.hpp"
#include "rdlab/simulate.hpp"
#include "rdlab/stability.hpp"
#include "rdlab/stationary.hpp"

namespace rdlab {

inline constexpr const char* kToolName = "rdlab";
inline constexpr const char* kToolVersion = "0.1.0";

/// Flat JSON experiment description. Keys absent from the file take the
/// defaults below; unknown keys are rejected.
struct ExperimentConfig {
  std::string model;                 ///< GrayScott | Brusselator | Oregonator | PredatorPrey
  std::optional<double> alpha;       ///< Oregonator: absent means scanned
  double beta = 0.0;
  int steady = 1;                    ///< constant-state label
  std::vector<int> branches;         ///< region i uses branches[i-1]; empty: steady branch first, then by descending U
  std::vector<double> window;        ///< [v_lo, v_hi] branch window; empty: half the distance to the nearest fold
  std::vector<double> plot_window;   ///< sampling window of the branches command
  int dim = 1;
  int n = 128;
  double gamma = 1.0;
  std::string partition = "uniform";  ///< uniform | stripe | ey | mask
  double fraction = 0.05;             ///< |Omega_2| for centred stripe and EY mask
  std::vector<double> stripe;         ///< explicit stripe [lo, hi] in x
  std::string mask;                   ///< PBM/PGM path for partition = mask
  std::vector<double> fractions;      ///< construct: optional deviation sweep
  int eigen_count = 5;
  std::string spectrum_method = "auto";  ///< auto | dense | iterative
  int mode = 1;
  double d_ell = 1.001;
  bool continuation = true;
  double dt = 0.0;  ///< 0: automatic
  double t_end = 10.0;
  std::size_t snapshot_stride = 0;  ///< 0: ten intervals
  double cfl_safety = 0.9;
  double amplitude = 1e-2;
  std::uint64_t seed = 20240601;
  int samples = 200;
  int band = 2;
  std::string out;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

template <class T>
void read_key(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  static const std::set<std::string> known{
      "model",      "alpha",    "beta",      "steady",      "branches",        "window", "plot_window",  "dim",
      "n",          "gamma",    "partition", "fraction",    "stripe",          "mask",   "fractions",    "eigen_count",
      "spectrum_method", "mode", "d_ell",    "continuation", "dt",             "t_end",  "snapshot_stride", "cfl_safety",
      "amplitude",  "seed",     "samples",   "band",        "out"};
  if (!j.is_object()) throw InputError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw InputError("unknown config key '" + k + "'");
  }
  ExperimentConfig c;
  if (!j.contains("model")) throw InputError("config needs 'model'");
  detail::read_key(j, "model", c.model);
  if (j.contains("alpha")) {
    double a = 0.0;
    detail::read_key(j, "alpha", a);
    c.alpha = a;
  }
  if (!j.contains("beta")) throw InputError("config needs 'beta'");
  detail::read_key(j, "beta", c.beta);
  detail::read_key(j, "steady", c.steady);
  detail::read_key(j, "branches", c.branches);
  detail::read_key(j, "window", c.window);
  detail::read_key(j, "plot_window", c.plot_window);
  detail::read_key(j, "dim", c.dim);
  detail::read_key(j, "n", c.n);
  detail::read_key(j, "gamma", c.gamma);
  detail::read_key(j, "partition", c.partition);
  detail::read_key(j, "fraction", c.fraction);
  detail::read_key(j, "stripe", c.stripe);
  detail::read_key(j, "mask", c.mask);
  detail::read_key(j, "fractions", c.fractions);
  detail::read_key(j, "eigen_count", c.eigen_count);
  detail::read_key(j, "spectrum_method", c.spectrum_method);
  detail::read_key(j, "mode", c.mode);
  detail::read_key(j, "d_ell", c.d_ell);
  detail::read_key(j, "continuation", c.continuation);
  detail::read_key(j, "dt", c.dt);
  detail::read_key(j, "t_end", c.t_end);
  detail::read_key(j, "snapshot_stride", c.snapshot_stride);
  detail::read_key(j, "cfl_safety", c.cfl_safety);
  detail::read_key(j, "amplitude", c.amplitude);
  detail::read_key(j, "seed", c.seed);
  detail::read_key(j, "samples", c.samples);
  detail::read_key(j, "band", c.band);
  detail::read_key(j, "out", c.out);

  parse_family(c.model);
  auto pair_or_empty = [](const std::vector<double>& w, const char* key) {
    if (!w.empty() && (w.size() != 2 || !(w[0] < w[1]))) {
      throw InputError(std::string("'") + key + "' must be [lo, hi] with lo < hi");
    }
  };
  pair_or_empty(c.window, "window");
  pair_or_empty(c.plot_window, "plot_window");
  pair_or_empty(c.stripe, "stripe");
  static const std::set<std::string> partitions{"uniform", "stripe", "ey", "mask"};
  if (!partitions.count(c.partition)) throw InputError("partition must be uniform, stripe, ey or mask");
  if (c.partition == "mask" && c.mask.empty()) throw InputError("partition = mask needs 'mask'");
  static const std::set<std::string> methods{"auto", "dense", "iterative"};
  if (!methods.count(c.spectrum_method)) throw InputError("spectrum_method must be auto, dense or iterative");
  if (c.eigen_count < 1) throw InputError("eigen_count must be at least 1");
  if (c.samples < 2) throw InputError("samples must be at least 2");
  if (c.band < 0) throw InputError("band must be non-negative");
  if (!(c.t_end >= 0.0)) throw InputError("t_end must be non-negative");
  if (!(c.dt >= 0.0)) throw InputError("dt must be non-negative");
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  json j{{"model", c.model},
         {"beta", c.beta},
         {"steady", c.steady},
         {"branches", c.branches},
         {"window", c.window},
         {"plot_window", c.plot_window},
         {"dim", c.dim},
         {"n", c.n},
         {"gamma", c.gamma},
         {"partition", c.partition},
         {"fraction", c.fraction},
         {"stripe", c.stripe},
         {"mask", c.mask},
         {"fractions", c.fractions},
         {"eigen_count", c.eigen_count},
         {"spectrum_method", c.spectrum_method},
         {"mode", c.mode},
         {"d_ell", c.d_ell},
         {"continuation", c.continuation},
         {"dt", c.dt},
         {"t_end", c.t_end},
         {"snapshot_stride", c.snapshot_stride},
         {"cfl_safety", c.cfl_safety},
         {"amplitude", c.amplitude},
         {"seed", c.seed},
         {"samples", c.samples},
         {"band", c.band},
         {"out", c.out}};
  if (c.alpha) j["alpha"] = *c.alpha;
  return j;
}

/// Everything a command needs after defaults are filled in.
struct Setup {
  ExperimentConfig config;  ///< resolved
  KineticModel model;
  SteadyState steady;
  Grid grid;
  DomainPartition partition;
  std::optional<BranchSet> bs;  ///< absent when the steady state has no regular branch
  json notes = json::object();
};

inline DomainPartition build_partition(const ExperimentConfig& c, const Grid& grid) {
  if (c.partition == "uniform") return DomainPartition::uniform(grid);
  if (c.partition == "stripe") {
    if (!c.stripe.empty()) return stripe_partition(grid, c.stripe[0], c.stripe[1]);
    if (!(c.fraction >= 0.0 && c.fraction < 1.0)) throw InputError("stripe fraction must lie in [0, 1)");
    return centered_stripe(grid, c.fraction);
  }
  if (c.partition == "ey") return generate_ey_mask(grid, c.fraction);
  return load_mask(grid, c.mask);
}

/// Resolves alpha, the steady state, grid, partition, branch window and branch
/// labels. Throws InputError for anything wrong with the configuration.
inline Setup resolve(ExperimentConfig c) {
  const Family family = parse_family(c.model);
  json notes = json::object();
  if (!c.alpha) {
    if (family != Family::Oregonator) throw InputError("config needs 'alpha'");
    const auto cert = find_admissible_oregonator_alpha(c.beta);
    c.alpha = cert.alpha;
    notes["alpha_scan"] = {{"alpha", cert.alpha}, {"fold_lo", cert.fold_lo}, {"fold_hi", cert.fold_hi},
                           {"min_separation", cert.min_separation}};
  }
  const KineticModel m(family, *c.alpha, c.beta);
  const SteadyState s = steady_state_by_label(m, c.steady);
  const Grid grid = build_grid(c.dim, c.n);
  DomainPartition part = build_partition(c, grid);

  std::optional<BranchSet> bs;
  try {
    if (c.window.empty()) {
      const auto [lo, hi] = default_window(m, s);
      c.window = {lo, hi};
    }
    const BranchSet all = branches(m, s, c.window[0], c.window[1]);
    if (c.branches.empty()) {
      const int own = steady_branch_label(m, s);
      c.branches.push_back(own);
      for (int label : all.labels()) {
        if (label != own && static_cast<int>(c.branches.size()) < std::max(2, part.regions())) c.branches.push_back(label);
      }
    }
    bs = all.select(c.branches);
  } catch (const FoldError& e) {
    notes["branch_error"] = e.what();
  }
  return Setup{c, m, s, grid, std::move(part), std::move(bs), std::move(notes)};
}

inline const BranchSet& require_branches(const Setup& st) {
  if (!st.bs) throw InputError("no valid branch set: " + st.notes.value("branch_error", std::string("unknown")));
  return *st.bs;
}

inline json steady_json(const SteadyState& s) {
  return {{"label", s.label}, {"u", s.u_bar}, {"v", s.v_bar}, {"a0", s.a0},       {"b0", s.b0},
          {"c0", s.c0},       {"d0", s.d0},   {"det", s.det()}, {"trace", s.trace()}};
}

inline json check_json(const Check& c) { return {{"pass", c.pass}, {"margin", c.margin}}; }

inline json deviation_json(const DeviationReport& d) {
  return {{"v_dev", d.v_dev}, {"u_dev", d.u_dev}, {"omega2_measure", d.omega2_measure}};
}

inline json solver_json(const StationaryField& f) {
  std::map<std::string, std::size_t> hist;
  for (int label : f.branch_labels) ++hist["k" + std::to_string(label)];
  return {{"converged", f.converged},   {"iterations", f.iterations},
          {"residual_inf", f.residual_inf}, {"deviation_report", deviation_json(f.deviation)},
          {"gamma", f.gamma},           {"branch_labels_histogram", hist}};
}

/// Field for the configured partition: the constant state on a single region,
/// the discontinuous construction otherwise.
inline StationaryField build_field(const Setup& st) {
  if (st.partition.regions() == 1) return constant_field(st.model, st.grid, st.steady, st.config.gamma);
  return solve_discontinuous(st.model, st.partition, require_branches(st), st.config.gamma, st.steady);
}

/// Outcome of one command: report, stdout summary, exit code and artifact writer.
struct CommandResult {
  json report = json::object();
  json summary = json::object();
  int exit_code = 0;
  std::function<void(const std::filesystem::path&)> write;
};

inline std::string time_name(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", t);
  return buf;
}

inline void write_snapshots(const std::filesystem::path& dir, const Grid& grid, const Trajectory& traj) {
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const std::string name = time_name(traj.times[k]);
    write_field_csv(dir / "snapshots" / (name + ".csv"), grid, traj.snapshots[k].u, traj.snapshots[k].v);
    if (grid.dim() == 2) {
      write_pgm_field(dir / "snapshots" / (name + "_u.pgm"), grid, traj.snapshots[k].u, "u");
      write_pgm_field(dir / "snapshots" / (name + "_v.pgm"), grid, traj.snapshots[k].v, "v");
    }
  }
}

// ---------------------------------------------------------------------------
// Commands

inline CommandResult cmd_steady(const Setup& st) {
  CommandResult r;
  json states = json::array();
  for (const auto& s : constant_steady_states(st.model)) {
    json js = steady_json(s);
    js["f"] = st.model.f(s.u_bar, s.v_bar);
    js["g"] = st.model.g(s.u_bar, s.v_bar);
    states.push_back(js);
  }
  r.report = {{"model", st.config.model}, {"alpha", st.model.alpha()}, {"beta", st.model.beta()}, {"states", states}};
  r.summary = {{"states", states.size()}};
  return r;
}

inline CommandResult cmd_branches(const Setup& st) {
  CommandResult r;
  const auto states = constant_steady_states(st.model);
  std::vector<double> pw = st.config.plot_window;
  if (pw.empty()) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : states) {
      lo = std::min(lo, s.v_bar);
      hi = std::max(hi, s.v_bar);
    }
    const double pad = std::max(1.0, hi - lo);
    pw = {lo - 0.5 * pad, hi + 0.5 * pad};
  }
  json states_json = json::array();
  for (const auto& s : states) states_json.push_back(steady_json(s));
  r.report = {{"model", st.config.model}, {"alpha", st.model.alpha()}, {"beta", st.model.beta()},
              {"states", states_json},    {"plot_window", pw},         {"samples", st.config.samples}};
  if (st.bs) {
    r.report["branch_set"] = {{"labels", st.bs->labels()},
                              {"window", {st.bs->v_lo(), st.bs->v_hi()}},
                              {"max_residual", st.bs->max_residual()},
                              {"min_separation", st.bs->min_separation()}};
  }
  if (st.model.family() == Family::PredatorPrey) r.report["u_m"] = predator_prey_um();
  if (st.model.family() == Family::Oregonator) {
    const auto [flo, fhi] = oregonator_folds(st.model);
    r.report["folds"] = {flo, fhi};
    r.report["excluded_point"] = {-st.model.beta(), 0.0};
  }
  r.summary = {{"branches", branch_catalog(st.model).size()}};
  const KineticModel m = st.model;
  const int samples = st.config.samples;
  r.write = [m, pw, samples](const std::filesystem::path& dir) { write_branch_csv(dir / "branches.csv", m, pw[0], pw[1], samples); };
  return r;
}

inline CommandResult cmd_bifurcate(const Setup& st) {
  CommandResult r;
  const auto mus = eigenvalue_values(
      laplacian_eigenvalues(st.grid, static_cast<std::size_t>(st.config.eigen_count) + 1, SpectrumKind::Discrete));
  json pts = json::array();
  for (const auto& p : bifurcation_gammas(st.steady, mus)) pts.push_back({{"k", p.k}, {"mu", mus[p.k]}, {"gamma", p.gamma}});
  r.report = {{"steady", steady_json(st.steady)}, {"det_over_a0", det_over_a0(st.steady)}, {"gamma_k", pts}};
  r.summary = {{"gamma_k", pts.size()}};
  if (st.config.continuation && st.grid.dim() == 1 && !pts.empty()) {
    const int label = steady_branch_label(st.model, st.steady);
    auto sol = solve_perturbed_regular(st.model, st.grid, label, st.steady, st.config.mode, st.config.d_ell);
    r.report["continuation"] = {{"mode", st.config.mode},
                                {"d_ell", sol.d_ell},
                                {"gamma_pivot", sol.gamma_pivot},
                                {"amplitude", sol.amplitude},
                                {"mode_energy_fraction", sol.mode_energy_fraction},
                                {"branch_direction", sol.branch_direction},
                                {"residual_inf", sol.field.residual_inf}};
    r.summary["amplitude"] = sol.amplitude;
    r.write = [field = std::move(sol.field)](const std::filesystem::path& dir) {
      write_field_csv(dir / "field.csv", field.grid(), field.U, field.V);
    };
  }
  return r;
}

inline CommandResult cmd_construct(const Setup& st) {
  CommandResult r;
  const BranchSet& bs = require_branches(st);
  StationaryField field = solve_discontinuous(st.model, st.partition, bs, st.config.gamma, st.steady);
  r.report = solver_json(field);
  r.report["steady"] = steady_json(st.steady);
  r.report["branches"] = bs.labels();
  if (!st.config.fractions.empty()) {
    const auto sweep = deviation_sweep(st.model, st.grid, bs, st.config.gamma, st.steady, st.config.fractions);
    json rows = json::array();
    bool decreasing = true;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      rows.push_back({{"fraction", st.config.fractions[i]}, {"deviation", deviation_json(sweep[i])}});
      if (i > 0 && !(sweep[i].v_dev < sweep[i - 1].v_dev)) decreasing = false;
    }
    r.report["sweep"] = rows;
    r.report["sweep_v_dev_strictly_decreasing"] = decreasing;
  }
  r.summary = {{"residual_inf", field.residual_inf}, {"v_dev", field.deviation.v_dev}};
  r.write = [field = std::move(field)](const std::filesystem::path& dir) {
    write_field_csv(dir / "field.csv", field.grid(), field.U, field.V);
    if (field.partition.regions() == 2) write_pbm((dir / "mask.pbm").string(), field.partition);
  };
  return r;
}

inline CommandResult cmd_audit(const Setup& st) {
  CommandResult r;
  const BranchSet& bs = require_branches(st);
  const auto au =
      audit_assumptions(st.model, st.steady, bs, st.config.gamma, static_cast<std::size_t>(st.config.eigen_count), st.grid.dim());
  json gk = json::array();
  for (const auto& p : au.gamma_k) gk.push_back({{"k", p.k}, {"gamma", p.gamma}});
  r.report = {{"a0_nonzero", check_json(au.a0_nonzero)},
              {"sineq", check_json(au.sineq)},
              {"sineq_mode", au.sineq_mode},
              {"two_branches", check_json(au.two_branches)},
              {"linear_stability", check_json(au.linear_stability)},
              {"second_branch", check_json(au.second_branch)},
              {"reg_det", check_json(au.reg_det)},
              {"gamma_k", gk},
              {"steady", steady_json(st.steady)},
              {"branches", bs.labels()}};
  if (st.partition.regions() >= 2) {
    try {
      const auto field = solve_discontinuous(st.model, st.partition, bs, st.config.gamma, st.steady);
      const auto ac = autocatalysis_check(st.model, field);
      r.report["autocatalysis"] = {{"fraction", ac.fraction}, {"unstable", ac.unstable}};
    } catch (const Error& e) {
      r.report["autocatalysis"] = {{"error", e.what()}};
    }
  }
  int failed = 0;
  for (const char* k : {"a0_nonzero", "sineq", "two_branches", "linear_stability", "second_branch", "reg_det"}) {
    failed += !r.report[k]["pass"].get<bool>();
  }
  r.summary = {{"failed_checks", failed}, {"sineq_pass", au.sineq.pass}};
  return r;
}

inline SpectrumMethod parse_method(const std::string& s) {
  if (s == "dense") return SpectrumMethod::Dense;
  if (s == "iterative") return SpectrumMethod::Iterative;
  return SpectrumMethod::Auto;
}

inline CommandResult cmd_spectrum(const Setup& st) {
  CommandResult r;
  StationaryField field = build_field(st);
  const Linearization lin = assemble_linearization(st.model, field);
  const auto rep = rightmost_spectrum(lin, static_cast<std::size_t>(st.config.eigen_count), parse_method(st.config.spectrum_method));
  json ev = json::array();
  for (const auto& l : rep.rightmost) ev.push_back(complex_pair(l.real(), l.imag()));
  const auto ac = autocatalysis_check(lin);
  r.report = {{"eigenvalues", ev},
              {"method", rep.method},
              {"residuals", rep.residuals},
              {"verdict", verdict_name(rep.verdict)},
              {"certified", rep.certified},
              {"autocatalysis", {{"fraction", ac.fraction}, {"unstable", ac.unstable}}},
              {"solver", solver_json(field)}};
  if (st.partition.regions() == 1) r.report["regular_verdict"] = regular_verdict_name(classify_regular(lin.a));
  r.summary = {{"max_real", rep.max_real()}, {"verdict", verdict_name(rep.verdict)}, {"certified", rep.certified}};
  if (!rep.certified) {
    r.exit_code = 1;
    r.report["error"] = "eigenpairs could not be certified to residual 1e-8";
  }
  r.write = [field = std::move(field)](const std::filesystem::path& dir) {
    write_field_csv(dir / "field.csv", field.grid(), field.U, field.V);
  };
  return r;
}

inline SimulationConfig sim_config(const Setup& st, const SimState& init, WorkerPool& pool, const KineticModel& m) {
  SimulationConfig cfg{st.grid, st.config.gamma, st.config.dt, st.config.t_end, st.config.snapshot_stride, st.config.cfl_safety, 1};
  if (cfg.dt == 0.0) cfg.dt = stable_dt(m, st.grid, st.config.gamma, init, st.config.cfl_safety, pool);
  const std::size_t steps = auto_steps(st.config.t_end, cfg.dt);
  if (cfg.snapshot_stride == 0) cfg.snapshot_stride = std::max<std::size_t>(1, steps / 10);
  cfg.norm_stride = std::max<std::size_t>(1, steps / 1000);
  return cfg;
}

inline json trajectory_json(const Trajectory& t) {
  json j{{"steps", t.steps}, {"dt", t.dt}, {"snapshots", t.snapshots.size()}, {"t_end", t.times.empty() ? 0.0 : t.steps * t.dt}};
  if (!t.norms.empty()) j["final_norms"] = {{"du_inf", t.norms.back().du_inf}, {"dv_inf", t.norms.back().dv_inf}};
  return j;
}

/// Piecewise-constant start: u = k_region(V_bar), v = V_bar.
inline CommandResult cmd_simulate(const Setup& st, WorkerPool& pool) {
  CommandResult r;
  const std::size_t n = st.grid.cell_count();
  SimState init{std::vector<double>(n, st.steady.u_bar), std::vector<double>(n, st.steady.v_bar)};
  if (st.partition.regions() > 1) {
    const BranchSet& bs = require_branches(st);
    if (bs.size() < static_cast<std::size_t>(st.partition.regions())) throw InputError("fewer branches than regions");
    for (std::size_t c = 0; c < n; ++c) init.u[c] = bs.value(static_cast<std::size_t>(st.partition.region(c)) - 1, st.steady.v_bar);
  }
  const SimulationConfig cfg = sim_config(st, init, pool, st.model);
  const SimState ref = init;
  Trajectory traj = simulate(st.model, cfg, std::move(init), pool, &ref);
  r.report = trajectory_json(traj);
  r.report["reference"] = "initial state";
  r.summary = {{"steps", traj.steps}};
  const Grid grid = st.grid;
  r.write = [grid, traj = std::move(traj)](const std::filesystem::path& dir) {
    write_field_csv(dir / "field.csv", grid, traj.final_state.u, traj.final_state.v);
    write_norms_csv(dir / "norms.csv", traj.norms);
    write_snapshots(dir, grid, traj);
  };
  return r;
}

/// Slack on the v comparison against the constructed field: the run stops at
/// finite time, so it has not fully reached the stationary state.
inline constexpr double kEyVSlack = 1e-6;

inline CommandResult cmd_ey(const Setup& st, WorkerPool& pool) {
  CommandResult r;
  if (st.model.family() != Family::PredatorPrey) throw InputError("ey needs model = PredatorPrey");
  if (st.partition.regions() != 2) throw InputError("ey needs a two-region partition");
  const BranchSet& bs = require_branches(st);
  std::optional<StationaryField> ctor;
  try {
    ctor = solve_discontinuous(st.model, st.partition, bs, st.config.gamma, st.steady);
  } catch (const Error& e) {
    r.report["constructor_error"] = e.what();
  }
  std::optional<SimState> ref;
  if (ctor) ref = SimState{ctor->U, ctor->V};
  EyOptions opt;
  opt.dt = st.config.dt;
  opt.cfl_safety = st.config.cfl_safety;
  opt.snapshot_stride = st.config.snapshot_stride;
  opt.band = st.config.band;
  EyResult res = run_ey_experiment(st.model, st.partition, st.config.gamma, st.steady, st.config.t_end, opt, pool,
                                   ref ? &*ref : nullptr);
  const RegionStats& s = res.stats;
  r.report["trajectory"] = trajectory_json(res.trajectory);
  r.report["stats"] = {{"omega1_interior_cells", s.omega1_interior}, {"omega2_interior_cells", s.omega2_interior},
                       {"u_inf_omega2_interior", s.u_inf_omega2},    {"u_dev_omega1_interior", s.u_dev_omega1},
                       {"v_dev", s.v_dev},                           {"v_dev_interior", s.v_dev_interior}};
  r.report["steady"] = steady_json(st.steady);
  r.report["u_m"] = predator_prey_um();
  if (ctor) {
    r.report["constructor"] = solver_json(*ctor);
    r.report["checks"] = {{"u_omega2_below_1e-3", s.u_inf_omega2 <= 1e-3},
                          {"u_omega1_within_constructor_deviation", s.u_dev_omega1 <= ctor->deviation.u_dev_1()},
                          {"v_within_constructor_deviation", s.v_dev <= ctor->deviation.v_dev + kEyVSlack},
                          {"v_slack", kEyVSlack}};
  }
  r.summary = {{"u_inf_omega2_interior", s.u_inf_omega2}, {"u_dev_omega1_interior", s.u_dev_omega1}, {"v_dev", s.v_dev}};
  const Grid grid = st.grid;
  const DomainPartition part = st.partition;
  r.write = [grid, part, ctor = std::move(ctor), traj = std::move(res.trajectory)](const std::filesystem::path& dir) {
    write_field_csv(dir / "field.csv", grid, traj.final_state.u, traj.final_state.v);
    if (ctor) write_field_csv(dir / "constructor_field.csv", grid, ctor->U, ctor->V);
    write_norms_csv(dir / "norms.csv", traj.norms);
    write_pbm((dir / "mask.pbm").string(), part);
    write_snapshots(dir, grid, traj);
  };
  return r;
}

inline CommandResult cmd_decay(const Setup& st, WorkerPool& pool) {
  CommandResult r;
  StationaryField field = build_field(st);
  DecayOptions opt;
  opt.dt = st.config.dt;
  opt.cfl_safety = st.config.cfl_safety;
  opt.seed = st.config.seed;
  DecayResult d = perturbation_decay(st.model, field, st.config.amplitude, st.config.t_end, opt, pool);
  r.report = {{"config", config_to_json(st.config)},
              {"seed", d.seed},
              {"verdict", d.verdict},
              {"rate", d.rate},
              {"final_dev", d.final_dev},
              {"initial_dev", d.initial_dev},
              {"dt", d.dt},
              {"steps", d.steps},
              {"solver", solver_json(field)}};
  if (!d.failure.empty()) r.report["failure"] = d.failure;
  r.summary = {{"verdict", d.verdict}, {"rate", d.rate}, {"final_dev", d.final_dev}};
  r.write = [norms = std::move(d.norms)](const std::filesystem::path& dir) { write_norms_csv(dir / "norms.csv", norms); };
  return r;
}

// ---------------------------------------------------------------------------
// Driver

inline std::string one_line(const json& j) { return j.dump(); }

inline void write_common(const std::filesystem::path& dir, const Setup* st, const json& raw_config) {
  std::filesystem::create_directories(dir);
  write_json(dir / "config.json", st ? config_to_json(st->config) : raw_config);
  write_json(dir / "version.json", json{{"tool", kToolName}, {"version", kToolVersion}});
}

inline CommandResult dispatch(const std::string& cmd, const Setup& st, WorkerPool& pool) {
  if (cmd == "steady") return cmd_steady(st);
  if (cmd == "branches") return cmd_branches(st);
  if (cmd == "bifurcate") return cmd_bifurcate(st);
  if (cmd == "construct") return cmd_construct(st);
  if (cmd == "audit") return cmd_audit(st);
  if (cmd == "spectrum") return cmd_spectrum(st);
  if (cmd == "simulate") return cmd_simulate(st, pool);
  if (cmd == "ey") return cmd_ey(st, pool);
  if (cmd == "decay") return cmd_decay(st, pool);
  throw InputError("unknown command " + cmd);
}

/// Parses the command line, runs one command and returns the exit code:
/// 0 success, 1 computational failure, 2 configuration error.
inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Discontinuous stationary solutions of ODE-diffusion systems"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"steady", "constant steady states"},
      {"branches", "branches of f = 0 and nullcline samples"},
      {"bifurcate", "bifurcation diffusions and perturbed regular solution"},
      {"construct", "discontinuous stationary solution"},
      {"audit", "structural checks on the constant state and branches"},
      {"spectrum", "rightmost eigenvalues of the linearisation"},
      {"simulate", "explicit Euler run from piecewise-constant data"},
      {"ey", "predator-prey run from EY-shaped initial data"},
      {"decay", "perturbation decay of a stationary field"}};
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "flat JSON config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides RDLAB_OUT and the config)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "perturbation seed");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  auto fail = [&](int code, const std::string& msg, const std::string& dir) {
    json s{{"command", cmd}, {"status", "error"}, {"exit", code}, {"error", msg}};
    if (!dir.empty()) s["out"] = dir;
    out << one_line(s) << '\n';
    err << "rdlab " << cmd << ": " << msg << '\n';
    return code;
  };

  json raw;
  std::optional<Setup> setup;
  std::string dir;
  try {
    raw = read_json(config_path);
    ExperimentConfig cfg = config_from_json(raw);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) {
      dir = out_dir;
    } else if (const char* env = std::getenv("RDLAB_OUT"); env && *env) {
      dir = env;
    } else if (!cfg.out.empty()) {
      dir = cfg.out;
    } else {
      dir = std::string("rdlab_out/") + cmd;
    }
    setup.emplace(resolve(std::move(cfg)));
  } catch (const InputError& e) {
    return fail(2, e.what(), "");
  } catch (const Error& e) {
    return fail(1, e.what(), "");
  }

  WorkerPool pool(threads);
  CommandResult result;
  try {
    result = dispatch(cmd, *setup, pool);
  } catch (const InputError& e) {
    return fail(2, e.what(), "");
  } catch (const Error& e) {
    try {
      write_common(dir, &*setup, raw);
      write_json(std::filesystem::path(dir) / "report.json", json{{"error", e.what()}, {"notes", setup->notes}});
    } catch (const std::exception&) {
    }
    return fail(1, e.what(), dir);
  }

  try {
    write_common(dir, &*setup, raw);
    if (!setup->notes.empty()) result.report["notes"] = setup->notes;
    write_json(std::filesystem::path(dir) / "report.json", result.report);
    if (result.write) result.write(dir);
  } catch (const std::exception& e) {
    return fail(1, std::string("writing artifacts: ") + e.what(), dir);
  }
  json s{{"command", cmd}, {"status", result.exit_code == 0 ? "ok" : "error"}, {"exit", result.exit_code}, {"out", dir}};
  for (const auto& [k, v] : result.summary.items()) s[k] = v;
  out << one_line(s) << '\n';
  return result.exit_code;
}

}  // namespace rdlab
