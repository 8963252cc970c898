#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "rdlab/simulate.hpp"

using namespace rdlab;

namespace {

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Gray-Scott u-equation with the v-equation switched off.
struct FrozenVGrayScott {
  KineticModel m{Family::GrayScott, 0.04, 0.1};
  double f(double u, double v) const { return m.f(u, v); }
  double g(double, double) const { return 0.0; }
  Jacobian jacobian(double u, double v) const {
    Jacobian j = m.jacobian(u, v);
    j.gu = j.gv = 0.0;
    return j;
  }
};

// u' = u^2 with a Jacobian that hides the growth from the CFL check.
struct Explosive {
  double f(double u, double) const { return u * u; }
  double g(double, double) const { return 0.0; }
  Jacobian jacobian(double, double) const { return {}; }
};

StationaryField oregonator_field(int n) {
  const double alpha = find_admissible_oregonator_alpha(2.0).alpha;
  const KineticModel m(Family::Oregonator, alpha, 2.0);
  const auto s = steady_state_by_label(m, 2);
  const auto [lo, hi] = default_window(m, s);
  const auto bs = branches(m, s, lo, hi).select({2, 3});
  return solve_discontinuous(m, centered_stripe(build_grid(1, n), 0.05), bs, 0.5, s);
}

KineticModel oregonator_model() { return KineticModel(Family::Oregonator, find_admissible_oregonator_alpha(2.0).alpha, 2.0); }

SimState random_state(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  SimState s;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    s.u.push_back(dist(rng));
    s.v.push_back(dist(rng));
  }
  return s;
}

}  // namespace

TEST(Simulate, ZeroReactionConservesMass) {
  for (const Grid& g : {build_grid(1, 64), build_grid(2, 32)}) {
    WorkerPool pool(2);
    const NeumannLaplacian lap(g);
    const double gamma = 0.7;
    const double dt = 0.9 * diffusive_dt_limit(g, gamma);
    SimState cur = random_state(g, 11), next;
    for (int k = 0; k < 200; ++k) {
      const double before = mean(cur.v);
      step(ZeroReaction{}, lap, gamma, cur, next, dt, pool);
      std::swap(cur, next);
      EXPECT_LE(std::abs(mean(cur.v) - before), 1e-13);
    }
  }
}

TEST(Simulate, StepFormula) {
  const KineticModel m(Family::Brusselator, 1.0, 2.0);
  const Grid g = build_grid(1, 8);
  const SimState s = random_state(g, 3);
  const double dt = 1e-3, gamma = 0.2;
  const SimState out = step(m, g, gamma, s, dt);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double left = c > 0 ? s.v[c - 1] : s.v[c];
    const double right = c + 1 < g.cell_count() ? s.v[c + 1] : s.v[c];
    const double lap = (left - 2 * s.v[c] + right) * 64.0;
    EXPECT_NEAR(out.u[c], s.u[c] + dt * m.f(s.u[c], s.v[c]), 1e-15);
    EXPECT_NEAR(out.v[c], s.v[c] + dt * (gamma * lap + m.g(s.u[c], s.v[c])), 1e-14);
  }
}

TEST(Simulate, StationaryFieldIsFixedPoint) {
  const auto field = oregonator_field(200);
  const KineticModel m = oregonator_model();
  const NeumannLaplacian lap(field.grid());
  WorkerPool pool(1);
  const SimState s0{field.U, field.V};
  const double dt = stable_dt(m, field.grid(), field.gamma, s0, 0.9, pool);
  SimState cur = s0, next;
  step(m, lap, field.gamma, cur, next, dt, pool);
  const NormSample one = state_distance(0.0, next, s0);
  EXPECT_LE(std::max(one.du_inf, one.dv_inf) / dt, 10.0 * 1e-9);
  for (int k = 0; k < 1000; ++k) {
    step(m, lap, field.gamma, cur, next, dt, pool);
    std::swap(cur, next);
  }
  const NormSample drift = state_distance(0.0, cur, s0);
  EXPECT_LE(std::max(drift.du_inf, drift.dv_inf), 1e-8);
}

TEST(Simulate, FrozenVGrayScottDecaysAtAlpha) {
  const Grid g = build_grid(1, 16);
  const double u0 = 1e-3, v0 = 0.5, alpha = 0.04, T = 20.0;
  SimState init{std::vector<double>(16, u0), std::vector<double>(16, v0)};
  WorkerPool pool(1);
  const SimulationConfig cfg{g, 1.0, 1e-3, T, 1000, 0.9, 1};
  const Trajectory traj = simulate(FrozenVGrayScott{}, cfg, init, pool);
  // Bernoulli solution of u' = v u^2 - alpha u.
  const double e = std::exp(-alpha * T);
  const double exact = alpha * u0 * e / (alpha - v0 * u0 * (1.0 - e));
  for (std::size_t c = 0; c < 16; ++c) {
    EXPECT_NEAR(traj.final_state.u[c], exact, 1e-3 * exact);
    EXPECT_EQ(traj.final_state.v[c], v0);
  }
  EXPECT_NEAR(std::log(traj.final_state.u[0] / u0) / T, -alpha, 1e-3);
}

TEST(Simulate, LinearRegimeGrowthMatchesModeEigenvalue) {
  // Brusselator (1, 2): a0 = 1, b0 = 1, c0 = -2, d0 = -1. With gamma mu_1 = 2 the
  // mode-1 matrix [[1, 1], [-2, -3]] has the real eigenvalue sqrt(2) - 1.
  const KineticModel m(Family::Brusselator, 1.0, 2.0);
  const auto s = steady_state_by_label(m, 1);
  const int n = 64;
  const Grid g = build_grid(1, n);
  const double mu1 = discrete_mode_1d(n, 1);
  const double gamma = 2.0 / mu1;
  const double lambda = std::sqrt(2.0) - 1.0;
  // Eigenvector (1, lambda - 1) of [[1, 1], [-2, -3]].
  const double eps = 1e-8;
  SimState init;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const double mode = std::cos(std::numbers::pi * g.x(c));
    init.u.push_back(s.u_bar + eps * mode);
    init.v.push_back(s.v_bar + eps * (lambda - 1.0) * mode);
  }
  auto amplitude = [&](const SimState& st) {
    double a = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) a += (st.u[c] - s.u_bar) * std::cos(std::numbers::pi * g.x(c));
    return a;
  };
  WorkerPool pool(1);
  const double T = 1.0 / lambda;
  const SimulationConfig cfg{g, gamma, 1e-4, T, 1u << 30, 0.9, 1};
  const Trajectory traj = simulate(m, cfg, init, pool);
  const double rate = std::log(amplitude(traj.final_state) / amplitude(init)) / T;
  EXPECT_NEAR(rate, lambda, 0.05 * lambda);
}

TEST(Simulate, ThreadCountIndependent) {
  const KineticModel m(Family::PredatorPrey, 1.0, 3.2);
  const auto s = steady_state_by_label(m, 1);
  const Grid g = build_grid(2, 32);
  const auto part = generate_ey_mask(g, 0.05);
  const SimState init = ey_initial_state(part, s);
  const SimulationConfig cfg{g, 0.05, 1e-3, 0.5, 100, 0.9, 10};
  SimState ref{std::vector<double>(g.cell_count(), s.u_bar), std::vector<double>(g.cell_count(), s.v_bar)};
  WorkerPool one(1), three(3), four(4);
  const Trajectory a = simulate(m, cfg, init, one, &ref);
  const Trajectory b = simulate(m, cfg, init, three, &ref);
  const Trajectory c = simulate(m, cfg, init, four, &ref);
  EXPECT_TRUE(bitwise_equal(a.final_state.u, b.final_state.u));
  EXPECT_TRUE(bitwise_equal(a.final_state.v, b.final_state.v));
  EXPECT_TRUE(bitwise_equal(a.final_state.u, c.final_state.u));
  EXPECT_TRUE(bitwise_equal(a.final_state.v, c.final_state.v));
  ASSERT_EQ(a.norms.size(), b.norms.size());
  for (std::size_t k = 0; k < a.norms.size(); ++k) EXPECT_EQ(a.norms[k].dv_inf, b.norms[k].dv_inf);
}

TEST(Simulate, SnapshotCountAndTimes) {
  const Grid g = build_grid(1, 16);
  WorkerPool pool(1);
  const SimulationConfig cfg{g, 1.0, 1e-3, 0.05, 7, 0.9, 1};
  const Trajectory t = simulate(ZeroReaction{}, cfg, random_state(g, 5), pool);
  EXPECT_EQ(t.steps, 50u);
  EXPECT_EQ(t.snapshots.size(), 1u + 50u / 7u);
  for (std::size_t k = 1; k < t.times.size(); ++k) EXPECT_GT(t.times[k], t.times[k - 1]);
  EXPECT_TRUE(t.norms.empty());
}

TEST(Simulate, CflViolations) {
  const Grid g = build_grid(1, 32);
  WorkerPool pool(1);
  const SimState s = random_state(g, 1);
  const double limit = diffusive_dt_limit(g, 1.0);
  EXPECT_DOUBLE_EQ(limit, 1.0 / (2.0 * 32 * 32));
  EXPECT_THROW(simulate(ZeroReaction{}, SimulationConfig{g, 1.0, limit, 1.0, 1, 0.9, 1}, s, pool), CflError);
  // Reaction bound: Brusselator Lipschitz sum at (1, 2) is 5.
  const KineticModel m(Family::Brusselator, 1.0, 2.0);
  SimState c{std::vector<double>(32, 1.0), std::vector<double>(32, 2.0)};
  EXPECT_DOUBLE_EQ(reaction_lipschitz(m, c, pool), 5.0);
  EXPECT_THROW(simulate(m, SimulationConfig{build_grid(1, 4), 0.01, 0.3, 1.0, 1, 0.9, 1},
                        SimState{std::vector<double>(4, 1.0), std::vector<double>(4, 2.0)}, pool),
               CflError);
}

TEST(Simulate, BlowUpCarriesStepIndex) {
  const Grid g = build_grid(1, 8);
  WorkerPool pool(2);
  SimState s{std::vector<double>(8, 1.0), std::vector<double>(8, 0.0)};
  s.u[5] = 1e200;
  try {
    simulate(Explosive{}, SimulationConfig{g, 1.0, 1e-3, 1.0, 1, 0.9, 1}, s, pool);
    FAIL() << "expected blow-up";
  } catch (const BlowUpError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(Simulate, EyRequiresStableSetup) {
  const KineticModel m(Family::PredatorPrey, 1.0, 0.4);
  const auto s = steady_state_by_label(m, 1);
  ASSERT_LT(s.u_bar, predator_prey_um());
  const Grid g = build_grid(2, 16);
  WorkerPool pool(1);
  EXPECT_THROW(run_ey_experiment(m, generate_ey_mask(g, 0.05), 0.05, s, 1.0, {}, pool), InputError);
}

TEST(Simulate, EyZeroAreaStaysUniform) {
  const KineticModel m(Family::PredatorPrey, 1.0, 3.2);
  const auto s = steady_state_by_label(m, 1);
  const Grid g = build_grid(2, 16);
  WorkerPool pool(2);
  const auto res = run_ey_experiment(m, generate_ey_mask(g, 0.0), 0.05, s, 5.0, {}, pool);
  const auto& fin = res.trajectory.final_state;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    EXPECT_EQ(fin.u[c], fin.u[0]);
    EXPECT_EQ(fin.v[c], fin.v[0]);
  }
  EXPECT_LE(std::abs(fin.u[0] - s.u_bar), 1e-12);
  EXPECT_LE(std::abs(fin.v[0] - s.v_bar), 1e-12);
}

TEST(Simulate, EyConvergesToConstructedField) {
  const KineticModel m(Family::PredatorPrey, 1.0, 3.2);
  const auto s = steady_state_by_label(m, 1);
  const auto [lo, hi] = default_window(m, s);
  const auto bs = branches(m, s, lo, hi).select({1, 3});
  const Grid g = build_grid(2, 32);
  const auto part = generate_ey_mask(g, 0.05);
  const double gamma = 0.05;
  const auto field = solve_discontinuous(m, part, bs, gamma, s);
  const SimState ref{field.U, field.V};
  WorkerPool pool(2);
  const auto res = run_ey_experiment(m, part, gamma, s, 100.0, {}, pool, &ref);
  const auto& last = res.trajectory.norms.back();
  EXPECT_LE(last.du_inf, 1e-6);
  EXPECT_LE(last.dv_inf, 1e-6);
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (part.region(c) == 2) EXPECT_EQ(res.trajectory.final_state.u[c], 0.0);
  }
  EXPECT_EQ(res.stats.u_inf_omega2, 0.0);
  EXPECT_LE(res.stats.v_dev, field.deviation.v_dev + 1e-6);
}

TEST(Simulate, OregonatorPerturbationDecays) {
  const auto field = oregonator_field(100);
  WorkerPool pool(1);
  const auto r = perturbation_decay(oregonator_model(), field, 1e-2, 15.0, {}, pool);
  EXPECT_EQ(r.verdict, "decayed");
  EXPECT_LT(r.rate, 0.0);
  EXPECT_LT(r.final_dev, 1e-4);
  EXPECT_NEAR(r.initial_dev, 1e-2, 1e-2);
}

TEST(Simulate, GrayScottPerturbationEscapes) {
  const KineticModel m(Family::GrayScott, 0.04, 0.1);
  const auto s = steady_state_by_label(m, 1);
  const auto [lo, hi] = default_window(m, s);
  const auto bs = branches(m, s, lo, hi).select({1, 2});
  const auto field = solve_discontinuous(m, centered_stripe(build_grid(1, 64), 0.1), bs, 1.0, s);
  WorkerPool pool(1);
  const auto r = perturbation_decay(m, field, 1e-6, 250.0, {}, pool);
  EXPECT_EQ(r.verdict, "escaped");
  EXPECT_GT(r.rate, 0.0);
  EXPECT_GT(r.final_dev, r.initial_dev);
}

TEST(Simulate, ZeroAmplitudeIsStationary) {
  const auto field = oregonator_field(64);
  WorkerPool pool(1);
  const auto r = perturbation_decay(oregonator_model(), field, 0.0, 2.0, {}, pool);
  EXPECT_EQ(r.verdict, "stationary");
  EXPECT_EQ(r.rate, 0.0);
  EXPECT_LE(r.final_dev, 1e-8);
}

TEST(Simulate, PerturbationSeedIsDeterministic) {
  const auto field = oregonator_field(64);
  WorkerPool one(1), two(2);
  const auto a = perturbation_decay(oregonator_model(), field, 1e-3, 1.0, {}, one);
  const auto b = perturbation_decay(oregonator_model(), field, 1e-3, 1.0, {}, two);
  DecayOptions other;
  other.seed = 7;
  const auto c = perturbation_decay(oregonator_model(), field, 1e-3, 1.0, other, one);
  EXPECT_EQ(a.final_dev, b.final_dev);
  EXPECT_EQ(a.rate, b.rate);
  EXPECT_NE(a.final_dev, c.final_dev);
}

TEST(Simulate, LogRateFitRecoversExponent) {
  std::vector<NormSample> norms;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.1 * k;
    norms.push_back({t, 3.0 * std::exp(-0.7 * t), 0.5 * std::exp(-0.9 * t)});
  }
  EXPECT_NEAR(fit_log_rate(norms, 5.0), -0.7, 1e-12);
  EXPECT_EQ(fit_log_rate({}, 0.0), 0.0);
}
