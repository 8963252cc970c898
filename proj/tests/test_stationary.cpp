#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rdlab/stationary.hpp"

using namespace rdlab;

namespace {

const double kPi2 = std::numbers::pi * std::numbers::pi;

struct Setup {
  KineticModel model;
  SteadyState steady;
  BranchSet bs;
};

// Gray-Scott (0.04, 0.1) around (0, 1): region 1 on k1 = 0, region 2 on k2 = alpha/V.
Setup gray_scott() {
  const KineticModel m(Family::GrayScott, 0.04, 0.1);
  const auto s = steady_state_by_label(m, 1);
  const auto [lo, hi] = default_window(m, s);
  return {m, s, branches(m, s, lo, hi).select({1, 2})};
}

// Brusselator (1, 2) around (1, 2): region 1 on k1, region 2 on k2.
Setup brusselator() {
  const KineticModel m(Family::Brusselator, 1.0, 2.0);
  const auto s = steady_state_by_label(m, 1);
  const auto [lo, hi] = default_window(m, s);
  return {m, s, branches(m, s, lo, hi).select({1, 2})};
}

void expect_field_invariants(const KineticModel& m, const BranchSet& bs, const StationaryField& f, double tol) {
  EXPECT_LE(f.residual_inf, tol);
  for (std::size_t c = 0; c < f.V.size(); ++c) {
    EXPECT_LE(std::abs(m.f(f.U[c], f.V[c])), 1e-9);
    const std::size_t r = static_cast<std::size_t>(f.partition.region(c)) - 1;
    EXPECT_EQ(f.U[c], bs.value(r, f.V[c]));
    EXPECT_EQ(f.branch_labels[c], bs.label(r));
  }
}

}  // namespace

TEST(Stationary, EmptyRegionGivesConstantField) {
  auto [m, s, bs] = gray_scott();
  const Grid g = build_grid(1, 64);
  const auto f = solve_discontinuous(m, centered_stripe(g, 0.0), bs, 1.0, s);
  EXPECT_EQ(f.residual_inf, 0.0);
  EXPECT_EQ(f.iterations, 0);
  EXPECT_EQ(f.deviation.v_dev, 0.0);
  for (std::size_t c = 0; c < f.V.size(); ++c) {
    EXPECT_EQ(f.V[c], 1.0);
    EXPECT_EQ(f.U[c], 0.0);
  }
}

TEST(Stationary, GrayScottStripe) {
  auto [m, s, bs] = gray_scott();
  const Grid g = build_grid(1, 256);
  const auto part = stripe_partition(g, 0.45, 0.55);
  const auto f = solve_discontinuous(m, part, bs, 1.0, s);
  EXPECT_TRUE(f.converged);
  expect_field_invariants(m, bs, f, 1e-9);
  for (std::size_t c = 0; c < f.V.size(); ++c) {
    EXPECT_LT(f.V[c], 1.0);
    if (part.region(c) == 2) EXPECT_NEAR(f.U[c], 0.04 / f.V[c], 1e-15);
    else EXPECT_EQ(f.U[c], 0.0);
  }
  // Dip is deepest inside the stripe.
  EXPECT_LT(f.V[128], f.V[0]);
  EXPECT_GT(f.deviation.v_dev, 0.0);
  EXPECT_DOUBLE_EQ(f.deviation.omega2_measure, part.measure(2));
}

TEST(Stationary, BrusselatorSmallRegion) {
  auto [m, s, bs] = brusselator();
  const Grid g = build_grid(1, 256);
  const auto part = centered_stripe(g, 0.05);
  const auto f = solve_discontinuous(m, part, bs, 1.0, s);
  expect_field_invariants(m, bs, f, 1e-9);
  for (std::size_t c = 0; c < f.V.size(); ++c) {
    if (part.region(c) == 1) EXPECT_NEAR(f.U[c], 1.0, 0.1);
    else EXPECT_NEAR(f.U[c], 0.5, 0.1);
  }
  EXPECT_NEAR(f.deviation.u_dev_2(), 0.0, 0.1);
}

TEST(Stationary, SymmetricPartitionGivesSymmetricV) {
  for (auto setup : {gray_scott(), brusselator()}) {
    const Grid g = build_grid(1, 200);
    const auto f = solve_discontinuous(setup.model, centered_stripe(g, 0.1), setup.bs, 1.0, setup.steady);
    for (std::size_t c = 0; c < 100; ++c) EXPECT_NEAR(f.V[c], f.V[199 - c], 1e-9);
  }
}

TEST(Stationary, TwoDimensionalEyMask) {
  auto [m, s, bs] = gray_scott();
  const Grid g = build_grid(2, 32);
  const auto f = solve_discontinuous(m, generate_ey_mask(g, 0.05), bs, 1.0, s);
  expect_field_invariants(m, bs, f, 1e-9);
}

TEST(Stationary, DeviationSweepShrinks) {
  auto [m, s, bs] = gray_scott();
  const Grid g = build_grid(1, 256);
  const auto reports = deviation_sweep(m, g, bs, 1.0, s, {0.1, 0.05, 0.025});
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_GT(reports[0].v_dev, reports[1].v_dev);
  EXPECT_GT(reports[1].v_dev, reports[2].v_dev);
  for (const auto& r : reports) {
    EXPECT_GE(r.v_dev, 0.0);
    for (double u : r.u_dev) EXPECT_GE(u, 0.0);
  }
  const auto zero = deviation_sweep(m, g, bs, 1.0, s, {0.0});
  EXPECT_EQ(zero[0].v_dev, 0.0);
  EXPECT_EQ(zero[0].u_dev_1(), 0.0);
  EXPECT_EQ(zero[0].u_dev_2(), 0.0);
  EXPECT_THROW(deviation_sweep(m, g, bs, 1.0, s, {1.0}), InputError);
  EXPECT_THROW(deviation_sweep(m, g, bs, 1.0, s, {-0.1}), InputError);
}

TEST(Stationary, RefusesResonantGamma) {
  auto [m, s, bs] = brusselator();
  const Grid g = build_grid(1, 128);
  const double gamma = 1.0 / discrete_mode_1d(128, 1);
  try {
    solve_discontinuous(m, centered_stripe(g, 0.05), bs, gamma, s);
    FAIL() << "resonant gamma accepted";
  } catch (const ResonanceError& e) {
    EXPECT_EQ(e.mode(), 1u);
  }
  EXPECT_NO_THROW(solve_discontinuous(m, centered_stripe(g, 0.05), bs, gamma * (1 + 1e-3), s));
}

TEST(Stationary, RejectsBadInputs) {
  auto [m, s, bs] = gray_scott();
  const Grid g = build_grid(1, 64);
  EXPECT_THROW(solve_discontinuous(m, centered_stripe(g, 0.1), bs, 0.0, s), InputError);
  EXPECT_THROW(solve_discontinuous(m, centered_stripe(g, 0.1), bs.select({1}), 1.0, s), InputError);
  // Region 1 must use the branch through the constant state.
  EXPECT_THROW(solve_discontinuous(m, centered_stripe(g, 0.1), bs.select({2, 1}), 1.0, s), InputError);
}

TEST(Stationary, LargeRegionLeavesTrustWindow) {
  auto [m, s, bs] = brusselator();
  const Grid g = build_grid(1, 128);
  EXPECT_THROW(solve_discontinuous(m, centered_stripe(g, 0.9), bs, 1.0, s), WindowError);
}

TEST(Stationary, BifurcationGammaExamples) {
  const auto br = steady_state_by_label(KineticModel(Family::Brusselator, 1, 2), 1);
  const std::vector<double> mus{0.0, kPi2, 4 * kPi2};
  const auto b = bifurcation_gammas(br, mus);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].k, 1u);
  EXPECT_NEAR(b[0].gamma, 1.0 / kPi2, 1e-15);
  EXPECT_NEAR(b[0].gamma, 0.1013211, 1e-7);

  const KineticModel gs(Family::GrayScott, 0.04, 0.1);
  const auto s3 = steady_state_by_label(gs, 3);
  const double det_oracle = 0.04 * (std::pow(0.04 / s3.v_bar, 2) - 0.1);
  EXPECT_NEAR(s3.det(), det_oracle, 1e-14);
  EXPECT_NEAR(s3.det(), 0.2379339, 1e-7);
  EXPECT_NEAR(bifurcation_gammas(s3, mus)[0].gamma, det_oracle / (0.04 * kPi2), 1e-12);
  EXPECT_NEAR(bifurcation_gammas(s3, mus)[0].gamma, 0.6026935, 1e-7);

  const auto low = steady_state_by_label(KineticModel(Family::Brusselator, 1, 0.5), 1);
  EXPECT_TRUE(bifurcation_gammas(low, mus).empty());

  SteadyState degenerate = br;
  degenerate.a0 = 0.0;
  EXPECT_THROW(bifurcation_gammas(degenerate, mus), InputError);
}

TEST(Stationary, BifurcationGammasHomogeneousProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.1, 10.0);
  const auto br = steady_state_by_label(KineticModel(Family::Brusselator, 1.3, 2.9), 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> mus{0.0};
    for (int k = 0; k < 6; ++k) mus.push_back(uni(rng));
    const double scale = std::ldexp(1.0, static_cast<int>(rng() % 9) - 4);
    std::vector<double> scaled;
    for (double mu : mus) scaled.push_back(mu * scale);
    const auto a = bifurcation_gammas(br, mus), b = bifurcation_gammas(br, scaled);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i].gamma, a[i].gamma / scale);
  }
}

TEST(Stationary, SineqMargin) {
  const auto br = steady_state_by_label(KineticModel(Family::Brusselator, 1, 2), 1);
  const std::vector<double> mus{0.0, kPi2, 4 * kPi2};
  std::size_t worst = 99;
  EXPECT_NEAR(sineq_margin(br, 0.1, mus, &worst), std::abs(1 - 0.1 * kPi2), 1e-15);
  EXPECT_EQ(worst, 1u);
  EXPECT_THROW(check_sineq(br, 1.0 / kPi2, mus), ResonanceError);
  EXPECT_NO_THROW(check_sineq(br, 0.2, mus));
}

TEST(Stationary, PerturbedRegularBrusselator) {
  const KineticModel m(Family::Brusselator, 1, 2);
  const auto s = steady_state_by_label(m, 1);
  const Grid g = build_grid(1, 128);
  std::optional<PerturbedSolution> found;
  for (double d : {1.001, 0.999}) {
    try {
      found = solve_perturbed_regular(m, g, 1, s, 1, d);
      break;
    } catch (const CollapseError&) {
    }
  }
  ASSERT_TRUE(found.has_value());
  EXPECT_GE(found->amplitude, 1e-3);
  EXPECT_GE(found->mode_energy_fraction, 0.9);
  EXPECT_LE(found->field.residual_inf, 1e-8);
  EXPECT_NEAR(found->gamma_pivot, 1.0 / discrete_mode_1d(128, 1), 1e-15);
}

TEST(Stationary, PerturbedAmplitudeGrowsAwayFromPivot) {
  const KineticModel m(Family::Brusselator, 1, 2);
  const auto s = steady_state_by_label(m, 1);
  const Grid g = build_grid(1, 128);
  const auto first = solve_perturbed_regular(m, g, 1, s, 1, 1.001);
  const double side = first.branch_direction;
  double prev = 0.0;
  for (double step : {1e-4, 1e-3, 3e-3}) {
    const auto sol = solve_perturbed_regular(m, g, 1, s, 1, 1.0 + side * step);
    EXPECT_GT(sol.amplitude, prev);
    prev = sol.amplitude;
  }
  EXPECT_THROW(solve_perturbed_regular(m, g, 1, s, 1, 1.0 - side * 0.5), CollapseError);
}

TEST(Stationary, PerturbedRejectsTwoDimensionalGrid) {
  const KineticModel m(Family::Brusselator, 1, 2);
  EXPECT_THROW(solve_perturbed_regular(m, build_grid(2, 16), 1, steady_state_by_label(m, 1), 1, 1.01), InputError);
}

TEST(Stationary, OregonatorAlphaScan) {
  const auto cert = find_admissible_oregonator_alpha(2.0);
  EXPECT_EQ(cert.alpha, 0.1);
  EXPECT_FALSE(oregonator_alpha_admissible(0.2, 2.0).has_value());
  EXPECT_LE(cert.max_residual, 1e-10);
  EXPECT_GT(cert.min_separation, 0.0);
  ASSERT_EQ(cert.v_bars.size(), 3u);
  for (double v : cert.v_bars) {
    EXPECT_GT(v, cert.v_lo);
    EXPECT_LT(v, cert.v_hi);
  }
  EXPECT_TRUE(oregonator_alpha_admissible(cert.alpha / 2, 2.0).has_value());
  EXPECT_THROW(find_admissible_oregonator_alpha(1.0), InputError);
  EXPECT_THROW(find_admissible_oregonator_alpha(0.5), InputError);
}

TEST(Stationary, OregonatorHalvingStaysAdmissibleProperty) {
  for (double beta : {1.5, 2.0, 3.0, 5.0}) {
    const auto cert = find_admissible_oregonator_alpha(beta);
    for (double a = cert.alpha; a > cert.alpha / 64; a /= 2) {
      EXPECT_TRUE(oregonator_alpha_admissible(a, beta).has_value()) << beta << " " << a;
    }
  }
}

TEST(Stationary, PredatorPreyScanPicksLargestClearance) {
  const auto r = find_predator_prey_parameters();
  EXPECT_EQ(r.alpha, 1.0);
  EXPECT_EQ(r.beta, 3.2);
  EXPECT_GT(r.u_bar, predator_prey_um());
  // Positive state solves U^2/(U^3+1) = U - beta with V = U - beta.
  EXPECT_NEAR(r.u_bar * r.u_bar / (r.u_bar * r.u_bar * r.u_bar + 1.0), r.u_bar - r.beta, 1e-12);
  EXPECT_NEAR(r.v_bar, r.u_bar - r.beta, 1e-12);
  for (double beta : {0.8, 1.6, 2.4, 4.0}) {
    const auto s = steady_state_by_label(KineticModel(Family::PredatorPrey, 1.0, beta), 1);
    if (s.u_bar > predator_prey_um()) {
      EXPECT_LE(std::min(s.v_bar, predator_prey_fold_v() - s.v_bar), r.clearance) << beta;
    }
  }
}
