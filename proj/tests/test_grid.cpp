#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "rdlab/grid.hpp"
#include "rdlab/masks.hpp"

using namespace rdlab;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rdlab_grid_" + name)).string();
}

}  // namespace

TEST(Grid, BuildExamples) {
  const Grid g = build_grid(1, 4);
  EXPECT_DOUBLE_EQ(g.h(), 0.25);
  const std::vector<double> centres{0.125, 0.375, 0.625, 0.875};
  for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(g.x(c), centres[c]);
  EXPECT_EQ(build_grid(2, 128, 128).cell_count(), 16384u);
  EXPECT_THROW(build_grid(1, 3), InputError);
  EXPECT_THROW(build_grid(2, 8, 3), InputError);
  EXPECT_THROW(build_grid(3, 8), InputError);
}

TEST(Grid, LaplacianStencil1D) {
  const NeumannLaplacian L(build_grid(1, 4));
  const Eigen::MatrixXd M(L.matrix());
  const double s = 16.0;
  const Eigen::Matrix4d want{{-1, 1, 0, 0}, {1, -2, 1, 0}, {0, 1, -2, 1}, {0, 0, 1, -1}};
  EXPECT_EQ(M, want * s);
}

TEST(Grid, LaplacianRowSumsAndSymmetry) {
  for (const Grid& g : {build_grid(1, 37), build_grid(2, 13)}) {
    const NeumannLaplacian L(g);
    const Eigen::MatrixXd M(L.matrix());
    for (Eigen::Index r = 0; r < M.rows(); ++r) EXPECT_EQ(M.row(r).sum(), 0.0);
    EXPECT_EQ(M, M.transpose());
    std::vector<double> ones(g.cell_count(), 3.7), out(g.cell_count());
    L.apply(ones, out);
    for (double x : out) EXPECT_EQ(x, 0.0);
  }
}

TEST(Grid, LaplacianOfCosine) {
  const Grid g = build_grid(1, 256);
  const NeumannLaplacian L(g);
  std::vector<double> v(g.cell_count()), out(g.cell_count());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = std::cos(std::numbers::pi * g.x(c));
  L.apply(v, out);
  double err = 0.0;
  for (std::size_t c = 0; c < v.size(); ++c) err = std::max(err, std::abs(out[c] + std::numbers::pi * std::numbers::pi * v[c]));
  EXPECT_LE(err, 5e-4);
}

TEST(Grid, PoolApplyMatchesSerialBitwise) {
  const Grid g = build_grid(2, 40);
  const NeumannLaplacian L(g);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  std::vector<double> v(g.cell_count()), a(v.size()), b(v.size());
  for (auto& x : v) x = nd(rng);
  L.apply(v, a);
  WorkerPool pool(4);
  L.apply(v, b, pool);
  EXPECT_EQ(a, b);
}

TEST(Grid, AnalyticEigenvalues) {
  const auto ev = laplacian_eigenvalues(build_grid(1, 64), 3, SpectrumKind::Analytic);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0].mu, 0.0);
  EXPECT_DOUBLE_EQ(ev[1].mu, pi2);
  EXPECT_DOUBLE_EQ(ev[2].mu, 4 * pi2);

  const auto ev2 = laplacian_eigenvalues(build_grid(2, 16), 6, SpectrumKind::Analytic);
  // Shells j^2 + k^2 = 0, 1, 2, 4, 5, 8 with (j,k) counts 1, 2, 1, 2, 2, 1.
  const std::vector<std::pair<double, int>> want{{0, 1}, {1, 2}, {2, 1}, {4, 2}, {5, 2}, {8, 1}};
  ASSERT_EQ(ev2.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_DOUBLE_EQ(ev2[i].mu, want[i].first * pi2);
    EXPECT_EQ(ev2[i].multiplicity, want[i].second);
  }
}

TEST(Grid, DiscreteEigenvaluesMatchDenseSpectrum) {
  for (int n : {4, 17, 64}) {
    const Grid g = build_grid(1, n);
    const Eigen::MatrixXd M = -Eigen::MatrixXd(NeumannLaplacian(g).matrix());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const auto ev = laplacian_eigenvalues(g, static_cast<std::size_t>(n), SpectrumKind::Discrete);
    ASSERT_EQ(ev.size(), static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double h = 1.0 / n;
      const double oracle = 4.0 / (h * h) * std::pow(std::sin(k * std::numbers::pi / (2.0 * n)), 2);
      EXPECT_NEAR(ev[k].mu, oracle, 1e-10 * std::max(1.0, oracle));
      EXPECT_NEAR(es.eigenvalues()[k], oracle, 1e-10 * std::max(1.0, oracle));
    }
  }
}

TEST(Grid, DiscreteEigenvalue2DMultiplicities) {
  const Grid g = build_grid(2, 8);
  const auto ev = laplacian_eigenvalues(g, 1000, SpectrumKind::Discrete);
  int total = 0;
  for (const auto& e : ev) total += e.multiplicity;
  EXPECT_EQ(total, 64);
  EXPECT_EQ(ev[1].multiplicity, 2);
}

TEST(Grid, DiscreteMuOneExample) {
  const double mu = discrete_mode_1d(256, 1);
  EXPECT_NEAR(mu, 9.8695, 1e-4);
  EXPECT_LE(std::abs(mu - std::numbers::pi * std::numbers::pi), 1.3e-3);
}

TEST(Grid, DiscreteMuConvergesSecondOrder) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (int n : {16, 32, 64, 128}) {
    const double e1 = std::abs(discrete_mode_1d(n, 1) - pi2);
    const double e2 = std::abs(discrete_mode_1d(2 * n, 1) - pi2);
    const double ratio = e1 / e2;
    EXPECT_GT(ratio, 4.0 / 1.2);
    EXPECT_LT(ratio, 4.0 * 1.2);
  }
}

TEST(Grid, StripePartitionMeasure) {
  const Grid g = build_grid(1, 100);
  const auto p = stripe_partition(g, 0.45, 0.55);
  EXPECT_EQ(p.count(2), 10u);
  EXPECT_DOUBLE_EQ(p.measure(2), 0.10);
  EXPECT_EQ(p.total_measure(), 1.0);
  EXPECT_THROW(centered_stripe(g, 1.0), InputError);
  EXPECT_EQ(centered_stripe(g, 0.0).count(2), 0u);
}

TEST(Grid, PartitionValidation) {
  const Grid g = build_grid(1, 4);
  EXPECT_THROW(DomainPartition(g, {1, 2, 3, 1}, 2), InputError);
  EXPECT_THROW(DomainPartition(g, {1, 1, 1}, 1), InputError);
  const DomainPartition p(g, {1, 2, 2, 1}, 2);
  EXPECT_TRUE(p.near_interface(0, 1));
  EXPECT_EQ(p.total_measure(), 1.0);
}

TEST(Grid, PartitionMeasuresSumExactlyProperty) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 60);
    const int J = 1 + static_cast<int>(rng() % 5);
    const Grid g = (trial % 2) ? build_grid(1, n) : build_grid(2, n);
    std::vector<int> a(g.cell_count());
    for (auto& x : a) x = 1 + static_cast<int>(rng() % J);
    const DomainPartition p(g, a, J);
    EXPECT_EQ(p.total_measure(), 1.0);
    std::size_t sum = 0;
    for (int r = 1; r <= J; ++r) sum += p.count(r);
    EXPECT_EQ(sum, g.cell_count());
  }
}

TEST(Masks, PbmRoundTripBothEncodings) {
  const Grid g = build_grid(2, 12);
  std::vector<int> a(g.cell_count(), 1);
  for (std::size_t c = 0; c < a.size(); c += 5) a[c] = 2;
  const DomainPartition p(g, a, 2);
  for (bool binary : {true, false}) {
    const auto path = temp_path(binary ? "rt.pbm" : "rt_ascii.pbm");
    write_pbm(path, p, binary);
    const auto q = load_mask(g, path);
    EXPECT_EQ(q.assignment(), p.assignment());
    std::remove(path.c_str());
  }
}

TEST(Masks, PbmOrientationTopRowIsHighY) {
  const Grid g = build_grid(2, 4);
  const auto path = temp_path("orient.pbm");
  {
    std::ofstream out(path);
    out << "P1\n# comment\n4 4\n1 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n";
  }
  const auto p = load_mask(g, path);
  EXPECT_EQ(p.region(g.index(0, 3)), 2);
  EXPECT_EQ(p.count(2), 1u);
  std::remove(path.c_str());
}

TEST(Masks, AllZeroMaskGivesEmptyRegion) {
  const Grid g = build_grid(2, 8);
  const auto path = temp_path("zero.pbm");
  write_pbm(path, DomainPartition::uniform(g, 2), false);
  EXPECT_EQ(load_mask(g, path).measure(2), 0.0);
  std::remove(path.c_str());
}

TEST(Masks, Errors) {
  const Grid g = build_grid(2, 8);
  EXPECT_THROW(load_mask(g, temp_path("missing.pbm")), InputError);
  const auto path = temp_path("small.pbm");
  write_pbm(path, DomainPartition::uniform(build_grid(2, 6), 2));
  EXPECT_THROW(load_mask(g, path), InputError);
  std::remove(path.c_str());

  const auto pgm = temp_path("regions.pgm");
  {
    std::ofstream out(pgm);
    out << "P2\n4 4\n3\n";
    for (int i = 0; i < 16; ++i) out << (i == 5 ? 3 : 1) << ' ';
  }
  const Grid g4 = build_grid(2, 4);
  EXPECT_EQ(load_mask(g4, pgm).regions(), 3);
  EXPECT_THROW(load_mask(g4, pgm, 2), InputError);
  std::remove(pgm.c_str());

  const auto zero = temp_path("zero.pgm");
  {
    std::ofstream out(zero);
    out << "P2\n4 4\n3\n";
    for (int i = 0; i < 16; ++i) out << 0 << ' ';
  }
  EXPECT_THROW(load_mask(g4, zero), InputError);
  std::remove(zero.c_str());
}

TEST(Masks, PgmRoundTrip) {
  const Grid g = build_grid(2, 9);
  std::vector<int> a(g.cell_count());
  for (std::size_t c = 0; c < a.size(); ++c) a[c] = 1 + static_cast<int>(c % 4);
  const DomainPartition p(g, a, 4);
  const auto path = temp_path("rt.pgm");
  write_pgm_regions(path, p);
  EXPECT_EQ(load_mask(g, path).assignment(), a);
  std::remove(path.c_str());
}

TEST(Masks, EyMaskHitsFraction) {
  const Grid g = build_grid(2, 128);
  for (double f : {0.01, 0.05, 0.1, 0.3}) {
    const auto p = generate_ey_mask(g, f);
    EXPECT_LE(std::abs(p.measure(2) - f), 1.0 / 16384.0) << f;
  }
  EXPECT_EQ(generate_ey_mask(g, 0.0).count(2), 0u);
  EXPECT_THROW(generate_ey_mask(g, 0.5), InputError);
  EXPECT_THROW(generate_ey_mask(build_grid(1, 64), 0.05), InputError);
}

TEST(Masks, EyMaskIsCentredAndTwoLetters) {
  const Grid g = build_grid(2, 128);
  const auto p = generate_ey_mask(g, 0.05);
  double cx = 0.0, cy = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (p.region(c) == 2) {
      cx += g.x(c);
      cy += g.y(c);
    }
  }
  cx /= static_cast<double>(p.count(2));
  cy /= static_cast<double>(p.count(2));
  EXPECT_NEAR(cy, 0.5, 0.05);
  EXPECT_NEAR(cx, 0.5, 0.05);
  // The central column between the letters is empty.
  const int mid = 62;
  int filled = 0;
  for (int j = 0; j < 128; ++j) filled += p.region(g.index(mid, j)) == 2;
  EXPECT_EQ(filled, 0);
}
