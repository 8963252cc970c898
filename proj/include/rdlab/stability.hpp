#pragma once

// Linearisation around a stationary field
//
//   phi_t = a phi + b psi,   psi_t = gamma L psi + c phi + d psi,
//
// its rightmost eigenvalues, and checks of the structural hypotheses on the
// constant state and branches.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdlab/errors.hpp"
#include "rdlab/grid.hpp"
#include "rdlab/kinetics.hpp"
#include "rdlab/stationary.hpp"

namespace rdlab {

/// Cellwise coefficients of the linearised operator and its block matrix.
struct Linearization {
  Grid grid;
  double gamma = 0.0;
  std::vector<double> a, b, c, d;

  std::size_t cells() const noexcept { return a.size(); }
  std::size_t size() const noexcept { return 2 * a.size(); }

  /// M = [[diag a, diag b], [diag c, gamma L + diag d]].
  Eigen::SparseMatrix<double> matrix() const {
    const NeumannLaplacian lap(grid);
    const auto n = static_cast<int>(cells());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(lap.matrix().nonZeros()) + 4 * cells());
    for (int i = 0; i < n; ++i) {
      trips.emplace_back(i, i, a[i]);
      trips.emplace_back(i, n + i, b[i]);
      trips.emplace_back(n + i, i, c[i]);
      trips.emplace_back(n + i, n + i, d[i]);
    }
    for (int k = 0; k < lap.matrix().outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(lap.matrix(), k); it; ++it) {
        trips.emplace_back(n + static_cast<int>(it.row()), n + static_cast<int>(it.col()), gamma * it.value());
      }
    }
    Eigen::SparseMatrix<double> M(2 * n, 2 * n);
    M.setFromTriplets(trips.begin(), trips.end());
    M.makeCompressed();
    return M;
  }

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix()); }
};

/// Jacobian entries of the kinetics at every cell of (U, V).
inline Linearization assemble_linearization(const KineticModel& m, const Grid& grid, double gamma,
                                            const std::vector<double>& U, const std::vector<double>& V) {
  const std::size_t n = grid.cell_count();
  if (U.size() != n || V.size() != n) throw InputError("field size does not match the grid");
  Linearization lin{grid, gamma, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                    std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    if (!m.regular_at(U[i])) {
      throw DomainError("cell " + std::to_string(i) + " sits on the singular point of the kinetics");
    }
    const Jacobian j = m.jacobian(U[i], V[i]);
    lin.a[i] = j.fu;
    lin.b[i] = j.fv;
    lin.c[i] = j.gu;
    lin.d[i] = j.gv;
  }
  return lin;
}

inline Linearization assemble_linearization(const KineticModel& m, const StationaryField& field) {
  return assemble_linearization(m, field.grid(), field.gamma, field.U, field.V);
}

enum class Verdict { Stable, Unstable, Marginal };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Marginal: return "marginal";
  }
  return "?";
}

enum class SpectrumMethod { Auto, Dense, Iterative };

struct SpectrumReport {
  std::vector<std::complex<double>> rightmost;  ///< descending real part
  std::vector<double> residuals;                ///< ||M x - lambda x|| / ||x|| per pair
  std::string method;                           ///< "dense" or "iterative"
  Verdict verdict = Verdict::Marginal;
  bool certified = true;                        ///< every residual <= 1e-8

  double max_real() const { return rightmost.empty() ? std::numeric_limits<double>::quiet_NaN() : rightmost[0].real(); }
};

inline constexpr double kVerdictMargin = 1e-6;
inline constexpr double kEigenResidualTol = 1e-8;
inline constexpr std::size_t kDenseLimit = 2000;

inline Verdict verdict_from(double max_real) {
  if (max_real > kVerdictMargin) return Verdict::Unstable;
  if (max_real < -kVerdictMargin) return Verdict::Stable;
  return Verdict::Marginal;
}

namespace detail {

using CVec = Eigen::VectorXcd;

inline double pair_residual(const Eigen::SparseMatrix<double>& M, const CVec& x, std::complex<double> lambda) {
  const Eigen::VectorXd xr = x.real(), xi = x.imag();
  const CVec Mx = (M * xr).cast<std::complex<double>>() + std::complex<double>(0, 1) * (M * xi).cast<std::complex<double>>();
  return (Mx - lambda * x).norm() / x.norm();
}

inline void sort_rightmost(std::vector<std::pair<std::complex<double>, double>>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    if (x.first.real() != y.first.real()) return x.first.real() > y.first.real();
    return x.first.imag() > y.first.imag();
  });
}

inline SpectrumReport finish_report(std::vector<std::pair<std::complex<double>, double>> pairs, std::size_t m,
                                    std::string method) {
  sort_rightmost(pairs);
  if (pairs.size() > m) pairs.resize(m);
  SpectrumReport rep;
  rep.method = std::move(method);
  for (const auto& [l, r] : pairs) {
    rep.rightmost.push_back(l);
    rep.residuals.push_back(r);
    if (!(r <= kEigenResidualTol)) rep.certified = false;
  }
  rep.verdict = verdict_from(rep.max_real());
  return rep;
}

inline SpectrumReport dense_spectrum(const Linearization& lin, std::size_t m) {
  const Eigen::SparseMatrix<double> M = lin.matrix();
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(M), true);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0, 0.0);
  std::vector<std::pair<std::complex<double>, double>> pairs;
  const auto& vals = es.eigenvalues();
  const auto vecs = es.eigenvectors();
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    pairs.emplace_back(vals[k], pair_residual(M, vecs.col(k), vals[k]));
  }
  return finish_report(std::move(pairs), m, "dense");
}

struct RitzPair {
  std::complex<double> lambda;
  CVec x;
};

// Arnoldi with full reorthogonalisation on a real operator `apply`; returns
// Ritz values theta and vectors of the operator.
inline std::vector<RitzPair> arnoldi(Eigen::Index n, int kdim, std::uint64_t seed,
                                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply) {
  kdim = static_cast<int>(std::min<Eigen::Index>(kdim, n - 1));
  Eigen::MatrixXd Q(n, kdim + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(kdim + 1, kdim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = nd(rng);
  Q.col(0) = q / q.norm();
  int built = kdim;
  for (int j = 0; j < kdim; ++j) {
    Eigen::VectorXd w = apply(Q.col(j));
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = Q.leftCols(j + 1).transpose() * w;
      w -= Q.leftCols(j + 1) * h;
      H.col(j).head(j + 1) += h;
    }
    const double beta = w.norm();
    H(j + 1, j) = beta;
    if (!(beta > 1e-14)) {
      built = j + 1;
      break;
    }
    Q.col(j + 1) = w / beta;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(built, built), true);
  const Eigen::MatrixXcd Y = es.eigenvectors();
  const Eigen::MatrixXcd Qc = Q.leftCols(built).cast<std::complex<double>>();
  std::vector<RitzPair> out;
  for (int k = 0; k < built; ++k) out.push_back({es.eigenvalues()[k], Qc * Y.col(k)});
  return out;
}

// Shifted inverse iteration with Rayleigh-quotient shift updates from (lambda, x).
inline std::pair<std::complex<double>, double> polish_pair(const Eigen::SparseMatrix<double>& M, std::complex<double> lambda,
                                                           CVec& x) {
  using CSparse = Eigen::SparseMatrix<std::complex<double>>;
  const CSparse Mc = M.cast<std::complex<double>>();
  CSparse I(M.rows(), M.cols());
  I.setIdentity();
  double res = pair_residual(M, x, lambda);
  for (int refactor = 0; refactor < 4 && !(res <= 1e-2 * kEigenResidualTol); ++refactor) {
    // Offset keeps the shifted matrix nonsingular when lambda is already exact.
    const std::complex<double> shift = lambda + std::complex<double>(1e-10, 1e-10) * std::max(1.0, std::abs(lambda));
    Eigen::SparseLU<CSparse, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(CSparse(Mc - shift * I));
    if (lu.info() != Eigen::Success) break;
    for (int it = 0; it < 3; ++it) {
      CVec y = lu.solve(x);
      const double ny = y.norm();
      if (!std::isfinite(ny) || ny == 0.0) break;
      x = y / ny;
      const Eigen::VectorXd xr = x.real(), xi = x.imag();
      const CVec Mx = (M * xr).cast<std::complex<double>>() + std::complex<double>(0, 1) * (M * xi).cast<std::complex<double>>();
      const std::complex<double> rq = x.dot(Mx);
      const double r = (Mx - rq * x).norm();
      if (std::isfinite(r) && (r < res || it == 0)) {
        lambda = rq;
        res = r;
      }
    }
  }
  return {lambda, res};
}

}  // namespace detail

/// Upper bound on the real parts of the spectrum: the largest eigenvalue of
/// the symmetric part of the local 2x2 blocks (gamma L is negative semidefinite).
inline double numerical_abscissa_bound(const Linearization& lin) {
  double bound = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lin.cells(); ++i) {
    const double s = 0.5 * (lin.b[i] + lin.c[i]);
    const double mid = 0.5 * (lin.a[i] + lin.d[i]);
    const double rad = std::hypot(0.5 * (lin.a[i] - lin.d[i]), s);
    bound = std::max(bound, mid + rad);
  }
  return bound;
}

/// The m eigenvalues of the block operator with largest real part.
///
/// Dense QR up to kDenseLimit unknowns. Beyond that, candidates come from
/// shift-invert Arnoldi at the real shifts max(a) + 1 and 0 and from Arnoldi on
/// the Cayley transform (s - M)^{-1}(s + M), whose dominant eigenvalues are the
/// rightmost ones of M including complex pairs. Each candidate is polished by
/// shifted inverse iteration and kept only with residual <= 1e-8; the Krylov
/// dimension doubles until the rightmost m certified values repeat.
inline SpectrumReport rightmost_spectrum(const Linearization& lin, std::size_t m,
                                         SpectrumMethod method = SpectrumMethod::Auto) {
  if (m < 1) throw InputError("eigenvalue count must be at least 1");
  if (lin.size() > 100000) throw InputError("operator too large for the spectral solver (limit 1e5 unknowns)");
  if (method == SpectrumMethod::Dense || (method == SpectrumMethod::Auto && lin.size() <= kDenseLimit)) {
    return detail::dense_spectrum(lin, m);
  }
  using Pair = std::pair<std::complex<double>, double>;
  const Eigen::SparseMatrix<double> M = lin.matrix();
  const Eigen::Index n = M.rows();
  const double amax = *std::max_element(lin.a.begin(), lin.a.end());
  double reaction_radius = 1.0;
  for (std::size_t i = 0; i < lin.cells(); ++i) {
    reaction_radius = std::max(reaction_radius, std::abs(lin.a[i]) + std::abs(lin.b[i]) + std::abs(lin.c[i]) + std::abs(lin.d[i]));
  }
  const double cayley = 2.0 * reaction_radius + std::max(0.0, numerical_abscissa_bound(lin));

  auto factor = [&](double sigma) {
    Eigen::SparseMatrix<double> S = M;
    for (Eigen::Index i = 0; i < n; ++i) S.coeffRef(i, i) -= sigma;
    auto lu = std::make_shared<detail::SparseLU>();
    lu->compute(S);
    return lu;
  };
  std::vector<std::pair<double, std::shared_ptr<detail::SparseLU>>> invert;
  for (double sigma : {amax + 1.0, 0.0}) {
    auto lu = factor(sigma);
    if (lu->info() == Eigen::Success) invert.emplace_back(sigma, lu);
  }
  const auto cayley_lu = factor(cayley);  // factor of M - s; (s - M)^{-1} = -(M - s)^{-1}
  if (cayley_lu->info() != Eigen::Success) throw ConvergenceError("Cayley factorisation failed", 0, 0.0);

  // Close eigenvalues count separately when their vectors are independent,
  // so that (near-)multiple eigenvalues keep their multiplicity.
  auto add_unique = [](std::vector<Pair>& pairs, std::vector<detail::CVec>& vecs, const Pair& p, const detail::CVec& x) {
    detail::CVec r = x / x.norm();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (std::abs(pairs[i].first - p.first) <= 1e-6 * std::max(1.0, std::abs(p.first))) r -= vecs[i] * vecs[i].dot(r);
    }
    if (r.norm() < 1e-3) return;
    pairs.push_back(p);
    vecs.push_back(r / r.norm());
  };

  const int nmax = static_cast<int>(std::min<Eigen::Index>(n - 1, 640));
  SpectrumReport best, previous;
  for (int kdim = std::min(nmax, std::max<int>(40, static_cast<int>(6 * m)));; kdim = std::min(nmax, 2 * kdim)) {
    std::vector<detail::RitzPair> cands;
    for (std::size_t s = 0; s < invert.size(); ++s) {
      const auto& [sigma, lu] = invert[s];
      for (auto& r : detail::arnoldi(n, kdim, 0x5eedULL + s, [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(lu->solve(v)); })) {
        if (std::abs(r.lambda) > 1e-300) cands.push_back({sigma + 1.0 / r.lambda, std::move(r.x)});
      }
    }
    std::vector<detail::RitzPair> cay = detail::arnoldi(n, kdim, 0xcafeULL, [&](const Eigen::VectorXd& v) {
      return Eigen::VectorXd(-cayley_lu->solve(Eigen::VectorXd(cayley * v + M * v)));
    });
    for (auto& r : cay) {
      if (std::abs(r.lambda + 1.0) > 1e-12) cands.push_back({cayley * (r.lambda - 1.0) / (r.lambda + 1.0), std::move(r.x)});
    }
    std::sort(cands.begin(), cands.end(), [](const auto& x, const auto& y) { return x.lambda.real() > y.lambda.real(); });

    std::vector<Pair> pairs;
    std::vector<detail::CVec> vecs;
    for (auto& c : cands) {
      if (pairs.size() >= 3 * m) break;
      const Pair p = detail::polish_pair(M, c.lambda, c.x);
      if (p.second <= kEigenResidualTol) add_unique(pairs, vecs, p, c.x);
    }
    best = detail::finish_report(pairs, m, "iterative");
    const bool repeated = best.rightmost.size() == m && previous.rightmost.size() == m &&
                          [&] {
                            for (std::size_t i = 0; i < m; ++i) {
                              if (std::abs(best.rightmost[i] - previous.rightmost[i]) > 1e-8 * std::max(1.0, std::abs(best.rightmost[i]))) return false;
                            }
                            return true;
                          }();
    if (best.certified && repeated) return best;
    if (kdim >= nmax) break;
    previous = best;
  }
  if (best.rightmost.size() < m) best.certified = false;
  return best;
}

/// One hypothesis check: pass flag derived from a signed margin.
struct Check {
  bool pass = false;
  double margin = 0.0;
};

struct AssumptionAudit {
  Check a0_nonzero;          ///< margin |a0|, pass > 1e-12
  Check sineq;               ///< margin min_k |det/a0 - gamma mu_k|, pass > 1e-12
  std::size_t sineq_mode = 0;
  Check two_branches;        ///< margin = branch separation, pass if >= 2 branches and > 1e-12
  Check linear_stability;    ///< margin max(a0, d0, trace, -det), pass < -1e-12
  Check second_branch;       ///< margin max over secondary branches of max(f_u, g_v), pass < -1e-12
  Check reg_det;             ///< margin det/a0, pass if some gamma_k > 0 exists
  std::vector<BifurcationPoint> gamma_k;
  std::optional<double> autocatalysis_fraction;
};

inline constexpr double kAuditThreshold = 1e-12;

/// Audits the constant state, branch set and gamma.
///
/// The resonance margin is taken over the analytic Neumann eigenvalues: the
/// first `eigen_count` plus every mu_k <= 2 det/(a0 gamma) and the next one.
inline AssumptionAudit audit_assumptions(const KineticModel& m, const SteadyState& s, const BranchSet& bs, double gamma,
                                         std::size_t eigen_count, int dim = 1) {
  AssumptionAudit au;
  au.a0_nonzero.margin = std::abs(s.a0);
  au.a0_nonzero.pass = au.a0_nonzero.margin > kAuditThreshold;

  const Grid probe = build_grid(dim, 4);
  if (au.a0_nonzero.pass) {
    const double q = s.det() / s.a0;
    std::size_t count = std::max<std::size_t>(eigen_count, 2);
    std::vector<double> mus;
    for (;;) {
      mus = eigenvalue_values(laplacian_eigenvalues(probe, count, SpectrumKind::Analytic));
      if (gamma <= 0.0 || mus.back() > 2.0 * q / gamma || count > 1000000) break;
      count *= 2;
    }
    au.sineq.margin = sineq_margin(s, gamma, mus, &au.sineq_mode);
    au.sineq.pass = au.sineq.margin > kAuditThreshold;
    au.gamma_k = bifurcation_gammas(s, eigenvalue_values(laplacian_eigenvalues(probe, eigen_count, SpectrumKind::Analytic)));
    au.reg_det.margin = q;
    au.reg_det.pass = !au.gamma_k.empty();
  }

  au.two_branches.margin = bs.size() >= 2 ? bs.min_separation() : 0.0;
  au.two_branches.pass = bs.size() >= 2 && au.two_branches.margin > kAuditThreshold;

  au.linear_stability.margin = std::max({s.a0, s.d0, s.trace(), -s.det()});
  au.linear_stability.pass = au.linear_stability.margin < -kAuditThreshold;

  if (bs.size() >= 2) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < bs.size(); ++i) {
      const double u = bs.value(i, s.v_bar);
      const Jacobian j = m.jacobian(u, s.v_bar);
      worst = std::max({worst, j.fu, j.gv});
    }
    au.second_branch.margin = worst;
    au.second_branch.pass = worst < -kAuditThreshold;
  }
  return au;
}

struct AutocatalysisResult {
  double fraction = 0.0;  ///< share of cells with f_u > 1e-12
  bool unstable = false;
};

inline AutocatalysisResult autocatalysis_check(const Linearization& lin) {
  std::size_t count = 0;
  for (double a : lin.a) count += a > kAuditThreshold;
  const double frac = static_cast<double>(count) / static_cast<double>(lin.cells());
  return {frac, count > 0};
}

inline AutocatalysisResult autocatalysis_check(const KineticModel& m, const StationaryField& field) {
  return autocatalysis_check(assemble_linearization(m, field));
}

enum class RegularVerdict { UnstableAutocatalytic, UnstableConvex, Degenerate };

inline const char* regular_verdict_name(RegularVerdict v) {
  switch (v) {
    case RegularVerdict::UnstableAutocatalytic: return "unstable (f_u>0 somewhere)";
    case RegularVerdict::UnstableConvex: return "unstable (f_u<0 everywhere, convex domain)";
    case RegularVerdict::Degenerate: return "degenerate";
  }
  return "?";
}

/// Sign test of f_u along a regular (single-branch) stationary field.
///
/// Both domain shapes offered here are convex, so f_u < 0 everywhere also
/// implies instability.
inline RegularVerdict classify_regular(const std::vector<double>& a) {
  const double amax = *std::max_element(a.begin(), a.end());
  if (amax > 1e-10) return RegularVerdict::UnstableAutocatalytic;
  if (amax < -1e-10) return RegularVerdict::UnstableConvex;
  return RegularVerdict::Degenerate;
}

inline RegularVerdict classify_regular(const KineticModel& m, const StationaryField& field) {
  for (int label : field.branch_labels) {
    if (label != field.branch_labels.front()) throw InputError("field is not regular: it uses more than one branch");
  }
  return classify_regular(assemble_linearization(m, field).a);
}

/// Eigenvalues of [[a0, b0], [c0, d0 - gamma mu]] for every mu: the spectrum of
/// a constant-coefficient linearisation by mode decoupling.
inline std::vector<std::complex<double>> mode_decoupled_spectrum(double a0, double b0, double c0, double d0,
                                                                 double gamma, const std::vector<double>& mus) {
  std::vector<std::complex<double>> out;
  for (double mu : mus) {
    const double dd = d0 - gamma * mu;
    const double tr = a0 + dd, det = a0 * dd - b0 * c0;
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det));
    out.push_back(0.5 * (tr + disc));
    out.push_back(0.5 * (tr - disc));
  }
  return out;
}

}  // namespace rdlab
