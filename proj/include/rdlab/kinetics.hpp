#pragma once

// Kinetics for the four reaction-diffusion-ODE families:
//
//   u_t = f(u, v),              (no diffusion)
//   v_t = gamma Lap v + g(u, v) (Neumann boundary)
//
// together with their constant steady states and the solution branches
// U = k(V) of f(U, V) = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rdlab/errors.hpp"

namespace rdlab {

enum class Family { GrayScott, Brusselator, Oregonator, PredatorPrey };

inline std::string_view family_name(Family family) {
  switch (family) {
    case Family::GrayScott: return "GrayScott";
    case Family::Brusselator: return "Brusselator";
    case Family::Oregonator: return "Oregonator";
    case Family::PredatorPrey: return "PredatorPrey";
  }
  return "unknown";
}

inline Family parse_family(std::string_view name) {
  for (Family f : {Family::GrayScott, Family::Brusselator, Family::Oregonator, Family::PredatorPrey}) {
    if (family_name(f) == name) return f;
  }
  throw InputError("unknown kinetics family '" + std::string(name) + "'");
}

/// Partial derivatives (f_u, f_v, g_u, g_v) at one point.
struct Jacobian {
  double fu = 0.0;
  double fv = 0.0;
  double gu = 0.0;
  double gv = 0.0;

  double trace() const noexcept { return fu + gv; }
  double det() const noexcept { return fu * gv - fv * gu; }
};

/// A kinetics family with its two positive rate constants.
class KineticModel {
 public:
  KineticModel(Family family, double alpha, double beta) : family_(family), alpha_(alpha), beta_(beta) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
      throw InputError("kinetic rates must satisfy alpha > 0 and beta > 0");
    }
  }

  Family family() const noexcept { return family_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  double f(double u, double v) const {
    const double a = alpha_, b = beta_;
    switch (family_) {
      case Family::GrayScott: return u * u * v - a * u;
      case Family::Brusselator: return a + u * u * v - (b + 1.0) * u;
      case Family::Oregonator:
        check_oregonator(u);
        return u - u * u + a * v * (b - u) / (b + u);
      case Family::PredatorPrey:
        check_predator_prey(u);
        return u * (u * u / (u * u * u + 1.0) - v);
    }
    return 0.0;
  }

  double g(double u, double v) const {
    const double a = alpha_, b = beta_;
    switch (family_) {
      case Family::GrayScott: return -u * u * v + b * (1.0 - v);
      case Family::Brusselator: return b * u - u * u * v;
      case Family::Oregonator: return u - v;
      case Family::PredatorPrey: return v * (a * u - v - b);
    }
    return 0.0;
  }

  Jacobian jacobian(double u, double v) const {
    const double a = alpha_, b = beta_;
    switch (family_) {
      case Family::GrayScott: return {2.0 * u * v - a, u * u, -2.0 * u * v, -u * u - b};
      case Family::Brusselator: return {2.0 * u * v - (b + 1.0), u * u, b - 2.0 * u * v, -u * u};
      case Family::Oregonator: {
        check_oregonator(u);
        const double s = b + u;
        return {1.0 - 2.0 * u - 2.0 * a * b * v / (s * s), a * (b - u) / s, 1.0, -1.0};
      }
      case Family::PredatorPrey: {
        check_predator_prey(u);
        const double q = u * u * u + 1.0;
        const double phi = u * u / q;
        const double dphi = (2.0 * u - u * u * u * u) / (q * q);
        return {phi - v + u * dphi, -u, a * v, a * u - 2.0 * v - b};
      }
    }
    return {};
  }

  /// Whether (u, .) lies in the domain of f.
  bool regular_at(double u) const noexcept {
    if (family_ == Family::Oregonator) return u + beta_ != 0.0;
    if (family_ == Family::PredatorPrey) return u * u * u + 1.0 != 0.0;
    return true;
  }

  friend bool operator==(const KineticModel&, const KineticModel&) = default;

 private:
  void check_oregonator(double u) const {
    if (u + beta_ == 0.0) throw DomainError("Oregonator kinetics: singular point u = -beta");
  }
  void check_predator_prey(double u) const {
    if (u * u * u + 1.0 == 0.0) throw DomainError("predator-prey kinetics: singular point u = -1");
  }

  Family family_;
  double alpha_;
  double beta_;
};

inline double eval_f(const KineticModel& m, double u, double v) { return m.f(u, v); }
inline double eval_g(const KineticModel& m, double u, double v) { return m.g(u, v); }
inline Jacobian jacobian(const KineticModel& m, double u, double v) { return m.jacobian(u, v); }

/// A constant solution (U, V) with the Jacobian entries a0, b0, c0, d0 there.
struct SteadyState {
  double u_bar = 0.0;
  double v_bar = 0.0;
  double a0 = 0.0;
  double b0 = 0.0;
  double c0 = 0.0;
  double d0 = 0.0;
  int label = 0;

  double det() const noexcept { return a0 * d0 - b0 * c0; }
  double trace() const noexcept { return a0 + d0; }
};

inline SteadyState make_steady_state(const KineticModel& m, double u, double v, int label) {
  const Jacobian j = m.jacobian(u, v);
  return {u, v, j.fu, j.fv, j.gu, j.gv, label};
}

namespace detail {

inline double bisect(auto&& fn, double lo, double hi) {
  double flo = fn(lo);
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = fn(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Newton polish on f(., v); keeps the iterate with the smallest residual.
inline double polish_on_f(const KineticModel& m, double u, double v) {
  double best = u;
  double best_res = std::abs(m.f(u, v));
  for (int it = 0; it < 4 && best_res > 0.0; ++it) {
    const double fu = m.jacobian(u, v).fu;
    if (fu == 0.0) break;
    u -= m.f(u, v) / fu;
    if (!m.regular_at(u)) break;
    const double r = std::abs(m.f(u, v));
    if (r < best_res) {
      best = u;
      best_res = r;
    }
  }
  return best;
}

}  // namespace detail

/// Real roots of a3 x^3 + a2 x^2 + a1 x + a0, in descending order.
///
/// Roots are bracketed between the critical points of the cubic, bisected to
/// full precision and then Newton-polished. A double root without a sign change
/// (a fold) is reported at most once.
inline std::vector<double> real_cubic_roots(double a3, double a2, double a1, double a0) {
  std::vector<double> roots;
  if (a3 == 0.0) {
    if (a2 == 0.0) {
      if (a1 != 0.0) roots.push_back(-a0 / a1);
      return roots;
    }
    const double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc < 0.0) return roots;
    const double q = -0.5 * (a1 + std::copysign(std::sqrt(disc), a1));
    if (q != 0.0) roots.push_back(a0 / q);
    roots.push_back(q / a2);
    std::sort(roots.begin(), roots.end(), std::greater<>());
    return roots;
  }
  const double b = a2 / a3, c = a1 / a3, d = a0 / a3;
  auto p = [&](double x) { return ((x + b) * x + c) * x + d; };
  auto dp = [&](double x) { return (3.0 * x + 2.0 * b) * x + c; };
  const double bound = 1.0 + std::max({std::abs(b), std::abs(c), std::abs(d)});

  std::vector<double> knots{-bound};
  const double crit = b * b - 3.0 * c;
  if (crit > 0.0) {
    const double s = std::sqrt(crit);
    const double q = -(b + std::copysign(s, b));  // 3 x^2 + 2 b x + c = 0, stable form
    double x1 = q / 3.0;
    double x2 = (q != 0.0) ? c / q : 0.0;
    if (x1 > x2) std::swap(x1, x2);
    knots.push_back(x1);
    knots.push_back(x2);
  }
  knots.push_back(bound);

  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double lo = knots[i], hi = knots[i + 1];
    const double plo = p(lo), phi = p(hi);
    if (plo == 0.0) {
      if (roots.empty() || roots.back() != lo) roots.push_back(lo);
      continue;
    }
    if (phi == 0.0) continue;  // picked up as the next interval's left end
    if ((plo < 0.0) != (phi < 0.0)) roots.push_back(detail::bisect(p, lo, hi));
  }
  if (p(knots.back()) == 0.0) roots.push_back(knots.back());

  for (double& x : roots) {
    for (int it = 0; it < 3; ++it) {
      const double deriv = dp(x);
      if (deriv == 0.0) break;
      const double next = x - p(x) / deriv;
      if (std::abs(p(next)) < std::abs(p(x))) x = next;
      else break;
    }
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

/// All real constant solutions, sorted by label.
///
/// Labels: Gray-Scott (0,1)=1 and the pair from V^2 - V + alpha^2/beta = 0 as
/// 2 (larger V) and 3; Brusselator (alpha, beta/alpha)=1; Oregonator (0,0)=1,
/// positive root 2, negative root 3; predator-prey nonzero state(s) 1 (then 3,
/// 4, ... by descending U) and (0,0)=2.
inline std::vector<SteadyState> constant_steady_states(const KineticModel& m) {
  const double a = m.alpha(), b = m.beta();
  std::vector<SteadyState> out;
  switch (m.family()) {
    case Family::GrayScott: {
      out.push_back(make_steady_state(m, 0.0, 1.0, 1));
      const double disc = 1.0 - 4.0 * a * a / b;
      if (disc > 0.0) {
        const double v2 = 0.5 * (1.0 + std::sqrt(disc));
        const double v3 = (a * a / b) / v2;
        out.push_back(make_steady_state(m, a / v2, v2, 2));
        out.push_back(make_steady_state(m, a / v3, v3, 3));
      }
      break;
    }
    case Family::Brusselator: out.push_back(make_steady_state(m, a, b / a, 1)); break;
    case Family::Oregonator: {
      out.push_back(make_steady_state(m, 0.0, 0.0, 1));
      // U^2 + p U + q = 0 with q < 0: one root of each sign.
      const double p = b + a - 1.0, q = -b * (a + 1.0);
      const double s = std::sqrt(p * p - 4.0 * q);
      double pos, neg;
      if (p >= 0.0) {
        neg = 0.5 * (-p - s);
        pos = q / neg;
      } else {
        pos = 0.5 * (-p + s);
        neg = q / pos;
      }
      out.push_back(make_steady_state(m, pos, pos, 2));
      out.push_back(make_steady_state(m, neg, neg, 3));
      break;
    }
    case Family::PredatorPrey: {
      // alpha U - beta = U^2/(U^3+1) in (0, 2^(2/3)/3]; roots lie in [beta/alpha, (beta+1)/alpha].
      auto phi = [](double u) { return u * u / (u * u * u + 1.0); };
      auto h = [&](double u) { return a * u - phi(u) - b; };
      const double lo = b / a, hi = (b + 1.0) / a;
      const int samples = 4096;
      std::vector<double> us;
      double x0 = lo, h0 = h(lo);
      for (int i = 1; i <= samples; ++i) {
        const double x1 = lo + (hi - lo) * i / samples;
        const double h1 = h(x1);
        if (h1 == 0.0) us.push_back(x1);
        else if ((h0 < 0.0) != (h1 < 0.0) && h0 != 0.0) us.push_back(detail::bisect(h, x0, x1));
        x0 = x1;
        h0 = h1;
      }
      std::sort(us.begin(), us.end(), std::greater<>());
      int label = 1;
      for (double u : us) {
        out.push_back(make_steady_state(m, u, phi(u), label));
        label = (label == 1) ? 3 : label + 1;
      }
      out.push_back(make_steady_state(m, 0.0, 0.0, 2));
      std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.label < y.label; });
      break;
    }
  }
  return out;
}

inline SteadyState steady_state_by_label(const KineticModel& m, int label) {
  for (const auto& s : constant_steady_states(m)) {
    if (s.label == label) return s;
  }
  throw InputError("no constant steady state with label " + std::to_string(label) + " for " +
                   std::string(family_name(m.family())));
}

/// U_m = 2^(1/3), the maximiser of U^2/(U^3+1) on U > 0.
inline double predator_prey_um() { return std::cbrt(2.0); }

/// Fold value 2^(2/3)/3 where the two positive predator-prey branches merge.
inline double predator_prey_fold_v() {
  const double um = predator_prey_um();
  return um * um / (um * um * um + 1.0);
}

/// Oregonator nullcline f = 0 written as V(U).
inline double oregonator_nullcline_v(const KineticModel& m, double u) {
  const double a = m.alpha(), b = m.beta();
  return u * (u - 1.0) * (b + u) / (a * (b - u));
}

/// Oregonator folds (V_lo < 0 < V_hi) for beta > 1.
///
/// The critical points of V(U) solve -2U^3 + (2b+1)U^2 + 2b(b-1)U - b^2 = 0,
/// independent of alpha; one lies in (0,1) and one in (-b,0).
inline std::pair<double, double> oregonator_folds(const KineticModel& m) {
  const double b = m.beta();
  if (!(b > 1.0)) throw InputError("Oregonator branch topology requires beta > 1");
  const auto crit = real_cubic_roots(-2.0, 2.0 * b + 1.0, 2.0 * b * (b - 1.0), -b * b);
  double u_lo = std::numeric_limits<double>::quiet_NaN(), u_hi = u_lo;
  for (double u : crit) {
    if (u > 0.0 && u < 1.0) u_lo = u;
    if (u > -b && u < 0.0) u_hi = u;
  }
  if (std::isnan(u_lo) || std::isnan(u_hi)) throw Error("Oregonator fold location failed");
  return {oregonator_nullcline_v(m, u_lo), oregonator_nullcline_v(m, u_hi)};
}

/// A labelled branch with its open interval of existence and isolated points
/// where f is undefined along it.
struct BranchInfo {
  int label = 0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> punctures;

  bool contains(double v) const noexcept { return v > lo && v < hi; }
};

/// Every branch of f(U, V) = 0 known for the family.
///
/// Gray-Scott: k1 = 0, k2 = alpha/V. Brusselator: k1, k2 = (b+1 +- sqrt((b+1)^2 - 4aV))/(2V).
/// Oregonator (beta > 1): k1 through (0,0), k2 through the positive state, k3
/// through the negative state (undefined at V = 0 where it hits U = -beta).
/// Predator-prey: k1 (U > U_m), k2 (0 < U < U_m), k3 = 0, k4 (-1 < U < 0).
inline std::vector<BranchInfo> branch_catalog(const KineticModel& m) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double a = m.alpha(), b = m.beta();
  switch (m.family()) {
    case Family::GrayScott: return {{1, -inf, inf, {}}, {2, 0.0, inf, {}}};
    case Family::Brusselator: {
      const double vf = (b + 1.0) * (b + 1.0) / (4.0 * a);
      return {{1, 0.0, vf, {}}, {2, -inf, vf, {}}};
    }
    case Family::Oregonator: {
      const auto [v_lo, v_hi] = oregonator_folds(m);
      return {{1, v_lo, v_hi, {}}, {2, v_lo, inf, {}}, {3, -inf, v_hi, {0.0}}};
    }
    case Family::PredatorPrey: {
      const double vf = predator_prey_fold_v();
      return {{1, 0.0, vf, {}}, {2, 0.0, vf, {}}, {3, 0.0, inf, {}}, {4, 0.0, inf, {}}};
    }
  }
  return {};
}

inline BranchInfo branch_info(const KineticModel& m, int label) {
  for (auto& br : branch_catalog(m)) {
    if (br.label == label) return br;
  }
  throw InputError("no branch k" + std::to_string(label) + " for " + std::string(family_name(m.family())));
}

/// k_label(v). Throws FoldError outside the branch's interval and DomainError
/// at a puncture.
inline double branch_value(const KineticModel& m, const BranchInfo& br, double v) {
  if (!br.contains(v)) {
    const double edge = (v <= br.lo) ? br.lo : br.hi;
    throw FoldError("V = " + std::to_string(v) + " outside the domain of branch k" + std::to_string(br.label), edge);
  }
  for (double p : br.punctures) {
    if (v == p) throw DomainError("branch k" + std::to_string(br.label) + " passes through a singular point at V = " + std::to_string(v));
  }
  const double a = m.alpha(), b = m.beta();
  switch (m.family()) {
    case Family::GrayScott: return br.label == 1 ? 0.0 : a / v;
    case Family::Brusselator: {
      const double root = std::sqrt((b + 1.0) * (b + 1.0) - 4.0 * a * v);
      if (br.label == 1) return (b + 1.0 + root) / (2.0 * v);
      return 2.0 * a / (b + 1.0 + root);  // conjugate of (b+1-root)/(2V), finite at V = 0
    }
    case Family::Oregonator: {
      // (U - U^2)(b + U) + a V (b - U) = 0
      const auto r = real_cubic_roots(-1.0, 1.0 - b, b - a * v, a * b * v);
      double u = 0.0;
      if (br.label == 2) u = r.front();
      else if (br.label == 3) u = r.back();
      else if (r.size() == 3) u = r[1];
      else throw FoldError("branch k1 lost near a fold at V = " + std::to_string(v), v);
      if (!m.regular_at(u)) throw DomainError("Oregonator branch root at the singular point U = -beta");
      return detail::polish_on_f(m, u, v);
    }
    case Family::PredatorPrey: {
      if (br.label == 3) return 0.0;
      // V U^3 - U^2 + V = 0
      const auto r = real_cubic_roots(v, -1.0, 0.0, v);
      double u = 0.0;
      if (br.label == 4) u = r.back();
      else if (r.size() == 3) u = (br.label == 1) ? r[0] : r[1];
      else throw FoldError("predator-prey branch lost near the fold at V = " + std::to_string(v), v);
      return detail::polish_on_f(m, u, v);
    }
  }
  return 0.0;
}

inline double branch_value(const KineticModel& m, int label, double v) {
  return branch_value(m, branch_info(m, label), v);
}

/// k'(V) = -f_v / f_u at (k(V), V).
inline double branch_derivative(const KineticModel& m, const BranchInfo& br, double v) {
  const double u = branch_value(m, br, v);
  const Jacobian j = m.jacobian(u, v);
  if (std::abs(j.fu) < 1e-12) throw FoldError("f_u vanishes on branch k" + std::to_string(br.label), v);
  return -j.fv / j.fu;
}

inline double branch_derivative(const KineticModel& m, int label, double v) {
  return branch_derivative(m, branch_info(m, label), v);
}

/// Distance from v to the nearest end of the branch interval, optionally also
/// counting punctures.
inline double branch_clearance(const BranchInfo& br, double v, bool count_punctures) {
  double d = std::min(v - br.lo, br.hi - v);
  if (count_punctures) {
    for (double p : br.punctures) d = std::min(d, std::abs(v - p));
  }
  return d;
}

/// Half the distance from v_bar to the nearest fold or singular point of the
/// listed branches.
inline double trust_radius(const KineticModel& m, double v_bar, const std::vector<int>& labels) {
  double d = std::numeric_limits<double>::infinity();
  for (int label : labels) d = std::min(d, branch_clearance(branch_info(m, label), v_bar, true));
  return 0.5 * d;
}

/// Labelled branches k_i on a shared open interval (v_lo, v_hi).
///
/// Construction samples 200 points and verifies |f(k_i(V), V)| <= 1e-10 and
/// pairwise separation; the smallest separation found is kept as the gap.
class BranchSet {
 public:
  static constexpr int kSamples = 200;
  static constexpr double kResidualTol = 1e-10;
  static constexpr double kMinGap = 1e-8;

  BranchSet(const KineticModel& model, double v_lo, double v_hi, std::vector<int> labels)
      : model_(model), v_lo_(v_lo), v_hi_(v_hi) {
    if (!(v_lo < v_hi)) throw InputError("branch window must satisfy v_lo < v_hi");
    if (labels.empty()) throw InputError("branch set needs at least one branch");
    for (int label : labels) {
      BranchInfo br = branch_info(model, label);
      for (double edge : {br.lo, br.hi}) {
        if (edge > v_lo && edge < v_hi) {
          throw FoldError("window (" + std::to_string(v_lo) + ", " + std::to_string(v_hi) + ") contains a fold of k" +
                              std::to_string(label) + " at V = " + std::to_string(edge),
                          edge);
        }
      }
      if (!(v_lo >= br.lo && v_hi <= br.hi)) {
        throw FoldError("window lies outside the domain of k" + std::to_string(label), v_lo < br.lo ? br.lo : br.hi);
      }
      branches_.push_back(std::move(br));
    }
    validate();
  }

  const KineticModel& model() const noexcept { return model_; }
  double v_lo() const noexcept { return v_lo_; }
  double v_hi() const noexcept { return v_hi_; }
  std::size_t size() const noexcept { return branches_.size(); }
  const BranchInfo& branch(std::size_t i) const { return branches_.at(i); }
  int label(std::size_t i) const { return branches_.at(i).label; }
  double min_separation() const noexcept { return min_separation_; }
  double max_residual() const noexcept { return max_residual_; }

  bool contains(double v) const noexcept { return v > v_lo_ && v < v_hi_; }

  double value(std::size_t i, double v) const { return branch_value(model_, branches_.at(i), v); }
  double derivative(std::size_t i, double v) const { return branch_derivative(model_, branches_.at(i), v); }

  std::size_t index_of(int label) const {
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      if (branches_[i].label == label) return i;
    }
    throw InputError("branch k" + std::to_string(label) + " not in branch set");
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    for (const auto& br : branches_) out.push_back(br.label);
    return out;
  }

  /// Same window, branches reordered/subset as given (region i uses labels[i]).
  BranchSet select(const std::vector<int>& labels) const {
    for (int label : labels) index_of(label);
    return BranchSet(model_, v_lo_, v_hi_, labels);
  }

  /// Same branches on a narrower window.
  BranchSet restrict(double v_lo, double v_hi) const {
    if (v_lo < v_lo_ || v_hi > v_hi_) throw InputError("restricted window must lie inside the branch window");
    return BranchSet(model_, v_lo, v_hi, labels());
  }

  double sample(int i) const { return v_lo_ + (v_hi_ - v_lo_) * (i + 0.5) / kSamples; }

 private:
  bool is_puncture(double v) const {
    for (const auto& br : branches_) {
      for (double p : br.punctures) {
        if (v == p) return true;
      }
    }
    return false;
  }

  void validate() {
    min_separation_ = std::numeric_limits<double>::infinity();
    max_residual_ = 0.0;
    std::vector<double> values(branches_.size());
    for (int s = 0; s < kSamples; ++s) {
      const double v = sample(s);
      if (is_puncture(v)) continue;
      for (std::size_t i = 0; i < branches_.size(); ++i) {
        values[i] = branch_value(model_, branches_[i], v);
        const double r = std::abs(model_.f(values[i], v));
        max_residual_ = std::max(max_residual_, r);
        if (!(r <= kResidualTol)) {
          throw Error("branch k" + std::to_string(branches_[i].label) + " residual " + std::to_string(r) +
                      " exceeds 1e-10 at V = " + std::to_string(v));
        }
      }
      for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = i + 1; j < values.size(); ++j) {
          min_separation_ = std::min(min_separation_, std::abs(values[i] - values[j]));
        }
      }
    }
    if (branches_.size() > 1 && !(min_separation_ >= kMinGap)) {
      throw FoldError("branches are not separated on the window (gap " + std::to_string(min_separation_) + ")",
                      0.5 * (v_lo_ + v_hi_));
    }
  }

  KineticModel model_;
  double v_lo_;
  double v_hi_;
  std::vector<BranchInfo> branches_;
  double min_separation_ = std::numeric_limits<double>::infinity();
  double max_residual_ = 0.0;
};

/// All branches present at the steady state's V, ordered by descending U near V.
///
/// The window must contain V and no fold of any of these branches; a fold
/// inside it raises FoldError carrying the fold location.
inline BranchSet branches(const KineticModel& m, const SteadyState& steady, double v_lo, double v_hi) {
  if (!(v_lo < steady.v_bar && steady.v_bar < v_hi)) {
    throw InputError("branch window must contain V of the steady state");
  }
  std::vector<BranchInfo> present;
  for (auto& br : branch_catalog(m)) {
    if (br.contains(steady.v_bar)) present.push_back(br);
  }
  if (present.empty()) throw FoldError("no branch of f = 0 is regular at V of the steady state", steady.v_bar);
  // Order at a sample point near V that avoids punctures.
  double v_probe = steady.v_bar;
  for (const auto& br : present) {
    for (double p : br.punctures) {
      if (p == v_probe) v_probe = steady.v_bar + 1e-3 * (v_hi - steady.v_bar);
    }
  }
  std::vector<std::pair<double, int>> order;
  for (const auto& br : present) {
    double u = std::numeric_limits<double>::quiet_NaN();
    if (br.contains(v_probe)) u = branch_value(m, br, v_probe);
    order.emplace_back(u, br.label);
  }
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<int> labels;
  for (const auto& [u, label] : order) labels.push_back(label);
  return BranchSet(m, v_lo, v_hi, labels);
}

/// V +- half the distance to the nearest fold of any branch present at V.
inline std::pair<double, double> default_window(const KineticModel& m, const SteadyState& steady) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& br : branch_catalog(m)) {
    if (br.contains(steady.v_bar)) d = std::min(d, branch_clearance(br, steady.v_bar, false));
  }
  if (!std::isfinite(d)) d = std::max(1.0, std::abs(steady.v_bar));
  if (!(d > 0.0)) throw FoldError("steady state sits on a fold", steady.v_bar);
  return {steady.v_bar - 0.5 * d, steady.v_bar + 0.5 * d};
}

/// U values on the nullcline g(U, V) = 0 at this V. The predator-prey line
/// V = 0 (any U) is left out.
inline std::vector<double> g_nullcline(const KineticModel& m, double v) {
  const double a = m.alpha(), b = m.beta();
  switch (m.family()) {
    case Family::GrayScott: {
      if (!(v > 0.0 && v <= 1.0)) return {};
      const double u = std::sqrt(b * (1.0 - v) / v);
      return u == 0.0 ? std::vector<double>{0.0} : std::vector<double>{u, -u};
    }
    case Family::Brusselator: return v != 0.0 ? std::vector<double>{0.0, b / v} : std::vector<double>{0.0};
    case Family::Oregonator: return {v};
    case Family::PredatorPrey: return {(v + b) / a};
  }
  return {};
}

/// Label of the branch passing through (U, V) of the steady state.
inline int steady_branch_label(const KineticModel& m, const SteadyState& steady) {
  int best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (const auto& br : branch_catalog(m)) {
    if (!br.contains(steady.v_bar)) continue;
    try {
      const double err = std::abs(branch_value(m, br, steady.v_bar) - steady.u_bar);
      if (err < best_err) {
        best_err = err;
        best = br.label;
      }
    } catch (const Error&) {
    }
  }
  if (best == 0 || best_err > 1e-8 * std::max(1.0, std::abs(steady.u_bar))) {
    throw InputError("no branch passes through the steady state");
  }
  return best;
}

}  // namespace rdlab
