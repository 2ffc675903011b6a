#pragma once

// Training machinery on a bias-augmented Gram matrix K~.
//
// A classifier is stored in representer form, w~ = sum_j c_j phi(x~_j), so the
// decision values on the training set are f = K~ c and the margins are
// u_i = 1 - y_i f_i.
//
// The rescaled Huberized pinball objective
//   J(c) = 1/2 c' K~ c + C sum_i L_rhp(u_i)
// is minimized by CCCP: with L_rhp = g + h (g convex, h concave), each outer
// step freezes delta_i = -h'(u_i) and minimizes the convex majorizer
//   F(c) = 1/2 c' K~ c + C sum_i g(u_i) + C sum_i delta_i y_i f_i.
// F is solved either by a damped generalized Newton method in c (the exact
// reference) or by clipped coordinate descent on its box-constrained dual.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rhpsvm/errors.hpp"
#include "rhpsvm/kernel.hpp"
#include "rhpsvm/loss.hpp"
#include "rhpsvm/rng.hpp"

namespace rhpsvm {

using Labels = Eigen::VectorXd;

enum class InnerMethod { PrimalReference, DualCD };

inline std::string_view to_string(InnerMethod m) {
  return m == InnerMethod::PrimalReference ? "primal" : "dual";
}

inline InnerMethod parse_inner_method(std::string_view name) {
  if (name == "primal") return InnerMethod::PrimalReference;
  if (name == "dual") return InnerMethod::DualCD;
  throw UsageError("unknown inner method '" + std::string(name) + "' (expected primal|dual)");
}

struct SolverConfig {
  double C = 1.0;
  int max_cccp = 50;
  /// Stop when the RKHS norm of the iterate change sqrt(dc' K~ dc) drops to this.
  double outer_tol = 1e-3;
  InnerMethod inner_method = InnerMethod::DualCD;
  /// Unset: 1e-6 (relative gradient norm) for the primal solver, 1e-8 (relative
  /// objective decrease per sweep) for the dual solver.
  std::optional<double> inner_tol;
  int max_inner = 10000;
  double big_M = 1e8;
  std::uint64_t seed = 0;

  double effective_inner_tol() const {
    return inner_tol.value_or(inner_method == InnerMethod::PrimalReference ? 1e-6 : 1e-8);
  }

  void validate() const {
    if (!(C > 0.0) || !std::isfinite(C)) throw DomainError("C must be positive and finite");
    if (max_cccp < 1) throw DomainError("max_cccp must be >= 1");
    if (!(outer_tol > 0.0)) throw DomainError("outer_tol must be positive");
    if (!(effective_inner_tol() > 0.0)) throw DomainError("inner_tol must be positive");
    if (max_inner < 1) throw DomainError("max_inner must be >= 1");
    if (!(big_M > 0.0)) throw DomainError("big_M must be positive");
  }
};

struct CccpState {
  int k = 0;
  Vector coeffs;
  Vector delta;
  Vector margins;
  double objective = 0.0;
};

/// I1: quadratic region |u_i| < s; I2: linear region |u_i| >= s.
struct IndexPartition {
  std::vector<std::size_t> I1;
  std::vector<std::size_t> I2;

  friend bool operator==(const IndexPartition&, const IndexPartition&) = default;
};

namespace detail {

inline void check_shapes(const Gram& K, const Labels& y, Eigen::Index n_coeffs) {
  if (K.values.rows() != K.values.cols()) throw UsageError("Gram matrix must be square");
  if (y.size() != K.size() || n_coeffs != K.size())
    throw UsageError("size mismatch between Gram matrix, labels and coefficients");
}

inline void check_augmented(const Gram& K) {
  if (!K.augmented) throw UsageError("solver expects a bias-augmented Gram matrix");
}

}  // namespace detail

/// u_i = 1 - y_i (K~ c)_i
inline Vector compute_margins(const Vector& c, const Gram& K, const Labels& y) {
  detail::check_shapes(K, y, c.size());
  detail::check_augmented(K);
  return (1.0 - (y.array() * (K.values * c).array())).matrix();
}

inline Vector delta_vector(const Vector& u, const LossParams& p) {
  Vector d(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) d(i) = delta_coefficient(u(i), p);
  return d;
}

inline IndexPartition partition(const Vector& u, double s) {
  IndexPartition part;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    (std::abs(u(i)) < s ? part.I1 : part.I2).push_back(static_cast<std::size_t>(i));
  return part;
}

/// J(c) = 1/2 c' K~ c + C sum_i L(u_i) for any loss kind.
inline double primal_objective(LossKind kind, const Vector& c, const Gram& K, const Labels& y,
                               double C, const LossParams& p) {
  detail::check_shapes(K, y, c.size());
  const Vector f = K.values * c;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) loss += loss_value(kind, 1.0 - y(i) * f(i), p);
  return 0.5 * c.dot(f) + C * loss;
}

inline double rhp_objective(const Vector& c, const Gram& K, const Labels& y, double C,
                            const LossParams& p) {
  detail::check_augmented(K);
  return primal_objective(LossKind::RescaledHP, c, K, y, C, p);
}

/// F(c) = 1/2 c' K~ c + C sum_i g(u_i) + C sum_i delta_i y_i f_i, the convex
/// subproblem of one CCCP step.
inline double subproblem_objective(const Vector& c, const Gram& K, const Labels& y,
                                   const Vector& delta, double C, const LossParams& p) {
  detail::check_shapes(K, y, c.size());
  if (delta.size() != c.size()) throw UsageError("delta has the wrong length");
  const Vector f = K.values * c;
  double total = 0.5 * c.dot(f);
  for (Eigen::Index i = 0; i < f.size(); ++i)
    total += C * (g_part(1.0 - y(i) * f(i), p) + delta(i) * y(i) * f(i));
  return total;
}

/// grad F = K~ (c - C gamma), gamma_i = y_i (g'(u_i) - delta_i).
inline Vector subproblem_gradient(const Vector& c, const Gram& K, const Labels& y,
                                  const Vector& delta, double C, const LossParams& p) {
  detail::check_shapes(K, y, c.size());
  const Vector f = K.values * c;
  Vector r(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i)
    r(i) = c(i) - C * y(i) * (g_part_deriv(1.0 - y(i) * f(i), p) - delta(i));
  return K.values * r;
}

/// Minimize the convex subproblem F with a damped generalized Newton method.
///
/// g is C^1 with a piecewise constant second derivative, so F has the
/// generalized Hessian H = K~ + C K~ D K~ with D = diag(g''(u_i)). The step
/// solves (I + C D K~) dc = -(c - C gamma), which satisfies H dc = -grad F and
/// is a descent direction. Rows with D_ii = 0 are explicit; the rest reduce to
/// a symmetric positive definite system on the quadratic-region indices.
/// Armijo backtracking on F guarantees monotone decrease from `start`.
inline Vector inner_solve_primal(const Gram& K, const Labels& y, const Vector& delta, double C,
                                 const LossParams& p, const SolverConfig& cfg,
                                 const std::optional<Vector>& start = std::nullopt) {
  const Eigen::Index n = K.size();
  detail::check_shapes(K, y, n);
  if (delta.size() != n) throw UsageError("delta has the wrong length");
  Vector c = start.value_or(Vector::Zero(n));
  if (c.size() != n) throw UsageError("warm start has the wrong length");

  const double tol = cfg.effective_inner_tol();
  const double grad0 = subproblem_gradient(Vector::Zero(n), K, y, delta, C, p).norm();
  const double target = tol * std::max(1.0, grad0);

  auto value_at = [&](const Vector& cc, const Vector& ff) {
    double total = 0.5 * cc.dot(ff);
    for (Eigen::Index i = 0; i < n; ++i)
      total += C * (g_part(1.0 - y(i) * ff(i), p) + delta(i) * y(i) * ff(i));
    return total;
  };

  Vector f = K.values * c;
  double grad_norm = 0.0;
  bool stalled = false;
  for (int it = 0; it < cfg.max_inner && !stalled; ++it) {
    Vector r(n);
    Vector curvature(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = 1.0 - y(i) * f(i);
      r(i) = c(i) - C * y(i) * (g_part_deriv(u, p) - delta(i));
      curvature(i) = p.scale() * huberized_pinball_second(u, p.s(), p.tau());
    }
    const Vector grad = K.values * r;
    grad_norm = grad.norm();
    if (grad_norm <= target) return c;

    std::vector<Eigen::Index> quad, flat;
    for (Eigen::Index i = 0; i < n; ++i) (curvature(i) > 0.0 ? quad : flat).push_back(i);

    Vector step(n);
    for (auto i : flat) step(i) = -r(i);
    if (!quad.empty()) {
      const auto m = static_cast<Eigen::Index>(quad.size());
      Matrix A(m, m);
      Vector rhs(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index i = quad[static_cast<std::size_t>(a)];
        const double inv = 1.0 / (C * curvature(i));
        double cross = 0.0;
        for (auto j : flat) cross += K.values(i, j) * r(j);
        rhs(a) = -r(i) * inv + cross;
        for (Eigen::Index b = 0; b < m; ++b) A(a, b) = K.values(i, quad[static_cast<std::size_t>(b)]);
        A(a, a) += inv;
      }
      const Vector sol = A.ldlt().solve(rhs);
      for (Eigen::Index a = 0; a < m; ++a) step(quad[static_cast<std::size_t>(a)]) = sol(a);
    }

    const double slope = grad.dot(step);
    if (!(slope < 0.0)) {  // no descent direction left at this precision
      stalled = true;
      break;
    }
    const Vector Kstep = K.values * step;
    const double f0 = value_at(c, f);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Vector c_try = c + t * step;
      const Vector f_try = f + t * Kstep;
      if (value_at(c_try, f_try) <= f0 + 1e-4 * t * slope) {
        c = c_try;
        f = f_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) stalled = true;
  }
  // A stalled line search means F cannot be lowered any further in double
  // precision; only running out of iterations is a failure.
  if (stalled) return c;
  throw SolverError("primal subproblem did not converge (gradient norm " +
                        std::to_string(grad_norm) + ")",
                    std::vector<double>(c.data(), c.data() + c.size()), grad_norm);
}

/// Clipped dual coordinate descent on
///   min_v 1/2 theta' K~ theta + sum_j [lin_j (v_j - anchor_j) + 1/2 quad_j (v_j - anchor_j)^2]
///   s.t. lo_j <= v_j <= hi_j,
/// where theta_i = y_i sum_{j of sample i} sign_j v_j. Each coordinate step is
/// the exact one-dimensional minimizer clipped to the box, so the objective
/// never increases. The recovered representer coefficients are c = theta.
class ClippedDualCd {
 public:
  struct Coordinate {
    Eigen::Index sample;
    double sign;
    double lin;
    double quad;
    double anchor;
    double lo;
    double hi;
  };

  ClippedDualCd(const Gram& K, const Labels& y, std::vector<Coordinate> coords)
      : K_(K), y_(y), coords_(std::move(coords)), v_(coords_.size()) {
    if (K.values.rows() != y.size()) throw UsageError("size mismatch between Gram matrix and labels");
    theta_ = Vector::Zero(y.size());
    for (std::size_t j = 0; j < coords_.size(); ++j) {
      const auto& cj = coords_[j];
      if (!(cj.lo <= cj.hi)) throw UsageError("dual box has lo > hi");
      v_[j] = cj.lo;
      theta_(cj.sample) += y_(cj.sample) * cj.sign * v_[j];
    }
    f_ = K_.values * theta_;
    objective_ = 0.5 * theta_.dot(f_);
    for (std::size_t j = 0; j < coords_.size(); ++j) objective_ += separable_term(j, v_[j]);
  }

  /// Exact minimization along coordinate j, clipped. Returns the objective change (<= 0).
  double update(std::size_t j) {
    const auto& cj = coords_[j];
    const Eigen::Index i = cj.sample;
    const double dir = y_(i) * cj.sign;  // d theta_i / d v_j
    const double grad = dir * f_(i) + cj.lin + cj.quad * (v_[j] - cj.anchor);
    const double hess = K_.values(i, i) + cj.quad;
    double next = hess > 0.0 ? v_[j] - grad / hess : (grad > 0.0 ? cj.lo : cj.hi);
    next = std::clamp(next, cj.lo, cj.hi);
    const double step = next - v_[j];
    if (step == 0.0) return 0.0;
    const double change = grad * step + 0.5 * hess * step * step;
    v_[j] = next;
    theta_(i) += dir * step;
    f_.noalias() += (dir * step) * K_.values.col(i);
    objective_ += change;
    return change;
  }

  /// One pass over all coordinates in `order`. Returns the objective decrease (>= 0).
  double sweep(const std::vector<std::size_t>& order) {
    double decrease = 0.0;
    for (auto j : order) decrease -= update(j);
    return decrease;
  }

  /// Sweep in seeded random order until the relative decrease of one sweep
  /// falls below `tol`. Throws SolverError after `max_sweeps`.
  int solve(double tol, int max_sweeps, std::uint64_t seed) {
    std::vector<std::size_t> order(coords_.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    Rng rng(seed);
    for (int s = 1; s <= max_sweeps; ++s) {
      shuffle(order, rng);
      const double decrease = sweep(order);
      if (decrease <= tol * std::max(1.0, std::abs(objective_))) {
        refresh();
        return s;
      }
    }
    throw SolverError("dual coordinate descent did not converge within " +
                          std::to_string(max_sweeps) + " sweeps",
                      std::vector<double>(theta_.data(), theta_.data() + theta_.size()),
                      objective_);
  }

  /// Recompute f and the objective from scratch.
  void refresh() {
    f_ = K_.values * theta_;
    objective_ = 0.5 * theta_.dot(f_);
    for (std::size_t j = 0; j < coords_.size(); ++j) objective_ += separable_term(j, v_[j]);
  }

  double objective() const noexcept { return objective_; }
  const std::vector<double>& variables() const noexcept { return v_; }
  const std::vector<Coordinate>& coordinates() const noexcept { return coords_; }
  /// Representer coefficients c = theta.
  const Vector& coeffs() const noexcept { return theta_; }

 private:
  double separable_term(std::size_t j, double v) const {
    const auto& cj = coords_[j];
    const double d = v - cj.anchor;
    return cj.lin * d + 0.5 * cj.quad * d * d;
  }

  const Gram& K_;
  const Labels& y_;
  std::vector<Coordinate> coords_;
  std::vector<double> v_;
  Vector theta_;
  Vector f_;
  double objective_ = 0.0;
};

/// Per-sample treatment of g inside the dual.
enum class DualRegion {
  Quadratic,  // I1: g taken as its quadratic piece, dual box open above (big_M)
  Linear,     // I2: g taken as its linear pieces, dual box of width C eta / lambda
  Exact,      // exact conjugate of g: quadratic dual terms and the finite box
};

/// Coordinates of the dual of the CCCP subproblem. Variable i is the alpha
/// multiplier and n + i the beta multiplier of sample i, shifted by the frozen
/// delta: v_i = alpha_i - C delta_i / (tau + 1), v_{n+i} = beta_i + tau C delta_i / (tau + 1),
/// which makes c_i = y_i (v_i - v_{n+i}) and puts the lower bounds at the shifts.
inline std::vector<ClippedDualCd::Coordinate> subproblem_dual_coordinates(
    const Labels& y, const Vector& delta, double C, const LossParams& p, double big_M,
    const std::vector<DualRegion>& regions) {
  if (p.tau() <= 0.0)
    throw UnsupportedError("the dual solver needs tau > 0; use the primal reference solver for tau = 0");
  const Eigen::Index n = y.size();
  const double kappa = C * p.scale();
  const double s = p.s();
  const double tau = p.tau();
  std::vector<ClippedDualCd::Coordinate> coords(2 * static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto region = regions[static_cast<std::size_t>(i)];
    const bool quadratic = region != DualRegion::Linear;
    const bool bounded = region != DualRegion::Quadratic;
    const double lo_a = -C * delta(i) / (tau + 1.0);
    const double lo_b = tau * C * delta(i) / (tau + 1.0);
    coords[static_cast<std::size_t>(i)] = {
        i, +1.0,
        -1.0 + (quadratic ? 0.0 : 0.5 * s),
        quadratic ? s / kappa : 0.0,
        lo_a, lo_a, lo_a + (bounded ? kappa : big_M)};
    coords[static_cast<std::size_t>(n + i)] = {
        i, -1.0,
        1.0 + (quadratic ? 0.0 : 0.5 * s),
        quadratic ? s / (kappa * tau) : 0.0,
        lo_b, lo_b, lo_b + (bounded ? kappa * tau : big_M)};
  }
  return coords;
}

inline std::vector<DualRegion> regions_of(const IndexPartition& part, Eigen::Index n) {
  std::vector<DualRegion> regions(static_cast<std::size_t>(n), DualRegion::Linear);
  for (auto i : part.I1) {
    if (i >= static_cast<std::size_t>(n)) throw UsageError("partition index out of range");
    regions[i] = DualRegion::Quadratic;
  }
  for (auto i : part.I2)
    if (i >= static_cast<std::size_t>(n)) throw UsageError("partition index out of range");
  if (part.I1.size() + part.I2.size() != static_cast<std::size_t>(n))
    throw UsageError("partition does not cover every sample exactly once");
  return regions;
}

/// Solve the CCCP subproblem through its dual with the I1/I2 partition frozen.
inline Vector inner_solve_dual(const Gram& K, const Labels& y, const Vector& delta, double C,
                               const LossParams& p, const SolverConfig& cfg,
                               const IndexPartition& part) {
  detail::check_shapes(K, y, delta.size());
  ClippedDualCd cd(K, y,
                   subproblem_dual_coordinates(y, delta, C, p, cfg.big_M, regions_of(part, y.size())));
  cd.solve(cfg.effective_inner_tol(), cfg.max_inner, cfg.seed);
  return cd.coeffs();
}

/// Same subproblem through the exact conjugate of g (no partition).
inline Vector inner_solve_dual_exact(const Gram& K, const Labels& y, const Vector& delta, double C,
                                     const LossParams& p, const SolverConfig& cfg) {
  detail::check_shapes(K, y, delta.size());
  ClippedDualCd cd(K, y,
                   subproblem_dual_coordinates(
                       y, delta, C, p, cfg.big_M,
                       std::vector<DualRegion>(static_cast<std::size_t>(y.size()), DualRegion::Exact)));
  cd.solve(cfg.effective_inner_tol(), cfg.max_inner, cfg.seed);
  return cd.coeffs();
}

/// Dual path used by the trainers: start from the partition of the current
/// margins, re-partition from the solution's margins and re-solve until the
/// partition is self-consistent (then the frozen-partition solution is the
/// exact subproblem minimizer). Falls back to the exact conjugate dual if the
/// partition keeps changing.
inline Vector inner_solve_dual_consistent(const Gram& K, const Labels& y, const Vector& delta,
                                          double C, const LossParams& p, const SolverConfig& cfg,
                                          const Vector& current_margins, int max_rounds = 20) {
  IndexPartition part = partition(current_margins, p.s());
  for (int round = 0; round < max_rounds; ++round) {
    Vector c = inner_solve_dual(K, y, delta, C, p, cfg, part);
    IndexPartition next = partition(compute_margins(c, K, y), p.s());
    if (next == part) return c;
    part = std::move(next);
  }
  return inner_solve_dual_exact(K, y, delta, C, p, cfg);
}

struct CccpResult {
  Vector coeffs;
  std::vector<CccpState> trace;
  /// Number of convex subproblems solved.
  int iterations = 0;
  bool converged = false;
};

inline CccpState make_state(int k, const Vector& c, const Gram& K, const Labels& y, double C,
                            const LossParams& p) {
  CccpState st;
  st.k = k;
  st.coeffs = c;
  st.margins = compute_margins(c, K, y);
  st.delta = delta_vector(st.margins, p);
  st.objective = rhp_objective(c, K, y, C, p);
  return st;
}

/// CCCP on the rescaled Huberized pinball objective, starting from c = 0.
inline CccpResult cccp_solve(const Gram& K, const Labels& y, const LossParams& p,
                             const SolverConfig& cfg) {
  cfg.validate();
  detail::check_augmented(K);
  detail::check_shapes(K, y, y.size());
  if (cfg.inner_method == InnerMethod::DualCD && p.tau() <= 0.0)
    throw UnsupportedError("the dual solver needs tau > 0; use the primal reference solver for tau = 0");

  CccpResult result;
  result.trace.push_back(make_state(0, Vector::Zero(K.size()), K, y, cfg.C, p));
  for (int k = 0; k < cfg.max_cccp; ++k) {
    const CccpState& cur = result.trace.back();
    Vector next;
    try {
      next = cfg.inner_method == InnerMethod::PrimalReference
                 ? inner_solve_primal(K, y, cur.delta, cfg.C, p, cfg, cur.coeffs)
                 : inner_solve_dual_consistent(K, y, cur.delta, cfg.C, p, cfg, cur.margins);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " in CCCP iteration " + std::to_string(k),
                        e.last_iterate(), e.residual(), k);
    }
    ++result.iterations;
    // no decrease of the majorizer F_k: stationary up to the inner tolerance
    if (subproblem_objective(next, K, y, cur.delta, cfg.C, p) >=
        subproblem_objective(cur.coeffs, K, y, cur.delta, cfg.C, p)) {
      result.converged = true;
      break;
    }
    const Vector diff = next - cur.coeffs;
    const double change = std::sqrt(std::max(0.0, diff.dot(K.values * diff)));
    result.trace.push_back(make_state(k + 1, next, K, y, cfg.C, p));
    if (change <= cfg.outer_tol) {
      result.converged = true;
      break;
    }
  }
  result.coeffs = result.trace.back().coeffs;
  return result;
}

/// Representer coefficients of a baseline SVM (hinge, pinball or Huberized
/// pinball) on K~. Hinge and pinball use the clipped dual with boxes [0, C] and
/// [-tau C, C]; Huberized pinball is one convex subproblem with delta = 0 and
/// g = L_hp, solved by the configured inner method.
inline Vector baseline_solve(LossKind kind, const Gram& K, const Labels& y, const LossParams& p,
                             const SolverConfig& cfg) {
  cfg.validate();
  detail::check_augmented(K);
  detail::check_shapes(K, y, y.size());
  const Eigen::Index n = y.size();
  switch (kind) {
    case LossKind::Hinge:
    case LossKind::Pinball: {
      double lower = 0.0;
      if (kind == LossKind::Pinball) {
        if (p.tau() <= 0.0)
          throw UnsupportedError("pinball baseline needs tau > 0 (tau = 0 is the hinge loss)");
        lower = -p.tau() * cfg.C;
      }
      std::vector<ClippedDualCd::Coordinate> coords;
      coords.reserve(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) coords.push_back({i, 1.0, -1.0, 0.0, 0.0, lower, cfg.C});
      ClippedDualCd cd(K, y, std::move(coords));
      const double tol = cfg.inner_tol.value_or(1e-8);
      cd.solve(tol, cfg.max_inner, cfg.seed);
      return cd.coeffs();
    }
    case LossKind::HuberizedPinball: {
      const LossParams unit(1.0, 1.0, p.s(), p.tau());
      const Vector zero = Vector::Zero(n);
      if (cfg.inner_method == InnerMethod::PrimalReference)
        return inner_solve_primal(K, y, zero, cfg.C, unit, cfg);
      return inner_solve_dual_consistent(K, y, zero, cfg.C, unit, cfg, Vector::Ones(n));
    }
    case LossKind::RescaledHP:
      return cccp_solve(K, y, p, cfg).coeffs;
  }
  return Vector::Zero(n);
}

}  // namespace rhpsvm
