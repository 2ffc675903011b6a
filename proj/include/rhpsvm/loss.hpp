#pragma once

// Margin losses used by the SVM variants in this library. Every loss takes the
// margin argument u = 1 - y f(x); positive u means the sample is inside the
// margin or misclassified.
//
// The rescaled Huberized pinball loss is evaluated as the composition
//   L_rhp(u) = eta * (1 - exp(-L_hp(u) / lambda)),
// with L_hp the Huberized pinball loss. Its split into a convex part g and a
// concave part h (g + h = L_rhp) drives the CCCP trainer in solver.hpp.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhpsvm/errors.hpp"
#include "rhpsvm/format.hpp"

namespace rhpsvm {

enum class LossKind { Hinge, Pinball, HuberizedPinball, RescaledHP };

inline std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Hinge: return "hinge";
    case LossKind::Pinball: return "pinball";
    case LossKind::HuberizedPinball: return "hp";
    case LossKind::RescaledHP: return "rhp";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view name) {
  if (name == "hinge") return LossKind::Hinge;
  if (name == "pinball") return LossKind::Pinball;
  if (name == "hp") return LossKind::HuberizedPinball;
  if (name == "rhp") return LossKind::RescaledHP;
  throw UsageError("unknown loss kind '" + std::string(name) + "' (expected rhp|hp|pinball|hinge)");
}

/// The (eta, lambda, s, tau) quadruple. Validated on construction, immutable.
class LossParams {
 public:
  LossParams() = default;  // eta = lambda = s = 1, tau = 0.5

  LossParams(double eta, double lambda, double s, double tau)
      : eta_(eta), lambda_(lambda), s_(s), tau_(tau) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive and finite");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw DomainError("lambda must be positive and finite");
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("s must be positive and finite");
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
  }

  double eta() const noexcept { return eta_; }
  double lambda() const noexcept { return lambda_; }
  double s() const noexcept { return s_; }
  double tau() const noexcept { return tau_; }

  /// eta / lambda: scale of the convex part and Lipschitz constant of L_rhp.
  double scale() const noexcept { return eta_ / lambda_; }

  friend bool operator==(const LossParams&, const LossParams&) = default;

 private:
  double eta_ = 1.0;
  double lambda_ = 1.0;
  double s_ = 1.0;
  double tau_ = 0.5;
};

namespace detail {

inline void require_finite(double u) {
  if (!std::isfinite(u)) throw DomainError("loss argument must be finite");
}

inline void require_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("tau must lie in [0, 1]");
}

inline void require_s(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("s must be positive and finite");
}

}  // namespace detail

inline double hinge(double u) {
  detail::require_finite(u);
  return u >= 0.0 ? u : 0.0;
}

inline double pinball(double u, double tau) {
  detail::require_finite(u);
  detail::require_tau(tau);
  return u >= 0.0 ? u : -tau * u;
}

// Branches: u <= -s, -s < u <= 0, 0 < u <= s, u > s. The function is C^1, so
// which side a knot belongs to does not change any value.
inline double huberized_pinball(double u, double s, double tau) {
  detail::require_finite(u);
  detail::require_s(s);
  detail::require_tau(tau);
  if (u > s) return u - 0.5 * s;
  if (u > 0.0) return u * u / (2.0 * s);
  if (u > -s) return tau * u * u / (2.0 * s);
  return tau * (-u - 0.5 * s);
}

inline double huberized_pinball_deriv(double u, double s, double tau) {
  detail::require_finite(u);
  detail::require_s(s);
  detail::require_tau(tau);
  if (u > s) return 1.0;
  if (u > 0.0) return u / s;
  if (u > -s) return tau * u / s;
  return -tau;
}

/// Second derivative of L_hp where it exists; right-continuous at knots.
inline double huberized_pinball_second(double u, double s, double tau) {
  if (u >= s || u <= -s) return 0.0;
  return u >= 0.0 ? 1.0 / s : tau / s;
}

inline double rescaled_hp(double u, const LossParams& p) {
  const double base = huberized_pinball(u, p.s(), p.tau());
  return -p.eta() * std::expm1(-base / p.lambda());
}

inline double rescaled_hp_deriv(double u, const LossParams& p) {
  const double base = huberized_pinball(u, p.s(), p.tau());
  return p.scale() * huberized_pinball_deriv(u, p.s(), p.tau()) * std::exp(-base / p.lambda());
}

/// log(eta - L_rhp(u)). Finite for every finite u, which certifies L_rhp(u) < eta
/// even where the difference underflows in double precision.
inline double rescaled_hp_log_gap(double u, const LossParams& p) {
  return std::log(p.eta()) - huberized_pinball(u, p.s(), p.tau()) / p.lambda();
}

/// Convex part g(u) = (eta / lambda) L_hp(u).
inline double g_part(double u, const LossParams& p) {
  return p.scale() * huberized_pinball(u, p.s(), p.tau());
}

/// Concave part h(u) = L_rhp(u) - g(u).
inline double h_part(double u, const LossParams& p) {
  return -g_part(u, p) + rescaled_hp(u, p);
}

inline double g_part_deriv(double u, const LossParams& p) {
  return p.scale() * huberized_pinball_deriv(u, p.s(), p.tau());
}

inline double h_part_deriv(double u, const LossParams& p) {
  return -g_part_deriv(u, p) + rescaled_hp_deriv(u, p);
}

/// CCCP weight delta(u) = -h'(u) = (eta/lambda) L_hp'(u) (1 - exp(-L_hp(u)/lambda)).
inline double delta_coefficient(double u, const LossParams& p) {
  const double base = huberized_pinball(u, p.s(), p.tau());
  return -p.scale() * huberized_pinball_deriv(u, p.s(), p.tau()) * std::expm1(-base / p.lambda());
}

/// Supremum of |L_rhp'|: |L_hp'| <= 1 and the exponential factor is <= 1.
inline double lipschitz_bound(const LossParams& p) { return p.scale(); }

/// Lipschitz constant of any supported loss.
inline double lipschitz_bound(LossKind kind, const LossParams& p) {
  switch (kind) {
    case LossKind::Hinge: return 1.0;
    case LossKind::Pinball:
    case LossKind::HuberizedPinball: return 1.0;  // max(1, tau) with tau <= 1
    case LossKind::RescaledHP: return lipschitz_bound(p);
  }
  return 1.0;
}

/// Value of the loss `kind`. Hinge ignores all parameters, Pinball uses tau,
/// HuberizedPinball uses s and tau.
inline double loss_value(LossKind kind, double u, const LossParams& p) {
  switch (kind) {
    case LossKind::Hinge: return hinge(u);
    case LossKind::Pinball: return pinball(u, p.tau());
    case LossKind::HuberizedPinball: return huberized_pinball(u, p.s(), p.tau());
    case LossKind::RescaledHP: return rescaled_hp(u, p);
  }
  return 0.0;
}

/// Derivative of the loss `kind`. Hinge and Pinball are not differentiable at 0;
/// there the derivative of the u >= 0 branch is returned.
inline double loss_deriv(LossKind kind, double u, const LossParams& p) {
  switch (kind) {
    case LossKind::Hinge: detail::require_finite(u); return u >= 0.0 ? 1.0 : 0.0;
    case LossKind::Pinball: detail::require_finite(u); return u >= 0.0 ? 1.0 : -p.tau();
    case LossKind::HuberizedPinball: return huberized_pinball_deriv(u, p.s(), p.tau());
    case LossKind::RescaledHP: return rescaled_hp_deriv(u, p);
  }
  return 0.0;
}

struct FisherReport {
  /// max over the grid of L(1 - z) - L(1 + z); must be negative.
  double max_violation = -std::numeric_limits<double>::infinity();
  /// d/dz L_rhp(1 - z) at z = 0, i.e. -L_rhp'(1).
  double deriv_at_zero = 0.0;
  bool pass = false;
};

/// Numeric check of the two sufficient conditions for Fisher consistency of a
/// margin loss phi(z) = L_rhp(1 - z): phi(z) < phi(-z) for every z > 0 in the
/// grid, and phi'(0) != 0.
inline FisherReport fisher_consistency_check(const LossParams& p, std::span<const double> z_grid) {
  if (z_grid.empty()) throw UsageError("fisher_consistency_check: empty z grid");
  FisherReport report;
  for (double z : z_grid) {
    if (!(z > 0.0) || !std::isfinite(z))
      throw UsageError("fisher_consistency_check: grid points must be positive and finite");
    // L(1 - z) - L(1 + z) = -eta e^{-b/lambda} expm1((b - a) / lambda), accurate where both losses round to eta
    const double a = huberized_pinball(1.0 - z, p.s(), p.tau());
    const double b = huberized_pinball(1.0 + z, p.s(), p.tau());
    const double diff = -p.eta() * std::exp(-b / p.lambda()) * std::expm1((b - a) / p.lambda());
    report.max_violation = std::max(report.max_violation, diff);
  }
  report.deriv_at_zero = -rescaled_hp_deriv(1.0, p);
  report.pass = report.max_violation < 0.0 && std::abs(report.deriv_at_zero) > 1e-12;
  return report;
}

struct LossRow {
  double u;
  double loss;
  double deriv;
};

/// Inclusive grid u_min, u_min + step, ..., u_max (up to rounding of the last point).
inline std::vector<LossRow> loss_table(LossKind kind, const LossParams& p, double u_min,
                                       double u_max, double step) {
  if (!std::isfinite(u_min) || !std::isfinite(u_max) || !(u_min < u_max))
    throw UsageError("loss_table: need finite u_min < u_max");
  if (!(step > 0.0) || !std::isfinite(step)) throw UsageError("loss_table: step must be positive");
  const auto count = static_cast<std::size_t>(std::floor((u_max - u_min) / step + 1e-9)) + 1;
  std::vector<LossRow> rows;
  rows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = u_min + static_cast<double>(k) * step;
    rows.push_back({u, loss_value(kind, u, p), loss_deriv(kind, u, p)});
  }
  return rows;
}

inline void write_loss_csv(std::ostream& out, std::span<const LossRow> rows) {
  out << "u,loss,deriv\n";
  for (const auto& r : rows)
    out << format_double(r.u) << ',' << format_double(r.loss) << ',' << format_double(r.deriv)
        << '\n';
}

}  // namespace rhpsvm
