#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "rhpsvm/errors.hpp"

namespace rhpsvm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class KernelKind { Linear, Rbf, Polynomial };

inline std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Polynomial: return "poly";
  }
  return "?";
}

inline KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "linear") return KernelKind::Linear;
  if (name == "rbf") return KernelKind::Rbf;
  if (name == "poly") return KernelKind::Polynomial;
  throw UsageError("unknown kernel '" + std::string(name) + "' (expected linear|rbf|poly)");
}

/// Kernel choice with its hyperparameters. Use the named factories.
class KernelSpec {
 public:
  KernelSpec() = default;  // linear

  static KernelSpec linear() { return KernelSpec{}; }

  static KernelSpec rbf(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("rbf gamma must be positive");
    KernelSpec k;
    k.kind_ = KernelKind::Rbf;
    k.gamma_ = gamma;
    return k;
  }

  /// (scale * <x, x'> + coef0)^degree
  static KernelSpec polynomial(int degree, double coef0 = 1.0, double scale = 1.0) {
    if (degree < 1) throw DomainError("polynomial degree must be >= 1");
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw DomainError("polynomial scale must be positive");
    if (!std::isfinite(coef0)) throw DomainError("polynomial coef0 must be finite");
    KernelSpec k;
    k.kind_ = KernelKind::Polynomial;
    k.degree_ = degree;
    k.coef0_ = coef0;
    k.scale_ = scale;
    return k;
  }

  KernelKind kind() const noexcept { return kind_; }
  double gamma() const noexcept { return gamma_; }
  int degree() const noexcept { return degree_; }
  double coef0() const noexcept { return coef0_; }
  double scale() const noexcept { return scale_; }

  template <typename A, typename B>
  double operator()(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& xp) const {
    if (x.size() != xp.size()) throw UsageError("kernel: dimension mismatch");
    switch (kind_) {
      case KernelKind::Linear: return x.dot(xp);
      case KernelKind::Rbf: {
        double sq = 0.0;
        for (Eigen::Index k = 0; k < x.size(); ++k) {
          const double diff = x(k) - xp(k);
          sq += diff * diff;
        }
        return std::exp(-gamma_ * sq);
      }
      case KernelKind::Polynomial: return std::pow(scale_ * x.dot(xp) + coef0_, degree_);
    }
    return 0.0;
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

 private:
  KernelKind kind_ = KernelKind::Linear;
  double gamma_ = 1.0;
  int degree_ = 3;
  double coef0_ = 1.0;
  double scale_ = 1.0;
};

template <typename A, typename B>
double kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<A>& x,
                   const Eigen::MatrixBase<B>& xp) {
  return spec(x, xp);
}

/// Dense symmetric Gram matrix. When `augmented`, every entry carries the +1 of
/// the constant bias feature: K~(x, x') = K(x, x') + 1.
struct Gram {
  Matrix values;
  bool augmented = false;

  Eigen::Index size() const noexcept { return values.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

/// Rows of X are samples.
inline Gram gram_matrix(const KernelSpec& spec, const Matrix& X, bool augmented) {
  const Eigen::Index n = X.rows();
  if (n < 1 || X.cols() < 1) throw UsageError("gram_matrix: empty data");
  Gram g{Matrix(n, n), augmented};
  const double shift = augmented ? 1.0 : 0.0;
  if (spec.kind() == KernelKind::Linear) {
    g.values.noalias() = X * X.transpose();
    g.values.array() += shift;
    // Mirror the upper triangle so the result is exactly symmetric.
    g.values.triangularView<Eigen::StrictlyLower>() = g.values.transpose();
    return g;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = spec(X.row(i), X.row(j)) + shift;
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

/// Kernel values between every row of `rows` and `x`, plus 1 for the bias feature.
template <typename B>
Vector augmented_kernel_column(const KernelSpec& spec, const Matrix& rows,
                               const Eigen::MatrixBase<B>& x) {
  if (rows.rows() > 0 && rows.cols() != x.size())
    throw UsageError("kernel: dimension mismatch");
  Vector col(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) col(i) = spec(rows.row(i), x) + 1.0;
  return col;
}

/// Representer evaluation sum_i c_i (K(x_i, x) + 1).
template <typename B>
double decision_expansion(const KernelSpec& spec, const Matrix& support, const Vector& coeffs,
                          const Eigen::MatrixBase<B>& x) {
  if (support.rows() != coeffs.size())
    throw UsageError("decision_expansion: support rows and coefficients differ in count");
  if (coeffs.size() == 0) return 0.0;
  return coeffs.dot(augmented_kernel_column(spec, support, x));
}

}  // namespace rhpsvm
