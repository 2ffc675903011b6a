#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhpsvm/data.hpp"
#include "rhpsvm/errors.hpp"
#include "rhpsvm/kernel.hpp"
#include "rhpsvm/loss.hpp"
#include "rhpsvm/solver.hpp"

namespace rhpsvm {

inline constexpr int kModelFormatVersion = 1;
/// Coefficients at or below this magnitude are dropped from the model.
inline constexpr double kPruneThreshold = 1e-12;

struct ModelMeta {
  std::size_t n_train = 0;
  std::size_t d = 0;
  int cccp_iterations = 0;
  double final_objective = 0.0;
  bool converged = true;
  /// Effective training configuration, echoed verbatim.
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  /// FNV-1a 64 of config.dump(), hex.
  std::string config_digest;
  /// Feature transform applied before the kernel, when training standardized.
  std::optional<Standardizer> standardizer;
};

/// Everything that determines a fit.
struct FitConfig {
  LossKind kind = LossKind::RescaledHP;
  LossParams params;
  KernelSpec kernel;
  SolverConfig solver;
};

inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::ordered_json kernel_to_json(const KernelSpec& k) {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  if (k.kind() == KernelKind::Rbf) params["gamma"] = k.gamma();
  if (k.kind() == KernelKind::Polynomial) {
    params["degree"] = k.degree();
    params["coef0"] = k.coef0();
    params["scale"] = k.scale();
  }
  return {{"kind", std::string(to_string(k.kind()))}, {"params", params}};
}

inline KernelSpec kernel_from_json(const nlohmann::ordered_json& j) {
  const auto kind = parse_kernel_kind(j.at("kind").get<std::string>());
  const auto& params = j.at("params");
  switch (kind) {
    case KernelKind::Linear: return KernelSpec::linear();
    case KernelKind::Rbf: return KernelSpec::rbf(params.at("gamma").get<double>());
    case KernelKind::Polynomial:
      return KernelSpec::polynomial(params.at("degree").get<int>(), params.at("coef0").get<double>(),
                                    params.at("scale").get<double>());
  }
  return {};
}

inline nlohmann::ordered_json solver_to_json(const SolverConfig& s) {
  return {{"C", s.C},
          {"max_cccp", s.max_cccp},
          {"outer_tol", s.outer_tol},
          {"inner_method", std::string(to_string(s.inner_method))},
          {"inner_tol", s.effective_inner_tol()},
          {"max_inner", s.max_inner},
          {"big_M", s.big_M},
          {"seed", s.seed}};
}

inline nlohmann::ordered_json fit_config_to_json(const FitConfig& fc) {
  return {{"loss", std::string(to_string(fc.kind))},
          {"eta", fc.params.eta()},
          {"lambda", fc.params.lambda()},
          {"s", fc.params.s()},
          {"tau", fc.params.tau()},
          {"kernel", kernel_to_json(fc.kernel)},
          {"solver", solver_to_json(fc.solver)}};
}

/// Immutable trained classifier in representer form.
class TrainedModel {
 public:
  TrainedModel(LossKind kind, LossParams params, KernelSpec kernel, Matrix support, Vector coeffs,
               ModelMeta meta)
      : kind_(kind),
        params_(params),
        kernel_(kernel),
        support_(std::move(support)),
        coeffs_(std::move(coeffs)),
        meta_(std::move(meta)) {
    if (support_.rows() != coeffs_.size())
      throw UsageError("model: support rows and coefficients differ in count");
    if (!coeffs_.allFinite() || !support_.allFinite())
      throw UsageError("model: coefficients and support rows must be finite");
    if (meta_.standardizer && meta_.standardizer->mu.size() != static_cast<Eigen::Index>(meta_.d))
      throw UsageError("model: standardizer dimension mismatch");
  }

  /// Keep rows with |c_i| > kPruneThreshold.
  static TrainedModel from_coefficients(LossKind kind, const LossParams& params,
                                        const KernelSpec& kernel, const Matrix& X, const Vector& c,
                                        ModelMeta meta) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (std::abs(c(i)) > kPruneThreshold) keep.push_back(i);
    Matrix support(static_cast<Eigen::Index>(keep.size()), X.cols());
    Vector coeffs(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      support.row(static_cast<Eigen::Index>(k)) = X.row(keep[k]);
      coeffs(static_cast<Eigen::Index>(k)) = c(keep[k]);
    }
    return TrainedModel(kind, params, kernel, std::move(support), std::move(coeffs), std::move(meta));
  }

  LossKind kind() const noexcept { return kind_; }
  const LossParams& params() const noexcept { return params_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const Matrix& support() const noexcept { return support_; }
  const Vector& coeffs() const noexcept { return coeffs_; }
  const ModelMeta& meta() const noexcept { return meta_; }
  std::size_t dim() const noexcept { return meta_.d; }

  /// Maps raw features into the space the support rows live in.
  Matrix prepare(const Matrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != meta_.d)
      throw UsageError("model expects " + std::to_string(meta_.d) + " features, got " +
                       std::to_string(X.cols()));
    return meta_.standardizer ? meta_.standardizer->apply(X) : X;
  }

  /// sum_i c_i (K(x_i, x) + 1) on a raw (unstandardized) input.
  double decision_value(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != meta_.d)
      throw UsageError("model expects " + std::to_string(meta_.d) + " features, got " +
                       std::to_string(x.size()));
    if (meta_.standardizer) {
      const Vector z = (x - meta_.standardizer->mu).cwiseQuotient(meta_.standardizer->sigma);
      return decision_expansion(kernel_, support_, coeffs_, z);
    }
    return decision_expansion(kernel_, support_, coeffs_, x);
  }

  /// +1 when decision_value >= 0 (ties go to +1), else -1.
  double predict(const Vector& x) const { return decision_value(x) >= 0.0 ? 1.0 : -1.0; }

  Vector decision_values(const Matrix& X) const {
    const Matrix Z = prepare(X);
    Vector out(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      out(i) = decision_expansion(kernel_, support_, coeffs_, Z.row(i));
    return out;
  }

  Vector predict_all(const Matrix& X) const {
    return decision_values(X).unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
  }

  /// RKHS norm of w~: sqrt(c' K~_SS c).
  double weight_norm() const {
    if (coeffs_.size() == 0) return 0.0;
    const Gram K = gram_matrix(kernel_, support_, true);
    return std::sqrt(std::max(0.0, coeffs_.dot(K.values * coeffs_)));
  }

 private:
  LossKind kind_;
  LossParams params_;
  KernelSpec kernel_;
  Matrix support_;
  Vector coeffs_;
  ModelMeta meta_;
};

namespace detail {

inline ModelMeta base_meta(const Dataset& ds, const FitConfig& fc) {
  ModelMeta meta;
  meta.n_train = static_cast<std::size_t>(ds.size());
  meta.d = static_cast<std::size_t>(ds.dim());
  meta.config = fit_config_to_json(fc);
  meta.config_digest = fnv1a_hex(meta.config.dump());
  return meta;
}

inline void require_two_classes(const Dataset& ds) {
  if (!ds.has_both_classes()) throw UsageError("training data must contain both classes");
}

}  // namespace detail

/// CCCP training of the rescaled Huberized pinball SVM.
inline std::pair<TrainedModel, std::vector<CccpState>> cccp_train(const Dataset& ds,
                                                                  const KernelSpec& spec,
                                                                  const LossParams& p,
                                                                  const SolverConfig& cfg) {
  detail::require_two_classes(ds);
  const Gram K = gram_matrix(spec, ds.features(), true);
  CccpResult res = cccp_solve(K, ds.labels(), p, cfg);
  ModelMeta meta = detail::base_meta(ds, {LossKind::RescaledHP, p, spec, cfg});
  meta.cccp_iterations = res.iterations;
  meta.final_objective = res.trace.back().objective;
  meta.converged = res.converged;
  return {TrainedModel::from_coefficients(LossKind::RescaledHP, p, spec, ds.features(), res.coeffs,
                                          std::move(meta)),
          std::move(res.trace)};
}

/// Hinge, pinball or Huberized pinball SVM (one convex solve).
inline TrainedModel train_baseline(LossKind kind, const Dataset& ds, const KernelSpec& spec,
                                   const LossParams& p, const SolverConfig& cfg) {
  if (kind == LossKind::RescaledHP) throw UsageError("train_baseline: use cccp_train for rhp");
  detail::require_two_classes(ds);
  // Hinge ignores every loss parameter, pinball everything but tau.
  const LossParams effective = kind == LossKind::Hinge     ? LossParams{}
                               : kind == LossKind::Pinball ? LossParams(1.0, 1.0, 1.0, p.tau())
                                                           : p;
  const Gram K = gram_matrix(spec, ds.features(), true);
  const Vector c = baseline_solve(kind, K, ds.labels(), effective, cfg);
  ModelMeta meta = detail::base_meta(ds, {kind, effective, spec, cfg});
  meta.cccp_iterations = 1;
  meta.final_objective = primal_objective(kind, c, K, ds.labels(), cfg.C, effective);
  return TrainedModel::from_coefficients(kind, effective, spec, ds.features(), c, std::move(meta));
}

inline TrainedModel fit(const Dataset& ds, const KernelSpec& spec, const LossParams& p,
                        const SolverConfig& cfg, LossKind kind) {
  if (kind == LossKind::RescaledHP) return cccp_train(ds, spec, p, cfg).first;
  return train_baseline(kind, ds, spec, p, cfg);
}

inline TrainedModel fit(const Dataset& ds, const FitConfig& fc) {
  return fit(ds, fc.kernel, fc.params, fc.solver, fc.kind);
}

/// Standardize the features, train, and store the transform in the model so
/// predictions accept raw features.
inline TrainedModel fit_standardized(const Dataset& ds, const FitConfig& fc) {
  auto [z, transform] = standardize(ds);
  TrainedModel m = fit(z, fc);
  ModelMeta meta = m.meta();
  meta.standardizer = std::move(transform);
  return TrainedModel(m.kind(), m.params(), m.kernel(), m.support(), m.coeffs(), std::move(meta));
}

namespace detail {

inline nlohmann::ordered_json vector_json(const Vector& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector json_vector(const nlohmann::ordered_json& a) {
  if (!a.is_array()) throw ParseError("expected an array of numbers", 0);
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["version"] = kModelFormatVersion;
  j["loss"] = {{"kind", std::string(to_string(m.kind()))},
               {"eta", m.params().eta()},
               {"lambda", m.params().lambda()},
               {"s", m.params().s()},
               {"tau", m.params().tau()}};
  j["kernel"] = kernel_to_json(m.kernel());
  nlohmann::ordered_json support = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.support().rows(); ++i)
    support.push_back(detail::vector_json(m.support().row(i).transpose()));
  j["support"] = std::move(support);
  j["coeffs"] = detail::vector_json(m.coeffs());
  const auto& meta = m.meta();
  nlohmann::ordered_json jm;
  jm["n_train"] = meta.n_train;
  jm["d"] = meta.d;
  jm["cccp_iterations"] = meta.cccp_iterations;
  jm["final_objective"] = meta.final_objective;
  jm["converged"] = meta.converged;
  jm["config_digest"] = meta.config_digest;
  jm["config"] = meta.config;
  if (meta.standardizer)
    jm["standardize"] = {{"mu", detail::vector_json(meta.standardizer->mu)},
                         {"sigma", detail::vector_json(meta.standardizer->sigma)}};
  j["meta"] = std::move(jm);
  return j;
}

/// Canonical text form: save(load(save(m))) == save(m).
inline std::string save(const TrainedModel& m) { return model_to_json(m).dump(2) + "\n"; }

inline TrainedModel load(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed model file: ") + e.what(), 0);
  }
  try {
    if (!j.is_object() || !j.contains("version")) throw ParseError("model file has no version field", 0);
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw ParseError("unsupported model format version " + std::to_string(version) +
                           " (this build reads version " + std::to_string(kModelFormatVersion) + ")",
                       0);
    const auto& jl = j.at("loss");
    const auto kind = parse_loss_kind(jl.at("kind").get<std::string>());
    const LossParams params(jl.at("eta").get<double>(), jl.at("lambda").get<double>(),
                            jl.at("s").get<double>(), jl.at("tau").get<double>());
    const KernelSpec kernel = kernel_from_json(j.at("kernel"));
    const auto& jm = j.at("meta");
    ModelMeta meta;
    meta.n_train = jm.at("n_train").get<std::size_t>();
    meta.d = jm.at("d").get<std::size_t>();
    meta.cccp_iterations = jm.at("cccp_iterations").get<int>();
    meta.final_objective = jm.at("final_objective").get<double>();
    meta.converged = jm.at("converged").get<bool>();
    meta.config_digest = jm.at("config_digest").get<std::string>();
    meta.config = jm.at("config");
    if (jm.contains("standardize"))
      meta.standardizer = Standardizer{detail::json_vector(jm.at("standardize").at("mu")),
                                       detail::json_vector(jm.at("standardize").at("sigma"))};
    const auto& js = j.at("support");
    if (!js.is_array()) throw ParseError("support must be an array of rows", 0);
    Matrix support(static_cast<Eigen::Index>(js.size()), static_cast<Eigen::Index>(meta.d));
    for (std::size_t i = 0; i < js.size(); ++i) {
      const Vector row = detail::json_vector(js[i]);
      if (static_cast<std::size_t>(row.size()) != meta.d)
        throw ParseError("support row " + std::to_string(i) + " has the wrong dimension", 0);
      support.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    Vector coeffs = detail::json_vector(j.at("coeffs"));
    return TrainedModel(kind, params, kernel, std::move(support), std::move(coeffs), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid model file: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid model file: ") + e.what(), 0);
  }
}

}  // namespace rhpsvm
