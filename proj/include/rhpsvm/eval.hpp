#pragma once

// Metrics, the Rademacher-type generalization bound, and the experiment
// procedures (cross-validation, label-noise sweeps, bootstrap stability,
// single-outlier shift) used to compare the SVM variants.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhpsvm/data.hpp"
#include "rhpsvm/errors.hpp"
#include "rhpsvm/model.hpp"
#include "rhpsvm/rng.hpp"

namespace rhpsvm {

struct MetricsReport {
  double accuracy = 0.0;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t n() const noexcept { return tp + tn + fp + fn; }
};

/// +1 is the positive class.
inline MetricsReport accuracy_metrics(const Vector& preds, const Labels& labels) {
  if (preds.size() != labels.size()) throw UsageError("accuracy_metrics: length mismatch");
  if (preds.size() == 0) throw UsageError("accuracy_metrics: empty input");
  MetricsReport m;
  for (Eigen::Index i = 0; i < preds.size(); ++i) {
    const bool pred_pos = preds(i) > 0.0;
    const bool true_pos = labels(i) > 0.0;
    if (pred_pos && true_pos) ++m.tp;
    else if (!pred_pos && !true_pos) ++m.tn;
    else if (pred_pos) ++m.fp;
    else ++m.fn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.n());
  return m;
}

inline MetricsReport evaluate(const TrainedModel& m, const Dataset& ds) {
  return accuracy_metrics(m.predict_all(ds.features()), ds.labels());
}

struct BoundInputs {
  double sum_loss = 0.0;     // sum_i L(1 - y_i f(x_i))
  std::size_t n = 0;
  double gamma = 1.0;        // free scale of the bound
  double B_norm = 0.0;       // bound on ||w~||
  double iota = 1.0;         // Lipschitz constant of the loss
  double gram_trace = 0.0;   // sum_i K(x_i, x_i)
  double zeta = 0.05;        // confidence level; the bound holds w.p. 1 - zeta
};

struct BoundTerms {
  double empirical = 0.0;   // (gamma / n) sum_loss
  double complexity = 0.0;  // 2 B gamma iota / sqrt(n) * sqrt(trace)
  double confidence = 0.0;  // sqrt(8 ln(2 / zeta) / n)
  double total = 0.0;
};

inline BoundTerms generalization_bound_terms(const BoundInputs& b) {
  if (!(b.zeta > 0.0 && b.zeta < 1.0)) throw DomainError("zeta must lie in (0, 1)");
  if (b.n == 0) throw DomainError("bound needs n >= 1");
  if (b.sum_loss < 0.0 || b.gamma <= 0.0 || b.B_norm < 0.0 || b.iota < 0.0 || b.gram_trace < 0.0)
    throw DomainError("bound inputs must be nonnegative (gamma positive)");
  const double n = static_cast<double>(b.n);
  BoundTerms t;
  t.empirical = b.gamma / n * b.sum_loss;
  t.complexity = 2.0 * b.B_norm * b.gamma * b.iota / std::sqrt(n) * std::sqrt(b.gram_trace);
  t.confidence = std::sqrt(8.0 * std::log(2.0 / b.zeta) / n);
  t.total = t.empirical + t.complexity + t.confidence;
  return t;
}

inline double generalization_bound(const BoundInputs& b) { return generalization_bound_terms(b).total; }

/// Bound inputs for a trained model on `ds`. The kernel trace and ||w~|| are
/// both taken in the bias-augmented feature space the model lives in.
inline BoundInputs bound_inputs_for(const TrainedModel& m, const Dataset& ds, double gamma,
                                    double zeta) {
  const Vector f = m.decision_values(ds.features());
  const Matrix Z = m.prepare(ds.features());
  BoundInputs b;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    b.sum_loss += loss_value(m.kind(), 1.0 - ds.labels()(i) * f(i), m.params());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) b.gram_trace += m.kernel()(Z.row(i), Z.row(i)) + 1.0;
  b.n = static_cast<std::size_t>(ds.size());
  b.gamma = gamma;
  b.B_norm = m.weight_norm();
  b.iota = lipschitz_bound(m.kind(), m.params());
  b.zeta = zeta;
  return b;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

struct CvReport {
  std::vector<double> fold_accuracy;
  Summary summary;
};

inline CvReport cross_validate(const Dataset& ds, const FitConfig& fc, std::size_t k,
                               std::uint64_t seed, bool standardized = false) {
  CvReport r;
  for (const auto& fold : stratified_kfold(ds, k, seed)) {
    const Dataset train = ds.subset(fold.train);
    const Dataset test = ds.subset(fold.test);
    const TrainedModel m = standardized ? fit_standardized(train, fc) : fit(train, fc);
    r.fold_accuracy.push_back(evaluate(m, test).accuracy);
  }
  r.summary = summarize(r.fold_accuracy);
  return r;
}

/// Seeded stratified holdout: every class contributes round(test_fraction * count)
/// test samples (at least one of each when possible).
inline Fold stratified_holdout(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw UsageError("test fraction must lie in (0, 1)");
  std::vector<std::size_t> pos, neg;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    (ds.labels()(i) > 0 ? pos : neg).push_back(static_cast<std::size_t>(i));
  Rng rng(seed);
  shuffle(pos, rng);
  shuffle(neg, rng);
  Fold fold;
  for (auto* cls : {&pos, &neg}) {
    auto take = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(cls->size())));
    if (cls->size() >= 2) take = std::clamp<std::size_t>(take, 1, cls->size() - 1);
    for (std::size_t k = 0; k < cls->size(); ++k) (k < take ? fold.test : fold.train).push_back((*cls)[k]);
  }
  std::sort(fold.train.begin(), fold.train.end());
  std::sort(fold.test.begin(), fold.test.end());
  return fold;
}

struct NoiseCell {
  double rate = 0.0;
  std::string model;
  std::vector<double> accuracy;  // one per repeat
  Summary summary;
};

struct NamedConfig {
  std::string name;
  FitConfig config;
};

/// For each repeat: seeded stratified holdout, label noise on the training part
/// only, every model trained on the same noisy labels and scored on the clean
/// test part. Cells are ordered by (rate, model).
inline std::vector<NoiseCell> noise_benchmark(const Dataset& ds, const std::vector<NamedConfig>& models,
                                              const std::vector<double>& rates, std::size_t repeats,
                                              std::uint64_t seed, double test_fraction = 0.3,
                                              bool standardized = false) {
  if (repeats < 1) throw UsageError("noise benchmark needs at least one repeat");
  std::vector<NoiseCell> cells;
  for (double rate : rates)
    for (const auto& m : models) cells.push_back({rate, m.name, {}, {}});
  for (std::size_t r = 0; r < repeats; ++r) {
    const Fold split = stratified_holdout(ds, test_fraction, Rng::derive(seed, 2 * r));
    const Dataset train = ds.subset(split.train);
    const Dataset test = ds.subset(split.test);
    std::size_t cell = 0;
    for (double rate : rates) {
      const Dataset noisy = inject_label_noise(train, {rate, Rng::derive(seed, 2 * r + 1)});
      for (const auto& m : models) {
        const TrainedModel fitted = standardized ? fit_standardized(noisy, m.config) : fit(noisy, m.config);
        cells[cell++].accuracy.push_back(evaluate(fitted, test).accuracy);
      }
    }
  }
  for (auto& c : cells) c.summary = summarize(c.accuracy);
  return cells;
}

struct StabilityReport {
  std::vector<double> accuracy;        // per resample
  std::vector<std::uint64_t> seeds;    // sub-seed finally used per resample
  std::vector<std::size_t> redraws;    // single-class draws rejected per resample
  Summary summary;
};

/// Bootstrap stability: B resamples of `train` (n draws with replacement), each
/// fitted with `fitter` and scored on the untouched `test`. A resample holding a
/// single class is redrawn with the next sub-seed.
template <typename Fitter>
StabilityReport resampling_stability(const Dataset& train, const Dataset& test, Fitter&& fitter,
                                     std::size_t resamples, std::uint64_t seed) {
  if (resamples < 2) throw UsageError("resampling_stability needs at least 2 resamples");
  detail::require_two_classes(train);
  const auto n = static_cast<std::size_t>(train.size());
  StabilityReport rep;
  for (std::size_t b = 0; b < resamples; ++b) {
    std::uint64_t sub = Rng::derive(seed, b);
    std::size_t rejected = 0;
    std::vector<std::size_t> idx(n);
    while (true) {
      Rng rng(sub);
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
      bool pos = false, neg = false;
      for (auto i : idx) (train.labels()(static_cast<Eigen::Index>(i)) > 0 ? pos : neg) = true;
      if (pos && neg) break;
      if (++rejected > 1000) throw SolverError("could not draw a two-class bootstrap sample", {}, 0.0);
      sub = Rng::derive(sub, rejected);
    }
    const auto model = fitter(train.subset(idx));
    rep.accuracy.push_back(accuracy_metrics(model.predict_all(test.features()), test.labels()).accuracy);
    rep.seeds.push_back(sub);
    rep.redraws.push_back(rejected);
  }
  rep.summary = summarize(rep.accuracy);
  return rep;
}

inline StabilityReport resampling_stability(const Dataset& train, const Dataset& test,
                                            const FitConfig& fc, std::size_t resamples,
                                            std::uint64_t seed) {
  return resampling_stability(train, test, [&](const Dataset& d) { return fit(d, fc); }, resamples,
                              seed);
}

/// Primal weights of a linear-kernel model: w = sum_i c_i x_i, b = sum_i c_i.
inline std::pair<Vector, double> linear_weights(const TrainedModel& m) {
  if (m.kernel().kind() != KernelKind::Linear)
    throw UnsupportedError("primal weights are only defined for the linear kernel");
  if (m.coeffs().size() == 0) return {Vector::Zero(static_cast<Eigen::Index>(m.dim())), 0.0};
  return {m.support().transpose() * m.coeffs(), m.coeffs().sum()};
}

/// Angle between two vectors in [0, pi]; 0 when both vanish, pi/2 when one does.
inline double vector_angle(const Vector& a, const Vector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return std::numbers::pi / 2;
  const Vector ua = a / na, ub = b / nb;
  return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

struct OutlierReport {
  double angle_A = 0.0;
  double angle_B = 0.0;
  double norm_ratio_A = 0.0;  // ||w with outlier|| / ||w without||
  double norm_ratio_B = 0.0;
};

/// Train each config with and without one extra sample (x_out, y_out) and report
/// how far the weight vector turns.
inline OutlierReport outlier_shift(const Dataset& ds, const Vector& x_out, double y_out,
                                   const FitConfig& a, const FitConfig& b) {
  if (a.kernel.kind() != KernelKind::Linear || b.kernel.kind() != KernelKind::Linear)
    throw UnsupportedError("outlier_shift needs linear kernels (angles are taken between primal weights)");
  if (x_out.size() != ds.dim()) throw UsageError("outlier has the wrong dimension");
  if (y_out != 1.0 && y_out != -1.0) throw UsageError("outlier label must be -1 or +1");
  Matrix X(ds.size() + 1, ds.dim());
  X.topRows(ds.size()) = ds.features();
  X.row(ds.size()) = x_out.transpose();
  Labels y(ds.size() + 1);
  y.head(ds.size()) = ds.labels();
  y(ds.size()) = y_out;
  const Dataset with(std::move(X), std::move(y), ds.source());

  auto shift = [&](const FitConfig& fc, double& angle, double& ratio) {
    const Vector w0 = linear_weights(fit(ds, fc)).first;
    const Vector w1 = linear_weights(fit(with, fc)).first;
    angle = vector_angle(w0, w1);
    ratio = w0.norm() > 0.0 ? w1.norm() / w0.norm() : 0.0;
  };
  OutlierReport rep;
  shift(a, rep.angle_A, rep.norm_ratio_A);
  shift(b, rep.angle_B, rep.norm_ratio_B);
  return rep;
}

/// Far mislabeled point for `bench outlier`: distance D from the origin along the
/// positive class direction (1, ..., 1) / sqrt(d) of synth_two_gaussians, labeled -1.
inline std::pair<Vector, double> far_outlier(Eigen::Index dim, double distance) {
  return {Vector::Constant(dim, distance / std::sqrt(static_cast<double>(dim))), -1.0};
}

}  // namespace rhpsvm
