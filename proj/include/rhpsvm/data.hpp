#pragma once

// Dense binary-classification datasets: parsing (CSV, LIBSVM), serialization,
// standardization, seeded label noise, stratified folds and a two-Gaussian
// generator for synthetic experiments.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rhpsvm/errors.hpp"
#include "rhpsvm/format.hpp"
#include "rhpsvm/kernel.hpp"
#include "rhpsvm/rng.hpp"

namespace rhpsvm {

using Labels = Eigen::VectorXd;  // entries are exactly -1.0 or +1.0

class Dataset {
 public:
  Dataset(Matrix features, Labels labels, std::string source = {})
      : features_(std::move(features)), labels_(std::move(labels)), source_(std::move(source)) {
    if (features_.rows() < 1 || features_.cols() < 1)
      throw UsageError("dataset needs at least one sample and one feature");
    if (labels_.size() != features_.rows())
      throw UsageError("dataset: label count does not match sample count");
    for (Eigen::Index i = 0; i < labels_.size(); ++i)
      if (labels_(i) != 1.0 && labels_(i) != -1.0)
        throw UsageError("dataset: labels must be -1 or +1");
    if (!features_.allFinite()) throw UsageError("dataset: features must be finite");
  }

  const Matrix& features() const noexcept { return features_; }
  const Labels& labels() const noexcept { return labels_; }
  const std::string& source() const noexcept { return source_; }
  Eigen::Index size() const noexcept { return features_.rows(); }
  Eigen::Index dim() const noexcept { return features_.cols(); }

  std::size_t count(double label) const {
    return static_cast<std::size_t>((labels_.array() == label).count());
  }
  bool has_both_classes() const { return count(1.0) > 0 && count(-1.0) > 0; }

  /// Rows in the given order (duplicates allowed, for bootstrap resamples).
  Dataset subset(std::span<const std::size_t> idx) const {
    Matrix X(static_cast<Eigen::Index>(idx.size()), dim());
    Labels y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(idx[k]);
      X.row(static_cast<Eigen::Index>(k)) = features_.row(i);
      y(static_cast<Eigen::Index>(k)) = labels_(i);
    }
    return Dataset(std::move(X), std::move(y), source_);
  }

  Dataset with_labels(Labels labels) const { return Dataset(features_, std::move(labels), source_); }

 private:
  Matrix features_;
  Labels labels_;
  std::string source_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline double parse_label(std::string_view tok, std::size_t line) {
  const auto v = parse_number(tok);
  if (!v || (*v != 1.0 && *v != -1.0))
    throw ParseError("label must be +1 or -1, got '" + std::string(trim(tok)) + "'", line);
  return *v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> lines_of(std::string_view text) { return split(text, '\n'); }

inline Dataset assemble(const std::vector<std::vector<double>>& rows, std::vector<double> labels,
                        std::size_t dim) {
  if (rows.empty()) throw ParseError("no samples found", 0);
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  Labels y = Eigen::Map<Labels>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return Dataset(std::move(X), std::move(y));
}

}  // namespace detail

/// CSV: d feature columns then the label. A first row with no numeric field is
/// a header and is skipped. Blank lines are ignored.
inline Dataset parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::size_t dim = 0;
  bool first = true;
  std::size_t line_no = 0;
  for (auto line : detail::lines_of(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (first) {
      first = false;
      const bool header = std::none_of(fields.begin(), fields.end(), [](std::string_view f) {
        return detail::parse_number(f).has_value();
      });
      if (header) continue;
    }
    if (fields.size() < 2) throw ParseError("need at least one feature and a label", line_no);
    if (dim == 0) dim = fields.size() - 1;
    if (fields.size() - 1 != dim)
      throw ParseError("expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const auto v = detail::parse_number(fields[j]);
      if (!v) throw ParseError("non-numeric field '" + std::string(detail::trim(fields[j])) + "'", line_no);
      if (!std::isfinite(*v)) throw ParseError("non-finite feature", line_no);
      row[j] = *v;
    }
    labels.push_back(detail::parse_label(fields.back(), line_no));
    rows.push_back(std::move(row));
  }
  return detail::assemble(rows, std::move(labels), dim);
}

/// LIBSVM sparse rows `label idx:val ...`, 1-based strictly increasing indices,
/// densified. Dimension is `dim` when given, else the largest index seen.
inline Dataset parse_libsvm(std::string_view text, std::optional<std::size_t> dim = std::nullopt) {
  std::vector<std::vector<std::pair<std::size_t, double>>> sparse;
  std::vector<double> labels;
  std::size_t max_index = 0;
  std::size_t line_no = 0;
  for (auto line : detail::lines_of(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<std::string_view> toks;
    for (auto t : detail::split(line, ' '))
      if (!detail::trim(t).empty()) toks.push_back(detail::trim(t));
    labels.push_back(detail::parse_label(toks.front(), line_no));
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t prev = 0;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto colon = toks[k].find(':');
      if (colon == std::string_view::npos) throw ParseError("expected idx:val", line_no);
      const auto idx_text = toks[k].substr(0, colon);
      long long idx = 0;
      const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc{} || ptr != idx_text.data() + idx_text.size())
        throw ParseError("bad feature index '" + std::string(idx_text) + "'", line_no);
      if (idx <= 0) throw ParseError("feature indices are 1-based", line_no);
      if (static_cast<std::size_t>(idx) <= prev)
        throw ParseError("feature indices must be strictly increasing", line_no);
      prev = static_cast<std::size_t>(idx);
      const auto v = detail::parse_number(toks[k].substr(colon + 1));
      if (!v) throw ParseError("non-numeric value in '" + std::string(toks[k]) + "'", line_no);
      if (!std::isfinite(*v)) throw ParseError("non-finite feature", line_no);
      entries.emplace_back(prev, *v);
    }
    max_index = std::max(max_index, prev);
    sparse.push_back(std::move(entries));
  }
  const std::size_t d = dim.value_or(max_index);
  if (d < max_index)
    throw ParseError("feature index " + std::to_string(max_index) + " exceeds dim " + std::to_string(d), 0);
  if (d == 0) throw ParseError("no features and no dimension given", 0);
  std::vector<std::vector<double>> rows(sparse.size(), std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < sparse.size(); ++i)
    for (const auto& [idx, v] : sparse[i]) rows[i][idx - 1] = v;
  return detail::assemble(rows, std::move(labels), d);
}

inline void write_csv(std::ostream& out, const Dataset& ds) {
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out << format_double(ds.features()(i, j)) << ',';
    out << (ds.labels()(i) > 0 ? "1" : "-1") << '\n';
  }
}

inline std::string to_csv(const Dataset& ds) {
  std::ostringstream out;
  write_csv(out, ds);
  return out.str();
}

/// Per-feature affine map x -> (x - mu) / sigma, reusable on held-out data.
struct Standardizer {
  Vector mu;
  Vector sigma;

  Matrix apply(const Matrix& X) const {
    if (X.cols() != mu.size()) throw UsageError("standardizer: dimension mismatch");
    return (X.rowwise() - mu.transpose()).array().rowwise() / sigma.transpose().array();
  }
  Dataset apply(const Dataset& ds) const {
    return Dataset(apply(ds.features()), ds.labels(), ds.source());
  }
};

/// Fit mean / population std per feature. Features with std < 1e-12 are only
/// centered and get sigma = 1.
inline std::pair<Dataset, Standardizer> standardize(const Dataset& ds) {
  if (ds.size() < 2) throw UsageError("standardize: need at least 2 samples");
  const auto& X = ds.features();
  Standardizer t;
  t.mu = X.colwise().mean().transpose();
  t.sigma.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - t.mu(j)).square().mean();
    const double sd = std::sqrt(var);
    t.sigma(j) = sd < 1e-12 ? 1.0 : sd;
  }
  return {t.apply(ds), std::move(t)};
}

struct NoiseSpec {
  double rate = 0.0;  // in [0, 0.5]
  std::uint64_t seed = 0;
};

/// Indices whose labels `inject_label_noise` flips: floor(rate * n) distinct
/// positions from a seeded partial Fisher-Yates shuffle.
inline std::vector<std::size_t> noise_indices(std::size_t n, const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 0.5)) throw DomainError("noise rate must lie in [0, 0.5]");
  // tolerant floor: 0.29 * 100 gives 29
  const auto flips = static_cast<std::size_t>(std::floor(spec.rate * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(spec.seed);
  for (std::size_t k = 0; k < flips; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(idx[k], idx[j]);
  }
  idx.resize(flips);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Dataset inject_label_noise(const Dataset& ds, const NoiseSpec& spec) {
  Labels y = ds.labels();
  for (auto i : noise_indices(static_cast<std::size_t>(ds.size()), spec))
    y(static_cast<Eigen::Index>(i)) = -y(static_cast<Eigen::Index>(i));
  return ds.with_labels(std::move(y));
}

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold split. Each class is shuffled with the seed and dealt
/// round-robin; the negative class continues where the positive one stopped so
/// total fold sizes also stay within one of each other.
inline std::vector<Fold> stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(ds.size());
  if (k < 2 || k > n) throw UsageError("stratified_kfold: need 2 <= k <= n");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i)
    (ds.labels()(static_cast<Eigen::Index>(i)) > 0 ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k)
    throw UsageError("stratified_kfold: each class needs at least k members");
  Rng rng(seed);
  shuffle(pos, rng);
  shuffle(neg, rng);
  std::vector<std::vector<std::size_t>> buckets(k);
  std::size_t slot = 0;
  for (const auto* cls : {&pos, &neg})
    for (auto i : *cls) buckets[slot++ % k].push_back(i);
  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    folds[f].test = buckets[f];
    std::sort(folds[f].test.begin(), folds[f].test.end());
    std::vector<bool> in_test(n, false);
    for (auto i : folds[f].test) in_test[i] = true;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_test[i]) folds[f].train.push_back(i);
  }
  return folds;
}

/// Two isotropic Gaussian classes with means +-(separation / 2) / sqrt(d) * (1, ..., 1)
/// and standard deviation sigma. Labels alternate +1, -1, +1, ...
inline Dataset synth_two_gaussians(std::size_t n, std::size_t d, double separation, double sigma,
                                   std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) throw UsageError("synth_two_gaussians: n must be even and positive");
  if (d < 1) throw UsageError("synth_two_gaussians: d must be >= 1");
  if (!(sigma > 0.0)) throw DomainError("synth_two_gaussians: sigma must be positive");
  const double offset = 0.5 * separation / std::sqrt(static_cast<double>(d));
  Rng rng(seed);
  Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Labels y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y(i) = i % 2 == 0 ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = y(i) * offset + sigma * rng.normal();
  }
  return Dataset(std::move(X), std::move(y), "synthetic");
}

}  // namespace rhpsvm
