#pragma once

// Command-line front end. `run` is kept separate from main() so the test suites
// can drive every subcommand in-process.
//
// Exit status: 0 success, 1 usage or parameter error, 2 runtime/solver error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rhpsvm/rhpsvm.hpp"

namespace rhpsvm::cli {

using Json = nlohmann::ordered_json;

/// Thrown for problems with the command line itself; maps to exit status 1.
class CliUsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// I/O failures (missing file, unwritable path); maps to exit status 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Writes to `path` when given, else to `fallback`.
inline void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) fallback << text;
  else write_file(path, text);
}

struct DataOptions {
  std::string path;
  std::string format = "csv";
  std::optional<std::size_t> dim;
  bool standardize = false;
};

struct ModelOptions {
  std::string loss = "rhp";
  std::string kernel = "linear";
  double gamma = 1.0;
  int degree = 3;
  double coef0 = 1.0;
  double C = 1.0;
  double eta = 1.0;
  double lambda = 1.0;
  double s = 1.0;
  double tau = 0.5;
  std::string inner = "dual";
  int max_cccp = 50;
  double outer_tol = 1e-3;
  std::optional<double> inner_tol;
  int max_inner = 10000;
  double big_M = 1e8;
};

struct SynthOptions {
  std::size_t n = 200;
  std::size_t d = 2;
  double separation = 2.0;
  double sigma = 0.5;
};

inline void add_data_options(CLI::App* sub, DataOptions& o, bool required) {
  auto* data = sub->add_option("--data", o.path, "Data file");
  if (required) data->required();
  sub->add_option("--format", o.format, "Data format")->check(CLI::IsMember({"csv", "libsvm"}));
  sub->add_option("--dim", o.dim, "Feature dimension for libsvm input");
}

inline void add_model_options(CLI::App* sub, ModelOptions& o, bool with_loss = true) {
  if (with_loss)
    sub->add_option("--loss", o.loss, "Loss")->check(CLI::IsMember({"rhp", "hp", "pinball", "hinge"}));
  sub->add_option("--kernel", o.kernel, "Kernel")->check(CLI::IsMember({"linear", "rbf", "poly"}));
  sub->add_option("--gamma", o.gamma, "RBF width gamma");
  sub->add_option("--degree", o.degree, "Polynomial degree");
  sub->add_option("--coef0", o.coef0, "Polynomial offset");
  sub->add_option("--C", o.C, "Penalty parameter C");
  sub->add_option("--eta", o.eta, "Loss ceiling eta");
  sub->add_option("--lambda", o.lambda, "Rescaling bandwidth lambda");
  sub->add_option("--s", o.s, "Huberization width s");
  sub->add_option("--tau", o.tau, "Quantile parameter tau");
  sub->add_option("--inner", o.inner, "Inner solver")->check(CLI::IsMember({"dual", "primal"}));
  sub->add_option("--max-cccp", o.max_cccp, "Maximum CCCP iterations");
  sub->add_option("--outer-tol", o.outer_tol, "CCCP tolerance on the iterate change");
  sub->add_option("--inner-tol", o.inner_tol, "Inner solver tolerance");
  sub->add_option("--max-inner", o.max_inner, "Inner iteration limit");
  sub->add_option("--big-m", o.big_M, "Upper bound for unbounded dual coordinates");
}

inline void add_synth_options(CLI::App* sub, SynthOptions& o) {
  sub->add_option("--synth-n", o.n, "Synthetic sample count (when --data is absent)");
  sub->add_option("--synth-d", o.d, "Synthetic dimension");
  sub->add_option("--separation", o.separation, "Distance between synthetic class means");
  sub->add_option("--sigma", o.sigma, "Synthetic class standard deviation");
}

/// Kernel-specific flags are rejected when they do not apply.
inline KernelSpec make_kernel(const CLI::App* sub, const ModelOptions& o) {
  const auto kind = parse_kernel_kind(o.kernel);
  if (kind != KernelKind::Rbf && sub->count("--gamma") > 0)
    throw CliUsageError("--gamma only applies to --kernel rbf");
  if (kind != KernelKind::Polynomial && (sub->count("--degree") > 0 || sub->count("--coef0") > 0))
    throw CliUsageError((sub->count("--degree") > 0 ? std::string("--degree") : std::string("--coef0")) +
                        " only applies to --kernel poly");
  switch (kind) {
    case KernelKind::Linear: return KernelSpec::linear();
    case KernelKind::Rbf: return KernelSpec::rbf(o.gamma);
    case KernelKind::Polynomial: return KernelSpec::polynomial(o.degree, o.coef0);
  }
  return {};
}

inline LossParams make_params(const ModelOptions& o) {
  if (!(o.tau >= 0.0 && o.tau <= 1.0)) throw DomainError("--tau must lie in [0, 1]");
  if (!(o.eta > 0.0)) throw DomainError("--eta must be positive");
  if (!(o.lambda > 0.0)) throw DomainError("--lambda must be positive");
  if (!(o.s > 0.0)) throw DomainError("--s must be positive");
  return LossParams(o.eta, o.lambda, o.s, o.tau);
}

inline SolverConfig make_solver(const ModelOptions& o, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.C = o.C;
  cfg.max_cccp = o.max_cccp;
  cfg.outer_tol = o.outer_tol;
  cfg.inner_method = parse_inner_method(o.inner);
  cfg.inner_tol = o.inner_tol;
  cfg.max_inner = o.max_inner;
  cfg.big_M = o.big_M;
  cfg.seed = seed;
  if (!(o.C > 0.0)) throw DomainError("--C must be positive");
  cfg.validate();
  return cfg;
}

inline FitConfig make_fit(const CLI::App* sub, const ModelOptions& o, std::uint64_t seed) {
  FitConfig fc;
  fc.kind = parse_loss_kind(o.loss);
  fc.params = make_params(o);
  fc.kernel = make_kernel(sub, o);
  fc.solver = make_solver(o, seed);
  return fc;
}

inline void check_data_flags(const CLI::App* sub, const DataOptions& d) {
  if (d.format != "libsvm" && sub->count("--dim") > 0)
    throw CliUsageError("--dim only applies to --format libsvm");
}

inline Dataset load_data(const DataOptions& d) {
  const std::string text = read_file(d.path);
  Dataset ds = d.format == "libsvm" ? parse_libsvm(text, d.dim) : parse_csv(text);
  return Dataset(ds.features(), ds.labels(), d.path);
}

inline Json data_json(const DataOptions& d) {
  Json j{{"data", d.path}, {"format", d.format}, {"standardize", d.standardize}};
  if (d.dim) j["dim"] = *d.dim;
  return j;
}

inline TrainedModel fit_with(const Dataset& ds, const FitConfig& fc, bool standardized) {
  return standardized ? fit_standardized(ds, fc) : fit(ds, fc);
}

inline std::string metrics_csv(const MetricsReport& m) {
  std::ostringstream out;
  out << "accuracy,tp,tn,fp,fn,n\n"
      << format_double(m.accuracy) << ',' << m.tp << ',' << m.tn << ',' << m.fp << ',' << m.fn << ','
      << m.n() << '\n';
  return out.str();
}

/// The four compared models, all sharing the hyperparameters of `base`.
inline std::vector<NamedConfig> comparison_models(const FitConfig& base) {
  std::vector<NamedConfig> out;
  for (auto kind : {LossKind::RescaledHP, LossKind::HuberizedPinball, LossKind::Pinball, LossKind::Hinge}) {
    FitConfig fc = base;
    fc.kind = kind;
    out.push_back({std::string(to_string(kind)), fc});
  }
  return out;
}

struct CvGrid {
  std::vector<double> C{0.1, 1, 10, 100};
  std::vector<double> tau{0.1, 0.5, 0.9};
  std::vector<double> s{0.5, 1, 2};
  std::vector<double> lambda{0.5, 1, 2};
  std::vector<double> eta{1};
  std::vector<double> gamma{0.01, 0.1, 1};
  std::vector<double> degree;
  std::vector<double> coef0;
};

inline CvGrid load_grid(const std::string& path, const ModelOptions& o) {
  CvGrid g;
  g.degree = {static_cast<double>(o.degree)};
  g.coef0 = {o.coef0};
  if (path.empty()) return g;
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed grid file: ") + e.what(), 0);
  }
  if (!j.is_object()) throw ParseError("grid file must be a JSON object", 0);
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::vector<double>* slot = nullptr;
    if (it.key() == "C") slot = &g.C;
    else if (it.key() == "tau") slot = &g.tau;
    else if (it.key() == "s") slot = &g.s;
    else if (it.key() == "lambda") slot = &g.lambda;
    else if (it.key() == "eta") slot = &g.eta;
    else if (it.key() == "gamma") slot = &g.gamma;
    else if (it.key() == "degree") slot = &g.degree;
    else if (it.key() == "coef0") slot = &g.coef0;
    else throw ParseError("unknown grid key '" + it.key() + "'", 0);
    if (!it.value().is_array() || it.value().empty())
      throw ParseError("grid key '" + it.key() + "' needs a non-empty array", 0);
    *slot = it.value().get<std::vector<double>>();
  }
  return g;
}

struct CvCell {
  double C, tau, s, lambda, eta, gamma, degree, coef0;
};

/// Cartesian product over the axes the chosen loss and kernel actually use;
/// unused axes are pinned to the flag values.
inline std::vector<CvCell> expand_grid(const CvGrid& g, LossKind kind, KernelKind kernel,
                                       const ModelOptions& o) {
  auto axis = [](bool used, const std::vector<double>& values, double pinned) {
    return used ? values : std::vector<double>{pinned};
  };
  const bool rhp = kind == LossKind::RescaledHP;
  const auto Cs = g.C;
  const auto taus = axis(kind != LossKind::Hinge, g.tau, o.tau);
  const auto ss = axis(kind == LossKind::HuberizedPinball || rhp, g.s, o.s);
  const auto lambdas = axis(rhp, g.lambda, o.lambda);
  const auto etas = axis(rhp, g.eta, o.eta);
  const auto gammas = axis(kernel == KernelKind::Rbf, g.gamma, o.gamma);
  const auto degrees = axis(kernel == KernelKind::Polynomial, g.degree, o.degree);
  const auto coef0s = axis(kernel == KernelKind::Polynomial, g.coef0, o.coef0);
  std::vector<CvCell> cells;
  for (double C : Cs)
    for (double tau : taus)
      for (double s : ss)
        for (double lambda : lambdas)
          for (double eta : etas)
            for (double gamma : gammas)
              for (double degree : degrees)
                for (double coef0 : coef0s) cells.push_back({C, tau, s, lambda, eta, gamma, degree, coef0});
  return cells;
}

inline Dataset bench_data(const DataOptions& d, const SynthOptions& so, std::uint64_t seed) {
  if (!d.path.empty()) return load_data(d);
  return synth_two_gaussians(so.n, so.d, so.separation, so.sigma, seed);
}

inline Json synth_json(const SynthOptions& so) {
  return {{"synth_n", so.n}, {"synth_d", so.d}, {"separation", so.separation}, {"sigma", so.sigma}};
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rescaled Huberized pinball loss SVM: training, prediction and benchmarks", "rhpsvm"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags win");
  app.allow_config_extras(false);

  std::uint64_t seed = 0;
  DataOptions data;
  ModelOptions model;
  SynthOptions synth;
  std::string out_path, model_path, metrics_path, grid_path, report_path;
  std::size_t folds = 5, repeats = 5, resamples = 10;
  std::vector<double> rates{0.0, 0.1, 0.2, 0.3};
  double test_fraction = 0.3, distance = 100.0, zeta = 0.05, gamma_scale = 1.0;
  double umin = -3.0, umax = 3.0, step = 0.1;

  auto* train = app.add_subcommand("train", "Train a model");
  add_data_options(train, data, true);
  add_model_options(train, model);
  train->add_flag("--standardize", data.standardize, "Standardize features (stored in the model)");
  train->add_option("--out", out_path, "Model output file")->required();
  train->add_option("--seed", seed, "Seed");

  auto* predict = app.add_subcommand("predict", "Score a data file with a trained model");
  predict->add_option("--model", model_path, "Model file")->required();
  add_data_options(predict, data, true);
  predict->add_option("--out", out_path, "Prediction CSV (index,decision,prediction)")->required();
  predict->add_option("--metrics", metrics_path, "Also write the metrics CSV here");

  auto* cv = app.add_subcommand("cv", "Stratified k-fold grid search");
  add_data_options(cv, data, true);
  add_model_options(cv, model);
  cv->add_flag("--standardize", data.standardize, "Standardize features inside each fold");
  cv->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 1000));
  cv->add_option("--grid", grid_path, "JSON grid file {\"C\": [...], \"tau\": [...], ...}");
  cv->add_option("--out", out_path, "Table output (default: stdout)");
  cv->add_option("--seed", seed, "Seed");

  auto* curve = app.add_subcommand("losscurve", "Tabulate a loss and its derivative");
  curve->add_option("--loss", model.loss, "Loss")->check(CLI::IsMember({"rhp", "hp", "pinball", "hinge"}));
  curve->add_option("--eta", model.eta, "Loss ceiling eta");
  curve->add_option("--lambda", model.lambda, "Rescaling bandwidth lambda");
  curve->add_option("--s", model.s, "Huberization width s");
  curve->add_option("--tau", model.tau, "Quantile parameter tau");
  curve->add_option("--umin", umin, "Grid start");
  curve->add_option("--umax", umax, "Grid end (inclusive)");
  curve->add_option("--step", step, "Grid step");
  curve->add_option("--out", out_path, "CSV output (default: stdout)");

  auto* bench = app.add_subcommand("bench", "Robustness and stability experiments");
  bench->require_subcommand(1);
  auto add_bench_common = [&](CLI::App* sub) {
    add_data_options(sub, data, false);
    add_model_options(sub, model, false);
    add_synth_options(sub, synth);
    sub->add_flag("--standardize", data.standardize, "Standardize features before training");
    sub->add_option("--seed", seed, "Seed");
    sub->add_option("--out", out_path, "CSV output (default: stdout)");
    sub->add_option("--report", report_path, "Structured JSON report");
  };
  auto* noise = bench->add_subcommand("noise", "Accuracy under training label noise");
  add_bench_common(noise);
  noise->add_option("--rates", rates, "Comma-separated noise rates")->delimiter(',');
  noise->add_option("--repeats", repeats, "Repeats per rate")->check(CLI::PositiveNumber);
  noise->add_option("--test-fraction", test_fraction, "Held-out fraction");
  auto* stability = bench->add_subcommand("stability", "Bootstrap resampling stability");
  add_bench_common(stability);
  stability->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::Range(2, 100000));
  stability->add_option("--test-fraction", test_fraction, "Held-out fraction");
  auto* outlier = bench->add_subcommand("outlier", "Weight rotation caused by one far mislabeled point");
  add_bench_common(outlier);
  outlier->add_option("--distance", distance, "Outlier distance from the origin");

  auto* bound = app.add_subcommand("bound", "Generalization bound of a trained model");
  bound->add_option("--model", model_path, "Model file")->required();
  add_data_options(bound, data, true);
  bound->add_option("--zeta", zeta, "Confidence level (bound holds w.p. 1 - zeta)")->required();
  bound->add_option("--gamma-scale", gamma_scale, "Scale gamma of the bound");
  bound->add_option("--out", out_path, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*train) {
      check_data_flags(train, data);
      const FitConfig fc = make_fit(train, model, seed);
      const Dataset ds = load_data(data);
      const TrainedModel m = fit_with(ds, fc, data.standardize);
      write_file(out_path, save(m));
      Json summary{{"model", out_path},
                   {"n_train", m.meta().n_train},
                   {"d", m.meta().d},
                   {"support_vectors", m.coeffs().size()},
                   {"train_accuracy", evaluate(m, ds).accuracy},
                   {"cccp_iterations", m.meta().cccp_iterations},
                   {"final_objective", m.meta().final_objective},
                   {"converged", m.meta().converged},
                   {"config", fit_config_to_json(fc)},
                   {"input", data_json(data)}};
      out << summary.dump(2) << '\n';
    } else if (*predict) {
      check_data_flags(predict, data);
      const TrainedModel m = load(read_file(model_path));
      const Dataset ds = load_data(data);
      const Vector dv = m.decision_values(ds.features());
      std::ostringstream csv;
      csv << "index,decision,prediction\n";
      for (Eigen::Index i = 0; i < dv.size(); ++i)
        csv << i << ',' << format_double(dv(i)) << ',' << (dv(i) >= 0.0 ? "1" : "-1") << '\n';
      write_file(out_path, csv.str());
      const std::string metrics = metrics_csv(evaluate(m, ds));
      if (!metrics_path.empty()) write_file(metrics_path, metrics);
      out << metrics;
    } else if (*cv) {
      check_data_flags(cv, data);
      const FitConfig base = make_fit(cv, model, seed);
      const CvGrid grid = load_grid(grid_path, model);
      const Dataset ds = load_data(data);
      std::ostringstream csv;
      csv << "cell,C,tau,s,lambda,eta,gamma,degree,coef0,mean_accuracy,std_accuracy\n";
      const auto cells = expand_grid(grid, base.kind, base.kernel.kind(), model);
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const CvCell& c = cells[i];
        ModelOptions o = model;
        o.C = c.C, o.tau = c.tau, o.s = c.s, o.lambda = c.lambda, o.eta = c.eta;
        o.gamma = c.gamma, o.degree = static_cast<int>(c.degree), o.coef0 = c.coef0;
        FitConfig fc = base;
        fc.params = make_params(o);
        fc.solver = make_solver(o, seed);
        if (base.kernel.kind() == KernelKind::Rbf) fc.kernel = KernelSpec::rbf(o.gamma);
        if (base.kernel.kind() == KernelKind::Polynomial) fc.kernel = KernelSpec::polynomial(o.degree, o.coef0);
        const CvReport r = cross_validate(ds, fc, folds, seed, data.standardize);
        csv << i << ',' << format_double(c.C) << ',' << format_double(c.tau) << ','
            << format_double(c.s) << ',' << format_double(c.lambda) << ',' << format_double(c.eta)
            << ',' << format_double(c.gamma) << ',' << format_double(c.degree) << ','
            << format_double(c.coef0) << ',' << format_double(r.summary.mean) << ','
            << format_double(r.summary.std) << '\n';
      }
      emit(out_path, csv.str(), out);
    } else if (*curve) {
      const LossParams p = make_params(model);
      const auto rows = loss_table(parse_loss_kind(model.loss), p, umin, umax, step);
      std::ostringstream csv;
      write_loss_csv(csv, rows);
      emit(out_path, csv.str(), out);
    } else if (*bench) {
      CLI::App* sub = *noise ? noise : *stability ? stability : outlier;
      check_data_flags(sub, data);
      if (!data.path.empty() &&
          (sub->count("--synth-n") + sub->count("--synth-d") + sub->count("--separation") +
               sub->count("--sigma") > 0))
        throw CliUsageError("synthetic data flags cannot be combined with --data");
      const FitConfig base = make_fit(sub, model, seed);
      const auto models = comparison_models(base);
      const Dataset ds = bench_data(data, synth, seed);
      Json report{{"command", std::string("bench ") + sub->get_name()},
                  {"seed", seed},
                  {"config", fit_config_to_json(base)},
                  {"input", data.path.empty() ? synth_json(synth) : data_json(data)}};
      std::ostringstream csv;
      if (*noise) {
        for (double r : rates)
          if (!(r >= 0.0 && r <= 0.5)) throw DomainError("--rates entries must lie in [0, 0.5]");
        const auto cells = noise_benchmark(ds, models, rates, repeats, seed, test_fraction, data.standardize);
        csv << "rate,model,mean_accuracy,std_accuracy,repeats\n";
        Json jc = Json::array();
        for (const auto& c : cells) {
          csv << format_double(c.rate) << ',' << c.model << ',' << format_double(c.summary.mean) << ','
              << format_double(c.summary.std) << ',' << c.accuracy.size() << '\n';
          jc.push_back({{"rate", c.rate}, {"model", c.model}, {"accuracy", c.accuracy},
                        {"mean", c.summary.mean}, {"std", c.summary.std}});
        }
        report["repeats"] = repeats;
        report["test_fraction"] = test_fraction;
        report["cells"] = jc;
      } else if (*stability) {
        const Fold split = stratified_holdout(ds, test_fraction, Rng::derive(seed, 2000));
        const Dataset tr = ds.subset(split.train);
        const Dataset te = ds.subset(split.test);
        csv << "model,resample,sub_seed,redraws,accuracy\n";
        Json jm = Json::array();
        for (const auto& m : models) {
          const auto rep = resampling_stability(
              tr, te, [&](const Dataset& d) { return fit_with(d, m.config, data.standardize); },
              resamples, seed);
          for (std::size_t b = 0; b < rep.accuracy.size(); ++b)
            csv << m.name << ',' << b << ',' << rep.seeds[b] << ',' << rep.redraws[b] << ','
                << format_double(rep.accuracy[b]) << '\n';
          jm.push_back({{"model", m.name}, {"accuracy", rep.accuracy}, {"sub_seeds", rep.seeds},
                        {"redraws", rep.redraws}, {"mean", rep.summary.mean}, {"std", rep.summary.std}});
        }
        report["resamples"] = resamples;
        report["test_fraction"] = test_fraction;
        report["models"] = jm;
      } else {
        if (base.kernel.kind() != KernelKind::Linear)
          throw UnsupportedError("bench outlier needs --kernel linear");
        const Dataset train_ds = data.standardize ? standardize(ds).first : ds;
        const auto [x_out, y_out] = far_outlier(train_ds.dim(), distance);
        csv << "model,angle,norm_ratio\n";
        Json jm = Json::array();
        // Pairs (rhp, hp) and (pinball, hinge) share one outlier_shift call each.
        for (std::size_t k = 0; k < models.size(); k += 2) {
          const auto rep = outlier_shift(train_ds, x_out, y_out, models[k].config, models[k + 1].config);
          csv << models[k].name << ',' << format_double(rep.angle_A) << ',' << format_double(rep.norm_ratio_A) << '\n';
          csv << models[k + 1].name << ',' << format_double(rep.angle_B) << ','
              << format_double(rep.norm_ratio_B) << '\n';
          jm.push_back({{"model", models[k].name}, {"angle", rep.angle_A}, {"norm_ratio", rep.norm_ratio_A}});
          jm.push_back({{"model", models[k + 1].name}, {"angle", rep.angle_B}, {"norm_ratio", rep.norm_ratio_B}});
        }
        report["distance"] = distance;
        report["outlier"] = {{"x", std::vector<double>(x_out.data(), x_out.data() + x_out.size())}, {"y", y_out}};
        report["models"] = jm;
      }
      emit(out_path, csv.str(), out);
      if (!report_path.empty()) write_file(report_path, report.dump(2) + "\n");
    } else if (*bound) {
      check_data_flags(bound, data);
      if (!(zeta > 0.0 && zeta < 1.0)) throw DomainError("--zeta must lie in (0, 1)");
      if (!(gamma_scale > 0.0)) throw DomainError("--gamma-scale must be positive");
      const TrainedModel m = load(read_file(model_path));
      const Dataset ds = load_data(data);
      const BoundInputs in = bound_inputs_for(m, ds, gamma_scale, zeta);
      const BoundTerms t = generalization_bound_terms(in);
      std::ostringstream csv;
      csv << "total,empirical,complexity,confidence,sum_loss,n,B_norm,iota,gram_trace,zeta,gamma\n"
          << format_double(t.total) << ',' << format_double(t.empirical) << ','
          << format_double(t.complexity) << ',' << format_double(t.confidence) << ','
          << format_double(in.sum_loss) << ',' << in.n << ',' << format_double(in.B_norm) << ','
          << format_double(in.iota) << ',' << format_double(in.gram_trace) << ','
          << format_double(in.zeta) << ',' << format_double(in.gamma) << '\n';
      emit(out_path, csv.str(), out);
    }
  } catch (const CliUsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const UnsupportedError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace rhpsvm::cli
