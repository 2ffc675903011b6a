#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "rhpsvm_cli.hpp"
#include "test_support.hpp"

using namespace rhpsvm;
using rhpsvm::testing::central_difference;
using rhpsvm::testing::knot_distance;
using rhpsvm::testing::param_grid;
using rhpsvm::testing::rms;
using rhpsvm::testing::u_grid;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "rhpsvm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "%s", e.str().c_str());
  return code;
}

Verdict identities() {
  Stopwatch sw;
  double worst = 0.0;
  for (const auto& p : param_grid())
    for (double u : u_grid()) {
      const double l = huberized_pinball(u, p.s(), p.tau());
      const double r = rescaled_hp(u, p);
      worst = std::max(worst, std::abs(r - p.eta() * (1.0 - std::exp(-l / p.lambda()))));
      worst = std::max(worst, std::abs(g_part(u, p) + h_part(u, p) - r));
      worst = std::max(worst, std::abs(delta_coefficient(u, p) -
                                       (p.scale() * huberized_pinball_deriv(u, p.s(), p.tau()) -
                                        rescaled_hp_deriv(u, p))));
    }
  const double t = sw.seconds();
  return {worst <= 1e-12 && t < 1.0, fmt("max residual %.3g (tol 1e-12), %.3f s (limit 1 s)", worst, t)};
}

Verdict gradients() {
  Stopwatch sw;
  const double h = 1e-5, hk = 1e-7;
  double worst_rel = 0.0, worst_knot = 0.0;
  for (const auto& p : param_grid()) {
    const std::vector<std::function<double(double)>> fs = {
        [&](double u) { return huberized_pinball(u, p.s(), p.tau()); },
        [&](double u) { return rescaled_hp(u, p); },
        [&](double u) { return g_part(u, p); },
        [&](double u) { return h_part(u, p); },
    };
    const std::vector<std::function<double(double)>> ds = {
        [&](double u) { return huberized_pinball_deriv(u, p.s(), p.tau()); },
        [&](double u) { return rescaled_hp_deriv(u, p); },
        [&](double u) { return g_part_deriv(u, p); },
        [&](double u) { return h_part_deriv(u, p); },
    };
    const double scales[] = {1.0, p.scale(), p.scale(), p.scale()};
    for (double u : u_grid()) {
      if (knot_distance(u, p) <= 1e-3) continue;
      for (std::size_t k = 0; k < fs.size(); ++k) {
        const double a = ds[k](u);
        const double fd = central_difference(fs[k], u, h);
        worst_rel = std::max(worst_rel, std::abs(a - fd) / std::max(std::abs(a), scales[k]));
      }
      const double dfd = -central_difference(fs[3], u, h);
      worst_rel = std::max(worst_rel, std::abs(delta_coefficient(u, p) - dfd) / std::max(std::abs(dfd), p.scale()));
    }
    for (double k : {-p.s(), 0.0, p.s()})
      for (const auto& f : fs)
        worst_knot = std::max(worst_knot, std::abs((f(k) - f(k - hk)) / hk - (f(k + hk) - f(k)) / hk));
  }
  const double t = sw.seconds();
  return {worst_rel <= 1e-6 && worst_knot <= 1e-6 && t < 1.0,
          fmt("max rel err %.3g, knot gap %.3g (tol 1e-6), %.3f s (limit 1 s)", worst_rel, worst_knot, t)};
}

Verdict curvature() {
  const double h = 1e-4;
  double worst_g = 0.0, worst_h = 0.0;
  for (const auto& p : param_grid())
    for (double u : u_grid()) {
      if (knot_distance(u, p) <= 1e-3) continue;
      worst_g = std::min(worst_g, g_part(u + h, p) - 2.0 * g_part(u, p) + g_part(u - h, p));
      worst_h = std::max(worst_h, h_part(u + h, p) - 2.0 * h_part(u, p) + h_part(u - h, p));
    }
  return {worst_g >= -1e-8 && worst_h <= 1e-8,
          fmt("min second difference of g %.3g, max of h %.3g (tol 1e-8)", worst_g, worst_h)};
}

Verdict fisher() {
  std::vector<double> z;
  for (int k = 1; k <= 400; ++k) z.push_back(0.05 * k);
  std::size_t passed = 0;
  double worst = -INFINITY, smallest_slope = INFINITY;
  for (const auto& p : param_grid()) {
    const auto rep = fisher_consistency_check(p, z);
    passed += rep.pass && rep.max_violation < 0.0 && std::abs(rep.deriv_at_zero) > 1e-12;
    worst = std::max(worst, rep.max_violation);
    smallest_slope = std::min(smallest_slope, std::abs(rep.deriv_at_zero));
  }
  const std::size_t total = param_grid().size();
  return {passed == total, fmt("%zu/%zu combinations, max violation %.3g, min |slope at 0| %.3g", passed, total,
                               worst, smallest_slope)};
}

Verdict boundedness() {
  // rhp rounds to eta for large |u|; log(eta - rhp) is computed directly
  bool below = true;
  double max_value = 0.0, worst_q = -INFINITY;
  std::vector<double> us;
  for (int k = -60; k <= 60; ++k) us.push_back(std::copysign(std::pow(10.0, std::abs(k) / 10.0), k));
  us.push_back(0.0);
  for (const auto& p : param_grid()) {
    for (double u : us) {
      const double r = rescaled_hp(u, p);
      max_value = std::max(max_value, r / p.eta());
      below = below && r <= p.eta() && std::isfinite(rescaled_hp_log_gap(u, p));
    }
    const double L = lipschitz_bound(p);
    for (double u = -10.0; u < 10.0; u += 1e-3)
      worst_q = std::max(worst_q, std::abs(rescaled_hp(u + 1e-3, p) - rescaled_hp(u, p)) / 1e-3 - L);
    for (double u : us) {
      const double du = std::max(1e-3, std::abs(u) * 1e-3);
      worst_q = std::max(worst_q, std::abs(rescaled_hp(u + du, p) - rescaled_hp(u, p)) / du - L);
    }
  }
  return {below && worst_q <= 1e-9,
          fmt("finite log gap on [-1e6, 1e6], max rhp/eta %.17g (rounded), max quotient - eta/lambda %.3g (tol 1e-9)",
              max_value, worst_q)};
}

Verdict descent() {
  Stopwatch sw;
  bool ok = true;
  double worst_rise = -INFINITY;
  int max_iter = 0;
  for (int i = 1; i <= 10; ++i) {
    const auto inst = rhpsvm::testing::seeded_instance(i);
    const Gram K = gram_matrix(inst.kernel, inst.data.features(), true);
    const CccpResult r = cccp_solve(K, inst.data.labels(), LossParams{}, SolverConfig{});
    for (std::size_t k = 1; k < r.trace.size(); ++k)
      worst_rise = std::max(worst_rise, r.trace[k].objective - r.trace[k - 1].objective);
    max_iter = std::max(max_iter, r.iterations);
    ok = ok && r.converged && r.iterations <= 50;
  }
  const double t = sw.seconds();
  return {ok && worst_rise <= 1e-10 && t < 30.0,
          fmt("max objective rise %.3g (tol 1e-10), max iterations %d (limit 50), %.2f s (limit 30 s)", worst_rise,
              max_iter, t)};
}

Verdict equivalence() {
  double worst = 0.0;
  std::size_t flips = 0, count = 0;
  for (int i = 1; i <= 10; ++i) {
    const auto inst = rhpsvm::testing::seeded_instance(i);
    if (inst.data.size() > 50) continue;
    ++count;
    const Gram K = gram_matrix(inst.kernel, inst.data.features(), true);
    SolverConfig primal, dual;
    primal.inner_method = InnerMethod::PrimalReference;
    dual.inner_method = InnerMethod::DualCD;
    const Vector fp = K.values * cccp_solve(K, inst.data.labels(), LossParams{}, primal).coeffs;
    const Vector fd = K.values * cccp_solve(K, inst.data.labels(), LossParams{}, dual).coeffs;
    worst = std::max(worst, rms(fp, fd));
    for (Eigen::Index k = 0; k < fp.size(); ++k) flips += (fp(k) >= 0.0) != (fd(k) >= 0.0);
  }
  return {count > 0 && worst <= 1e-3 && flips == 0,
          fmt("%zu instances, max RMS %.3g (tol 1e-3), %zu sign differences", count, worst, flips)};
}

Verdict reductions() {
  const Dataset d = synth_two_gaussians(60, 2, 2.0, 1.0, 3);
  const Gram K = gram_matrix(KernelSpec::rbf(0.5), d.features(), true);
  const Labels& y = d.labels();
  SolverConfig cfg;
  cfg.outer_tol = 1e-6;
  const LossParams big(1e4, 1e4, 1.0, 0.5);
  const Vector f_rhp = K.values * cccp_solve(K, y, big, cfg).coeffs;
  const Vector f_hp = K.values * baseline_solve(LossKind::HuberizedPinball, K, y, big, cfg);
  const LossParams thin(1.0, 1.0, 1e-4, 0.5);
  const Vector f_hp_thin = K.values * baseline_solve(LossKind::HuberizedPinball, K, y, thin, cfg);
  const Vector f_pin = K.values * baseline_solve(LossKind::Pinball, K, y, thin, cfg);
  const double a_max = (f_rhp - f_hp).cwiseAbs().maxCoeff(), a_rms = rms(f_rhp, f_hp);
  const double b_max = (f_hp_thin - f_pin).cwiseAbs().maxCoeff(), b_rms = rms(f_hp_thin, f_pin);
  return {a_max <= 1e-3 && b_max <= 1e-3,
          fmt("(a) max |diff| %.3g, RMS %.3g; (b) max |diff| %.3g, RMS %.3g (tol 1e-3 on max)", a_max, a_rms, b_max,
              b_rms)};
}

Verdict robustness() {
  const Dataset d = synth_two_gaussians(200, 2, 2.0, 0.5, 42);
  const auto [x, y] = far_outlier(2, 100.0);
  FitConfig rhp, hp;
  rhp.kind = LossKind::RescaledHP;
  hp.kind = LossKind::HuberizedPinball;
  rhp.kernel = hp.kernel = KernelSpec::linear();
  rhp.solver.C = hp.solver.C = 1.0;
  const OutlierReport a = outlier_shift(d, x, y, rhp, hp);
  const OutlierReport b = outlier_shift(d, x, y, rhp, hp);
  const bool same = a.angle_A == b.angle_A && a.angle_B == b.angle_B;
  return {same && a.angle_A <= a.angle_B,
          fmt("angle RHP %.6g rad, angle HP %.6g rad, norm ratios %.4g / %.4g, repeat identical: %s", a.angle_A,
              a.angle_B, a.norm_ratio_A, a.norm_ratio_B, same ? "yes" : "no")};
}

Verdict bound() {
  BoundInputs b;
  b.sum_loss = 0.4;
  b.n = 4;
  b.gamma = 1.0;
  b.B_norm = 1.0;
  b.iota = 1.0;
  b.gram_trace = 4.0;
  b.zeta = 0.05;
  const BoundTerms t = generalization_bound_terms(b);
  bool mono = true;
  auto probe = [&](auto mutate, auto expect) {
    BoundInputs m = b;
    mutate(m);
    const BoundTerms u = generalization_bound_terms(m);
    mono = mono && expect(u) && u.empirical + u.complexity + u.confidence == u.total;
  };
  probe([](BoundInputs& m) { m.sum_loss = 0.8; },
        [&](const BoundTerms& u) { return u.empirical > t.empirical && u.complexity == t.complexity; });
  probe([](BoundInputs& m) { m.B_norm = 2.0; }, [&](const BoundTerms& u) { return u.complexity > t.complexity; });
  probe([](BoundInputs& m) { m.iota = 2.0; }, [&](const BoundTerms& u) { return u.complexity > t.complexity; });
  probe([](BoundInputs& m) { m.gram_trace = 8.0; }, [&](const BoundTerms& u) { return u.complexity > t.complexity; });
  probe([](BoundInputs& m) { m.zeta = 0.2; },
        [&](const BoundTerms& u) { return u.confidence < t.confidence && u.complexity == t.complexity; });
  probe([](BoundInputs& m) { m.zeta = 0.01; }, [&](const BoundTerms& u) { return u.confidence > t.confidence; });
  probe(
      [](BoundInputs& m) {
        m.n = 8;
        m.sum_loss = 0.8;
        m.gram_trace = 8.0;
      },
      [&](const BoundTerms& u) { return u.empirical == t.empirical && u.confidence < t.confidence; });
  probe([](BoundInputs& m) { m.gamma = 2.0; },
        [&](const BoundTerms& u) { return u.empirical > t.empirical && u.complexity > t.complexity; });
  const double err = std::abs(t.total - 4.816203);
  return {err <= 1e-6 && mono, fmt("total %.9f (target 4.816203 +- 1e-6), monotonicity probes %s", t.total,
                                   mono ? "hold" : "violated")};
}

Verdict determinism() {
  const auto dir = rhpsvm::testing::scratch_dir("acceptance_determinism");
  const std::string data = (dir / "d.csv").string();
  cli::write_file(data, to_csv(synth_two_gaussians(80, 3, 2.0, 1.0, 6)));
  std::string outs[2][4];
  bool codes = true;
  for (int k = 0; k < 2; ++k) {
    const std::string m = (dir / "m.json").string();
    const std::string p = (dir / "p.csv").string();
    codes = codes && run_cli({"train", "--data", data, "--kernel", "rbf", "--seed", "9", "--out", m}, &outs[k][0]) == 0;
    codes = codes && run_cli({"predict", "--model", m, "--data", data, "--out", p}, &outs[k][1]) == 0;
    codes = codes && run_cli({"bench", "noise", "--data", data, "--rates", "0,0.1", "--repeats", "2", "--seed", "9"},
                             &outs[k][2]) == 0;
    outs[k][3] = cli::read_file(m) + cli::read_file(p);
  }
  bool identical = codes;
  for (int j = 0; j < 4; ++j) identical = identical && outs[0][j] == outs[1][j];

  const Dataset d = synth_two_gaussians(100, 4, 1.0, 1.0, 12);
  double worst = 0.0;
  for (const auto& k : {KernelSpec::linear(), KernelSpec::rbf(0.3), KernelSpec::polynomial(2, 0.5, 0.7)}) {
    FitConfig fc;
    fc.kernel = k;
    const TrainedModel m = fit_standardized(d, fc);
    const TrainedModel back = load(save(m));
    worst = std::max(worst, (m.decision_values(d.features()) - back.decision_values(d.features())).cwiseAbs().maxCoeff());
  }
  bool involution = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const NoiseSpec spec{0.05 * static_cast<double>(s % 11), s};
    involution = involution && inject_label_noise(inject_label_noise(d, spec), spec).labels() == d.labels();
  }
  return {identical && worst <= 1e-15 && involution,
          fmt("repeated CLI outputs identical: %s, save/load max diff %.3g (tol 1e-15), noise involution: %s",
              identical ? "yes" : "no", worst, involution ? "yes" : "no")};
}

Verdict performance() {
  const auto dir = rhpsvm::testing::scratch_dir("acceptance_performance");
  const std::string data = (dir / "d.csv").string();
  cli::write_file(data, to_csv(synth_two_gaussians(500, 20, 2.0, 1.0, 12)));
  Stopwatch sw;
  const std::string m = (dir / "m.json").string();
  const bool ok = run_cli({"train", "--data", data, "--kernel", "rbf", "--gamma", "0.05", "--standardize", "--out", m}) == 0 &&
                  run_cli({"predict", "--model", m, "--data", data, "--out", (dir / "p.csv").string()}) == 0;
  const double t = sw.seconds();
  return {ok && t < 10.0, fmt("train + predict on n=500, d=20 rbf: %.2f s (limit 10 s)", t)};
}

}  // namespace

int main() {
  const std::pair<const char*, Verdict (*)()> criteria[] = {
      {"loss identities", identities},     {"gradient suite", gradients},
      {"curvature of g and h", curvature}, {"Fisher consistency", fisher},
      {"boundedness and Lipschitz", boundedness}, {"CCCP descent", descent},
      {"dual vs primal solver", equivalence},     {"loss reductions", reductions},
      {"outlier robustness", robustness},         {"generalization bound", bound},
      {"determinism and round-trips", determinism}, {"performance", performance},
  };
  int failures = 0;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    Verdict v{false, ""};
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
