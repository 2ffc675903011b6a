#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "rhpsvm_cli.hpp"
#include "test_support.hpp"

using namespace rhpsvm;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rhpsvm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::istringstream in(line);
  for (std::string c; std::getline(in, c, ',');) f.push_back(c);
  return f;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = rhpsvm::testing::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    data_ = path("train.csv");
    cli::write_file(data_, to_csv(synth_two_gaussians(60, 2, 4.0, 0.5, 5)));
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string slurp(const std::string& name) const { return cli::read_file(path(name)); }

  std::filesystem::path dir_;
  std::string data_;
};

}  // namespace

TEST_F(Cli, LossCurveTable) {
  const Outcome o = run_cli({"losscurve", "--umin", "-3", "--umax", "3", "--step", "1"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = lines_of(o.out);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(split(rows[4])[0], "0");
  EXPECT_EQ(split(rows[4])[1], "0");
  EXPECT_EQ(std::stod(split(rows[6])[1]), rescaled_hp(2.0, LossParams{}));
}

TEST_F(Cli, TrainThenPredict) {
  const Outcome t = run_cli({"train", "--data", data_, "--kernel", "rbf", "--gamma", "0.5", "--out", path("m.json")});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto summary = nlohmann::json::parse(t.out);
  EXPECT_EQ(summary.at("train_accuracy"), 1.0);
  EXPECT_EQ(summary.at("config").at("loss"), "rhp");
  const Outcome p = run_cli(
      {"predict", "--model", path("m.json"), "--data", data_, "--out", path("p.csv"), "--metrics", path("m.csv")});
  ASSERT_EQ(p.code, 0) << p.err;
  const auto metrics = lines_of(p.out);
  ASSERT_EQ(metrics.size(), 2u);
  EXPECT_EQ(metrics[0], "accuracy,tp,tn,fp,fn,n");
  EXPECT_EQ(split(metrics[1])[0], "1");
  EXPECT_EQ(slurp("m.csv"), p.out);
  const auto preds = lines_of(slurp("p.csv"));
  EXPECT_EQ(preds.size(), 61u);
  EXPECT_EQ(preds[0], "index,decision,prediction");
  const TrainedModel m = load(slurp("m.json"));
  const Dataset d = parse_csv(cli::read_file(data_));
  for (std::size_t i = 1; i < preds.size(); ++i) {
    const auto f = split(preds[i]);
    const double dv = std::stod(f[1]);
    EXPECT_EQ(dv, m.decision_values(d.features())(static_cast<Eigen::Index>(i - 1)));
    EXPECT_EQ(f[2], dv >= 0.0 ? "1" : "-1");
  }
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  for (int k = 0; k < 2; ++k) {
    const std::string m = path("m" + std::to_string(k) + ".json");
    ASSERT_EQ(run_cli({"train", "--data", data_, "--loss", "pinball", "--seed", "3", "--out", m}).code, 0);
    ASSERT_EQ(run_cli({"predict", "--model", m, "--data", data_, "--out", path("p" + std::to_string(k))}).code, 0);
  }
  EXPECT_EQ(slurp("m0.json"), slurp("m1.json"));
  EXPECT_EQ(slurp("p0"), slurp("p1"));
  const Outcome a = run_cli({"bench", "noise", "--rates", "0,0.2", "--repeats", "2", "--seed", "4"});
  const Outcome b = run_cli({"bench", "noise", "--rates", "0,0.2", "--repeats", "2", "--seed", "4"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", data_}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", data_, "--out", path("m"), "--bogus"}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", data_, "--out", path("m"), "--tau", "1.5"}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", data_, "--out", path("m"), "--gamma", "2"}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", data_, "--out", path("m"), "--kernel", "rbf", "--degree", "2"}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", data_, "--out", path("m"), "--dim", "3"}).code, 1);
  EXPECT_EQ(run_cli({"train", "--data", data_, "--out", path("m"), "--loss", "squared"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "noise", "--data", data_, "--synth-n", "10"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "outlier", "--kernel", "rbf"}).code, 1);
  EXPECT_EQ(run_cli({"bench", "noise", "--rates", "0.7"}).code, 1);
  EXPECT_EQ(run_cli({"bound", "--model", path("m"), "--data", data_}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(Cli, IoErrors) {
  const Outcome o = run_cli({"train", "--data", path("missing.csv"), "--out", path("m")});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("missing.csv"), std::string::npos);
  cli::write_file(path("bad.csv"), "1,2,1\n1,x,-1\n");
  const Outcome b = run_cli({"train", "--data", path("bad.csv"), "--out", path("m")});
  EXPECT_EQ(b.code, 2);
  EXPECT_NE(b.err.find("line 2"), std::string::npos);
  cli::write_file(path("model.json"), "{}");
  EXPECT_EQ(run_cli({"predict", "--model", path("model.json"), "--data", data_, "--out", path("p")}).code, 2);
}

TEST_F(Cli, BoundAddendsSum) {
  ASSERT_EQ(run_cli({"train", "--data", data_, "--kernel", "rbf", "--out", path("m.json")}).code, 0);
  const Outcome o = run_cli({"bound", "--model", path("m.json"), "--data", data_, "--zeta", "0.05"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = lines_of(o.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "total,empirical,complexity,confidence,sum_loss,n,B_norm,iota,gram_trace,zeta,gamma");
  const auto f = split(rows[1]);
  const double total = std::stod(f[0]);
  EXPECT_NEAR(std::stod(f[1]) + std::stod(f[2]) + std::stod(f[3]), total, 1e-12 * total);
  EXPECT_EQ(f[5], "60");
  EXPECT_EQ(std::stod(f[8]), 120.0);
}

TEST_F(Cli, NoiseBenchZeroRateMatchesPlainEvaluation) {
  const Outcome o = run_cli({"bench", "noise", "--data", data_, "--rates", "0", "--repeats", "2", "--seed", "7",
                             "--report", path("r.json")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = lines_of(o.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "rate,model,mean_accuracy,std_accuracy,repeats");
  const Dataset d = parse_csv(cli::read_file(data_));
  FitConfig fc;
  std::vector<double> acc;
  for (std::size_t r = 0; r < 2; ++r) {
    const Fold split = stratified_holdout(d, 0.3, Rng::derive(7, 2 * r));
    acc.push_back(evaluate(fit(d.subset(split.train), fc), d.subset(split.test)).accuracy);
  }
  EXPECT_EQ(split(rows[1])[1], "rhp");
  EXPECT_EQ(std::stod(split(rows[1])[2]), summarize(acc).mean);
  const auto report = nlohmann::json::parse(slurp("r.json"));
  EXPECT_EQ(report.at("command"), "bench noise");
  EXPECT_EQ(report.at("seed"), 7);
  EXPECT_EQ(report.at("cells").size(), 4u);
  EXPECT_TRUE(report.contains("config"));
}

TEST_F(Cli, StabilityAndOutlierBenches) {
  const Outcome s = run_cli({"bench", "stability", "--resamples", "3", "--synth-n", "60", "--seed", "2"});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto rows = lines_of(s.out);
  EXPECT_EQ(rows[0], "model,resample,sub_seed,redraws,accuracy");
  EXPECT_EQ(rows.size(), 13u);
  const Outcome o = run_cli({"bench", "outlier", "--seed", "42"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto orows = lines_of(o.out);
  ASSERT_EQ(orows.size(), 5u);
  EXPECT_EQ(orows[0], "model,angle,norm_ratio");
  const double angle_rhp = std::stod(split(orows[1])[1]);
  const double angle_hp = std::stod(split(orows[2])[1]);
  EXPECT_EQ(split(orows[1])[0], "rhp");
  EXPECT_EQ(split(orows[2])[0], "hp");
  EXPECT_LE(angle_rhp, angle_hp);
}

TEST_F(Cli, CrossValidationGrid) {
  cli::write_file(path("grid.json"), R"({"C": [0.5, 2], "tau": [0.5]})");
  const Outcome o = run_cli({"cv", "--data", data_, "--loss", "pinball", "--grid", path("grid.json"), "--folds", "3"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto rows = lines_of(o.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "cell,C,tau,s,lambda,eta,gamma,degree,coef0,mean_accuracy,std_accuracy");
  EXPECT_EQ(split(rows[1])[1], "0.5");
  EXPECT_EQ(split(rows[2])[1], "2");
  cli::write_file(path("bad.json"), R"({"C": [1], "width": [2]})");
  EXPECT_EQ(run_cli({"cv", "--data", data_, "--grid", path("bad.json")}).code, 2);
}

TEST_F(Cli, ConfigFileWithFlagsWinning) {
  cli::write_file(path("cfg.toml"), "[train]\nloss = \"hinge\"\nC = 5.0\n");
  const Outcome o = run_cli({"--config", path("cfg.toml"), "train", "--data", data_, "--C", "2", "--out", path("m")});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto summary = nlohmann::json::parse(o.out);
  EXPECT_EQ(summary.at("config").at("loss"), "hinge");
  EXPECT_EQ(summary.at("config").at("solver").at("C"), 2.0);
}
