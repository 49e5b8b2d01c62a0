#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "spikecp/datagen.hpp"
#include "spikecp/error.hpp"
#include "spikecp/harness.hpp"
#include "spikecp/model_io.hpp"
#include "support.hpp"

namespace spikecp {
namespace {

using testing::random_network;
using testing::TempDir;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

class HarnessTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    params_ = new NetworkParams(random_network(10, {12, 4}, 24, 5, 1.0));
    data_ = new LabeledDataset(generate(prototype_spec(4, 10, 24, 0.5, 0.1, 0.3, 0.0), 160, 3));
    runner_ = new ExperimentRunner(*params_, *data_, 2);
  }
  static void TearDownTestSuite() {
    delete runner_;
    delete data_;
    delete params_;
  }

  static ExperimentSettings settings() {
    ExperimentSettings s;
    s.n_cal = 60;
    s.trials = 12;
    s.seed = 4;
    s.threads = 2;
    return s;
  }

  static NetworkParams* params_;
  static LabeledDataset* data_;
  static ExperimentRunner* runner_;
};

NetworkParams* HarnessTest::params_ = nullptr;
LabeledDataset* HarnessTest::data_ = nullptr;
ExperimentRunner* HarnessTest::runner_ = nullptr;

TEST(EmpiricalQuantile, LinearInterpolation) {
  std::vector<double> v{4, 1, 3, 2};
  EXPECT_EQ(empirical_quantile(v, 0.0), 1.0);
  EXPECT_EQ(empirical_quantile(v, 1.0), 4.0);
  EXPECT_EQ(empirical_quantile(v, 0.5), 2.5);
  EXPECT_NEAR(empirical_quantile(v, 0.025), 1.075, 1e-12);
  EXPECT_EQ(empirical_quantile({7.0}, 0.975), 7.0);
  EXPECT_THROW(empirical_quantile({}, 0.5), ValueError);
  auto s = summarize(v);
  EXPECT_EQ(s.mean, 2.5);
  EXPECT_LE(s.lo95, s.hi95);
}

TEST_F(HarnessTest, MetricsAreWellFormed) {
  for (auto policy : {Policy::kSpikecpLocal, Policy::kSpikecpGlobal, Policy::kDcsnn}) {
    auto s = settings();
    s.policy = policy;
    const auto r = runner_->run(s);
    ASSERT_EQ(r.trials.size(), 12u);
    ASSERT_EQ(r.inputs.size(), 12u * 100u);
    for (const auto& m : r.trials) {
      EXPECT_EQ(m.reliability_gap, s.p_targ - m.coverage);
      for (double v : {m.coverage, m.normalized_latency, m.normalized_energy, m.normalized_set_size}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
    EXPECT_LE(r.coverage.lo95, r.coverage.mean);
    EXPECT_GE(r.coverage.hi95, r.coverage.mean);
  }
}

TEST_F(HarnessTest, DegenerateCalibrationCoversEverything) {
  auto s = settings();
  s.n_cal = 20;
  s.n_checkpoints = 4;
  s.set_size_threshold = 1;
  const auto r = runner_->run(s);
  EXPECT_EQ(r.coverage.mean, 1.0);
  EXPECT_EQ(r.normalized_set_size.mean, 1.0);
  EXPECT_EQ(r.normalized_latency.mean, 1.0);
  for (const auto& m : r.trials) {
    for (double th : m.thresholds) EXPECT_TRUE(std::isinf(th));
  }
}

TEST(Harness, SingleTrialSingleTestPoint) {
  auto params = random_network(5, {3}, 8, 1);
  auto data = generate(prototype_spec(3, 5, 8, 0.5, 0.1, 0.3, 0.0), 21, 1);
  ExperimentRunner runner(params, data, 1);
  ExperimentSettings s;
  s.n_cal = 20;
  s.trials = 1;
  const auto r = runner.run(s);
  ASSERT_EQ(r.inputs.size(), 1u);
  EXPECT_EQ(r.coverage.mean, 1.0);
  EXPECT_EQ(r.reliability_gap.mean, s.p_targ - 1.0);
  EXPECT_LT(r.reliability_gap.mean, 0.0);
  EXPECT_EQ(r.normalized_energy.mean, 0.0);  // no hidden layer
}

TEST_F(HarnessTest, AggregatesRecomputeFromPerInputCsv) {
  for (auto policy : {Policy::kSpikecpGlobal, Policy::kDcsnn}) {
    auto s = settings();
    s.policy = policy;
    const auto r = runner_->run(s);
    std::stringstream csv;
    write_per_input_csv(csv, r);
    std::string line;
    std::getline(csv, line);
    struct Acc {
      double n = 0, covered = 0, latency = 0, energy = 0, size = 0;
    };
    std::map<int, Acc> acc;
    while (std::getline(csv, line)) {
      const auto f = split(line, ',');
      ASSERT_EQ(f.size(), 8u) << line;
      auto& a = acc[std::stoi(f[0])];
      a.n += 1;
      a.latency += std::stod(f[3]);
      a.size += std::stod(f[4]);
      EXPECT_EQ(f[4] == "0" ? 0u : split(f[5], ';').size(), std::stoul(f[4]));
      a.covered += std::stod(f[6]);
      a.energy += std::stod(f[7]);
    }
    const double T = 24, C = 4, H = 12;
    double cov_sum = 0, lat_sum = 0, en_sum = 0, size_sum = 0;
    for (const auto& m : r.trials) {
      const auto& a = acc.at(m.trial);
      EXPECT_EQ(m.coverage, a.covered / a.n);
      EXPECT_EQ(m.normalized_latency, a.latency / a.n / T);
      EXPECT_EQ(m.normalized_energy, a.energy / a.n / (H * T));
      EXPECT_EQ(m.normalized_set_size, a.size / a.n / C);
      cov_sum += a.covered / a.n;
      lat_sum += a.latency / a.n / T;
      en_sum += a.energy / a.n / (H * T);
      size_sum += a.size / a.n / C;
    }
    const double R = static_cast<double>(r.trials.size());
    EXPECT_EQ(r.coverage.mean, cov_sum / R);
    EXPECT_EQ(r.normalized_latency.mean, lat_sum / R);
    EXPECT_EQ(r.normalized_energy.mean, en_sum / R);
    EXPECT_EQ(r.normalized_set_size.mean, size_sum / R);
  }
}

TEST_F(HarnessTest, DeterministicAcrossThreadCounts) {
  auto s = settings();
  auto csv = [&](int threads) {
    s.threads = threads;
    const auto r = runner_->run(s);
    std::ostringstream os;
    write_report_csv(os, r);
    write_per_trial_csv(os, r);
    write_per_input_csv(os, r);
    return os.str();
  };
  const auto a = csv(1);
  EXPECT_EQ(a, csv(1));
  EXPECT_EQ(a, csv(3));
  s.seed = 5;
  EXPECT_NE(a, csv(1));
}

TEST_F(HarnessTest, SweepOverTargetSize) {
  auto s = settings();
  s.n_checkpoints = 6;
  std::vector<double> values{0, 1, 2, 3, 4};
  const auto reports = sweep(*runner_, s, SweepParameter::kSetSizeThreshold, values);
  ASSERT_EQ(reports.size(), 5u);
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_EQ(reports[i].settings.set_size_threshold, static_cast<int>(i));
    EXPECT_LE(reports[i].normalized_latency.mean, reports[i - 1].normalized_latency.mean);
    EXPECT_LE(reports[i].normalized_energy.mean, reports[i - 1].normalized_energy.mean);
  }
  std::ostringstream os;
  write_sweep_csv(os, SweepParameter::kSetSizeThreshold, values, reports);
  EXPECT_EQ(split(os.str(), '\n').size(), 1u + 5u + 1u);
  EXPECT_EQ(os.str().rfind("parameter,value,policy,", 0), 0u);

  EXPECT_TRUE(sweep(*runner_, s, SweepParameter::kPTarg, {}).empty());
  EXPECT_THROW(sweep(*runner_, s, SweepParameter::kCalibrationSize, {10.5}), ValueError);
  EXPECT_THROW(sweep(*runner_, s, SweepParameter::kCalibrationSize, {160}), ValueError);
}

TEST(SweepParameter, Names) {
  EXPECT_EQ(sweep_parameter_from_string("p_targ"), SweepParameter::kPTarg);
  EXPECT_EQ(sweep_parameter_from_string("I_th"), SweepParameter::kSetSizeThreshold);
  EXPECT_EQ(sweep_parameter_from_string("n_checkpoints"), SweepParameter::kCheckpointCount);
  EXPECT_EQ(sweep_parameter_from_string("n_cal"), SweepParameter::kCalibrationSize);
  EXPECT_THROW(sweep_parameter_from_string("temperature"), ValueError);
}

TEST_F(HarnessTest, RejectsBadSettingsBeforeRunning) {
  auto s = settings();
  s.p_targ = 1.0;
  EXPECT_THROW(runner_->run(s), ValueError);
  s = settings();
  s.trials = 0;
  EXPECT_THROW(runner_->run(s), ValueError);
  s = settings();
  s.n_cal = 160;
  EXPECT_THROW(runner_->run(s), ValueError);
  s = settings();
  s.set_size_threshold = 5;
  EXPECT_THROW(runner_->run(s), ValueError);
  s = settings();
  s.checkpoint_list = {10, 20};
  EXPECT_THROW(runner_->run(s), ValueError);

  auto other = random_network(9, {4}, 24, 1);
  EXPECT_THROW(ExperimentRunner(other, *data_, 1), ShapeError);
}

TEST(ExperimentConfig, ParsesAllKeys) {
  std::istringstream is(
      "# comment\n"
      "model = m.txt\n"
      "dataset = /abs/d.txt   # trailing comment\n"
      "policy = spikecp-local\n"
      "p_targ = 0.8\n"
      "i_th = 2\n"
      "checkpoint_list = 10, 20, 40\n"
      "n_cal = 50\n"
      "trials = 7\n"
      "seed = 11\n"
      "threads = 3\n"
      "dcsnn_grid = 0.5, 0.9\n");
  const auto cfg = parse_experiment_config(is, "exp.cfg", "/base");
  EXPECT_EQ(cfg.model_path, "/base/m.txt");
  EXPECT_EQ(cfg.dataset_path, "/abs/d.txt");
  EXPECT_EQ(cfg.settings.policy, Policy::kSpikecpLocal);
  EXPECT_EQ(cfg.settings.p_targ, 0.8);
  EXPECT_EQ(cfg.settings.set_size_threshold, 2);
  EXPECT_EQ(cfg.settings.checkpoint_list, (std::vector<int>{10, 20, 40}));
  EXPECT_EQ(cfg.settings.n_cal, 50u);
  EXPECT_EQ(cfg.settings.trials, 7);
  EXPECT_EQ(cfg.settings.seed, 11u);
  EXPECT_EQ(cfg.settings.threads, 3);
  EXPECT_EQ(cfg.settings.dcsnn_grid, (std::vector<double>{0.5, 0.9}));
}

TEST(ExperimentConfig, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return parse_experiment_config(is, "exp.cfg");
  };
  try {
    parse("model = m\ndataset = d\nbogus = 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "bogus");
  }
  EXPECT_THROW(parse("dataset = d\n"), ParseError);
  EXPECT_THROW(parse("model = m\n"), ParseError);
  EXPECT_THROW(parse("model = m\nspec = s\n"), ParseError);
  EXPECT_THROW(parse("model = m\ndataset = d\ntrials = many\n"), ParseError);
  EXPECT_THROW(parse("model = m\ndataset = d\npolicy = oracle\n"), ParseError);
  EXPECT_THROW(parse("model = m\ndataset d\n"), ParseError);
  EXPECT_THROW(load_experiment_config("/nonexistent/exp.cfg"), IoError);
}

TEST(RunExperiment, FromFilesAndFromSpec) {
  TempDir dir("harness");
  auto params = random_network(6, {5, 3}, 12, 2);
  save_model(dir.file("m.txt"), params);
  const auto spec = prototype_spec(3, 6, 12, 0.6, 0.1, 0.3, 0.0);
  save_spec(dir.file("s.txt"), spec);
  save_dataset(dir.file("d.txt"), generate(spec, 80, 6));
  {
    std::ofstream os(dir.file("a.cfg"));
    os << "model = m.txt\ndataset = d.txt\nn_cal = 30\ntrials = 3\n";
    std::ofstream os2(dir.file("b.cfg"));
    os2 << "model = m.txt\nspec = s.txt\nitems = 80\ndata_seed = 6\nn_cal = 30\ntrials = 3\n";
  }
  auto a = run_experiment(load_experiment_config(dir.file("a.cfg")));
  auto b = run_experiment(load_experiment_config(dir.file("b.cfg")));
  std::ostringstream sa, sb;
  write_per_input_csv(sa, a);
  write_per_input_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());

  write_reports(dir.file("out"), a);
  for (const char* f : {"report.csv", "per_trial.csv", "per_input.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / f)) << f;
  }

  {
    std::ofstream os(dir.file("c.cfg"));
    os << "model = missing.txt\ndataset = d.txt\n";
  }
  try {
    run_experiment(load_experiment_config(dir.file("c.cfg")));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.txt"), std::string::npos);
  }
}

}  // namespace
}  // namespace spikecp
