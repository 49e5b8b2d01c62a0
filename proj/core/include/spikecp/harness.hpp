#pragma once

// Repeated calibration/test resplits of a fixed model and dataset, with
// per-input, per-trial and aggregate metrics written as CSV.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "spikecp/adaptive.hpp"
#include "spikecp/datagen.hpp"
#include "spikecp/snn.hpp"

namespace spikecp {

enum class Policy { kSpikecpLocal, kSpikecpGlobal, kDcsnn };

const char* to_string(Policy policy);
Policy policy_from_string(std::string_view name);

struct ExperimentSettings {
  Policy policy = Policy::kSpikecpGlobal;
  double p_targ = 0.9;
  int set_size_threshold = 3;        ///< I_th
  int n_checkpoints = 4;             ///< equally spaced, used when checkpoint_list is empty
  std::vector<int> checkpoint_list;  ///< explicit checkpoints (must end at T)
  std::size_t n_cal = 200;
  int trials = 50;
  std::uint64_t seed = 1;
  std::vector<double> dcsnn_grid;  ///< empty means default_dcsnn_grid()
  int threads = 0;                 ///< 0: SPIKECP_THREADS or hardware concurrency

  CheckpointSet checkpoints(int steps) const;
};

/// Default worker count: $SPIKECP_THREADS if set to a positive integer, else
/// the hardware concurrency (at least 1).
int default_thread_count();

struct InputRecord {
  int trial = 0;
  std::size_t input_id = 0;  ///< index into the dataset
  int stop_time = 0;
  std::vector<int> set;  ///< predicted set, or {label} for point decisions
  bool covered = false;
  std::int64_t energy = 0;
};

struct TrialMetrics {
  int trial = 0;
  std::size_t n_test = 0;
  double coverage = 0.0;  ///< Pr(c in set) or Pr(c = point) on the test split
  double reliability_gap = 0.0;
  double normalized_latency = 0.0;
  double normalized_energy = 0.0;
  double normalized_set_size = 0.0;
  double alpha = 0.0;                  ///< SpikeCP per-checkpoint level
  std::vector<double> thresholds;      ///< SpikeCP thresholds, or {p_th} for DC-SNN
};

struct Summary {
  double mean = 0.0;
  double lo95 = 0.0;  ///< empirical 2.5% quantile across trials
  double hi95 = 0.0;  ///< empirical 97.5% quantile across trials
};

struct MetricsReport {
  ExperimentSettings settings;
  std::vector<int> checkpoints;
  int n_classes = 0;
  int steps = 0;
  int hidden_neurons = 0;
  std::vector<TrialMetrics> trials;
  std::vector<InputRecord> inputs;  ///< trial-major, test-split order
  Summary coverage;
  Summary reliability_gap;
  Summary normalized_latency;
  Summary normalized_energy;
  Summary normalized_set_size;
};

/// Linear-interpolation (type 7) empirical quantile; q in [0, 1].
double empirical_quantile(std::vector<double> values, double q);

Summary summarize(const std::vector<double>& values);

/// Holds a model, a dataset and the full-length trace of every item, so that
/// repeated trials and sweeps never re-simulate.
class ExperimentRunner {
 public:
  ExperimentRunner(NetworkParams params, LabeledDataset data, int threads = 0);

  MetricsReport run(const ExperimentSettings& settings) const;

  const NetworkParams& params() const noexcept { return params_; }
  const LabeledDataset& data() const noexcept { return data_; }
  const std::vector<RunTrace>& traces() const noexcept { return traces_; }

 private:
  void validate(const ExperimentSettings& settings) const;

  NetworkParams params_;
  LabeledDataset data_;
  std::vector<RunTrace> traces_;
  std::vector<int> labels_;
};

/// Experiment file: model, data (dataset file or synthetic spec) and settings.
struct ExperimentConfig {
  std::string model_path;
  std::string dataset_path;
  std::string spec_path;  ///< used when dataset_path is empty
  std::size_t spec_items = 0;
  std::uint64_t data_seed = 0;
  ExperimentSettings settings;
};

/// Parses "key = value" lines; '#' comments. Relative paths are resolved
/// against the directory of the config file.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(std::istream& is, const std::string& name,
                                         const std::string& base_dir = "");

/// Loads the model and the dataset (or generates it from the spec).
ExperimentRunner make_runner(const ExperimentConfig& cfg);

/// Loads model and data, validates everything, then runs all trials.
MetricsReport run_experiment(const ExperimentConfig& cfg);

enum class SweepParameter { kPTarg, kSetSizeThreshold, kCheckpointCount, kCalibrationSize };

SweepParameter sweep_parameter_from_string(std::string_view name);
const char* to_string(SweepParameter parameter);

/// One report per value, all from the same base settings and seed.
std::vector<MetricsReport> sweep(const ExperimentRunner& runner, const ExperimentSettings& base,
                                 SweepParameter parameter, const std::vector<double>& values);

void write_report_csv(std::ostream& os, const MetricsReport& report);
void write_per_trial_csv(std::ostream& os, const MetricsReport& report);
void write_per_input_csv(std::ostream& os, const MetricsReport& report);

/// report.csv, per_trial.csv and per_input.csv in `dir` (created if missing).
void write_reports(const std::string& dir, const MetricsReport& report);

/// One row per swept value with the aggregate metrics.
void write_sweep_csv(std::ostream& os, SweepParameter parameter, const std::vector<double>& values,
                     const std::vector<MetricsReport>& reports);

}  // namespace spikecp
