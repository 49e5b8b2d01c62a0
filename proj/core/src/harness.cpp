#include "spikecp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "spikecp/error.hpp"
#include "spikecp/model_io.hpp"
#include "spikecp/rng.hpp"
#include "text_io.hpp"

namespace spikecp {

using detail::format_double;

const char* to_string(Policy policy) {
  switch (policy) {
    case Policy::kSpikecpLocal: return "spikecp-local";
    case Policy::kSpikecpGlobal: return "spikecp-global";
    case Policy::kDcsnn: return "dcsnn";
  }
  return "?";
}

Policy policy_from_string(std::string_view name) {
  if (name == "spikecp-local") return Policy::kSpikecpLocal;
  if (name == "spikecp-global") return Policy::kSpikecpGlobal;
  if (name == "dcsnn") return Policy::kDcsnn;
  throw ValueError("unknown policy '" + std::string(name) +
                   "' (expected spikecp-local, spikecp-global or dcsnn)");
}

CheckpointSet ExperimentSettings::checkpoints(int steps) const {
  if (!checkpoint_list.empty()) return CheckpointSet(checkpoint_list, steps);
  return CheckpointSet::equally_spaced(steps, n_checkpoints);
}

int default_thread_count() {
  if (const char* env = std::getenv("SPIKECP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValueError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValueError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
  return {mean_of(values), empirical_quantile(values, 0.025), empirical_quantile(values, 0.975)};
}

ExperimentRunner::ExperimentRunner(NetworkParams params, LabeledDataset data, int threads)
    : params_(std::move(params)), data_(std::move(data)) {
  params_.validate();
  data_.validate();
  if (data_.n_input != params_.n_input || data_.steps != params_.steps ||
      data_.n_classes != params_.n_classes) {
    throw ShapeError("dataset is " + std::to_string(data_.n_classes) + " classes x " +
                     std::to_string(data_.n_input) + " inputs x " + std::to_string(data_.steps) +
                     " steps, model expects " + std::to_string(params_.n_classes) + " x " +
                     std::to_string(params_.n_input) + " x " + std::to_string(params_.steps));
  }
  labels_ = data_.labels();
  traces_.resize(data_.size());
  parallel_for(data_.size(), threads > 0 ? threads : default_thread_count(),
               [&](std::size_t i) { traces_[i] = run_full(params_, data_.items[i].input); });
}

void ExperimentRunner::validate(const ExperimentSettings& s) const {
  if (!(s.p_targ > 0.0 && s.p_targ < 1.0)) throw ValueError("p_targ must lie in (0, 1)");
  if (s.trials < 1) throw ValueError("trials must be >= 1");
  if (s.n_cal < 1 || s.n_cal >= data_.size()) {
    throw ValueError("n_cal = " + std::to_string(s.n_cal) + " must lie in 1.." +
                     std::to_string(data_.size() - 1) + " for a dataset of " +
                     std::to_string(data_.size()) + " items");
  }
  if (s.policy != Policy::kDcsnn) {
    if (s.set_size_threshold < 0 || s.set_size_threshold > params_.n_classes) {
      throw ValueError("I_th must lie in 0..C");
    }
    (void)s.checkpoints(params_.steps);
  }
}

MetricsReport ExperimentRunner::run(const ExperimentSettings& settings) const {
  validate(settings);
  const int T = params_.steps;
  const int C = params_.n_classes;
  const int H = params_.hidden_neuron_count();
  const bool is_set = settings.policy != Policy::kDcsnn;
  const NcScoreKind kind =
      settings.policy == Policy::kSpikecpLocal ? NcScoreKind::kLocal : NcScoreKind::kGlobal;
  const std::vector<double> grid =
      settings.dcsnn_grid.empty() ? default_dcsnn_grid() : settings.dcsnn_grid;

  MetricsReport report;
  report.settings = settings;
  report.n_classes = C;
  report.steps = T;
  report.hidden_neurons = H;
  std::optional<CheckpointSet> checkpoints;
  if (is_set) {
    checkpoints = settings.checkpoints(T);
    report.checkpoints.assign(checkpoints->times().begin(), checkpoints->times().end());
  }

  const auto n_trials = static_cast<std::size_t>(settings.trials);
  std::vector<TrialMetrics> trial_metrics(n_trials);
  std::vector<std::vector<InputRecord>> trial_inputs(n_trials);

  parallel_for(n_trials, settings.threads > 0 ? settings.threads : default_thread_count(),
               [&](std::size_t r) {
    const auto split = split_indices(data_.size(), settings.n_cal,
                                     derive_seed(settings.seed, static_cast<std::uint64_t>(r)));
    std::vector<const RunTrace*> cal_traces;
    std::vector<int> cal_labels;
    for (auto i : split.cal) {
      cal_traces.push_back(&traces_[i]);
      cal_labels.push_back(labels_[i]);
    }

    TrialMetrics& m = trial_metrics[r];
    m.trial = static_cast<int>(r);
    m.n_test = split.test.size();
    ThresholdSchedule schedule;
    double p_th = 0.0;
    if (is_set) {
      schedule = calibrate_spikecp(calibration_scores(cal_traces, cal_labels, *checkpoints, kind),
                                   settings.p_targ);
      m.alpha = schedule.alpha;
      m.thresholds = schedule.thresholds;
    } else {
      p_th = dcsnn_calibrate(cal_traces, cal_labels, settings.p_targ, grid);
      m.thresholds = {p_th};
    }

    auto& records = trial_inputs[r];
    records.reserve(split.test.size());
    double covered = 0.0, latency = 0.0, energy = 0.0, set_size = 0.0;
    for (auto i : split.test) {
      const AdaptiveDecision d =
          is_set ? spikecp_decide(traces_[i], schedule, kind, settings.set_size_threshold,
                                  *checkpoints)
                 : dcsnn_decide(traces_[i], p_th);
      InputRecord rec;
      rec.trial = static_cast<int>(r);
      rec.input_id = i;
      rec.stop_time = d.stop_time;
      rec.set = is_set ? d.set : std::vector<int>{d.point};
      rec.covered = d.covers(labels_[i]);
      rec.energy = d.energy;
      covered += rec.covered ? 1.0 : 0.0;
      latency += rec.stop_time;
      energy += static_cast<double>(rec.energy);
      set_size += static_cast<double>(rec.set.size());
      records.push_back(std::move(rec));
    }
    const auto n = static_cast<double>(m.n_test);
    m.coverage = covered / n;
    m.reliability_gap = settings.p_targ - m.coverage;
    m.normalized_latency = latency / n / T;
    m.normalized_energy = H > 0 ? energy / n / (static_cast<double>(H) * T) : 0.0;
    m.normalized_set_size = set_size / n / C;
  });

  report.trials = std::move(trial_metrics);
  for (auto& recs : trial_inputs) {
    report.inputs.insert(report.inputs.end(), std::make_move_iterator(recs.begin()),
                         std::make_move_iterator(recs.end()));
  }
  auto collect = [&](double TrialMetrics::*field) {
    std::vector<double> v;
    v.reserve(report.trials.size());
    for (const auto& m : report.trials) v.push_back(m.*field);
    return summarize(v);
  };
  report.coverage = collect(&TrialMetrics::coverage);
  report.reliability_gap = collect(&TrialMetrics::reliability_gap);
  report.normalized_latency = collect(&TrialMetrics::normalized_latency);
  report.normalized_energy = collect(&TrialMetrics::normalized_energy);
  report.normalized_set_size = collect(&TrialMetrics::normalized_set_size);
  return report;
}

// ---------------------------------------------------------------------------
// Config files

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_dir) / path).string();
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& is, const std::string& name,
                                         const std::string& base_dir) {
  ExperimentConfig cfg;
  auto& s = cfg.settings;
  std::string line;
  std::size_t line_no = 0;
  detail::LineReader conv(is, name);  // number parsing only
  auto fail = [&](const std::string& field, const std::string& what) {
    throw ParseError(name, line_no, field, what);
  };
  auto to_int = [&](const std::string& key, const std::string& v) {
    try {
      return conv.to_int(v, key);
    } catch (const ParseError& e) {
      fail(key, "expected an integer, found '" + v + "'");
    }
    return 0;
  };
  auto to_u64 = [&](const std::string& key, const std::string& v) {
    try {
      return conv.to_uint64(v, key);
    } catch (const ParseError& e) {
      fail(key, "expected an unsigned integer, found '" + v + "'");
    }
    return std::uint64_t{0};
  };
  auto to_double = [&](const std::string& key, const std::string& v) {
    try {
      return conv.to_double(v, key);
    } catch (const ParseError& e) {
      fail(key, "expected a number, found '" + v + "'");
    }
    return 0.0;
  };

  while (std::getline(is, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const std::string body = trim(view);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("line", "expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (value.empty()) fail(key, "missing value");

    if (key == "model") {
      cfg.model_path = resolve(base_dir, value);
    } else if (key == "dataset") {
      cfg.dataset_path = resolve(base_dir, value);
    } else if (key == "spec") {
      cfg.spec_path = resolve(base_dir, value);
    } else if (key == "items") {
      cfg.spec_items = to_u64(key, value);
    } else if (key == "data_seed") {
      cfg.data_seed = to_u64(key, value);
    } else if (key == "policy") {
      try {
        s.policy = policy_from_string(value);
      } catch (const ValueError& e) {
        fail(key, e.what());
      }
    } else if (key == "p_targ") {
      s.p_targ = to_double(key, value);
    } else if (key == "i_th") {
      s.set_size_threshold = to_int(key, value);
    } else if (key == "checkpoints") {
      s.n_checkpoints = to_int(key, value);
    } else if (key == "checkpoint_list") {
      s.checkpoint_list.clear();
      for (const auto& item : split_list(value)) s.checkpoint_list.push_back(to_int(key, item));
    } else if (key == "n_cal") {
      s.n_cal = to_u64(key, value);
    } else if (key == "trials") {
      s.trials = to_int(key, value);
    } else if (key == "seed") {
      s.seed = to_u64(key, value);
    } else if (key == "threads") {
      s.threads = to_int(key, value);
    } else if (key == "dcsnn_grid") {
      s.dcsnn_grid.clear();
      for (const auto& item : split_list(value)) s.dcsnn_grid.push_back(to_double(key, item));
    } else {
      fail(key, "unknown key");
    }
  }
  if (cfg.model_path.empty()) throw ParseError(name, line_no, "model", "missing required key");
  if (cfg.dataset_path.empty() && cfg.spec_path.empty()) {
    throw ParseError(name, line_no, "dataset", "one of 'dataset' or 'spec' is required");
  }
  if (cfg.dataset_path.empty() && cfg.spec_items == 0) {
    throw ParseError(name, line_no, "items", "'spec' needs 'items' >= 1");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open experiment config '" + path + "'");
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_experiment_config(is, path, dir);
}

ExperimentRunner make_runner(const ExperimentConfig& cfg) {
  NetworkParams params = load_model(cfg.model_path);
  LabeledDataset data = cfg.dataset_path.empty()
                            ? generate(load_spec(cfg.spec_path), cfg.spec_items, cfg.data_seed)
                            : load_dataset(cfg.dataset_path);
  return ExperimentRunner(std::move(params), std::move(data), cfg.settings.threads);
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
  return make_runner(cfg).run(cfg.settings);
}

// ---------------------------------------------------------------------------
// Sweeps

SweepParameter sweep_parameter_from_string(std::string_view name) {
  if (name == "p_targ" || name == "ptarg") return SweepParameter::kPTarg;
  if (name == "I_th" || name == "i_th" || name == "ith") return SweepParameter::kSetSizeThreshold;
  if (name == "n_checkpoints" || name == "checkpoints") return SweepParameter::kCheckpointCount;
  if (name == "n_cal" || name == "ncal") return SweepParameter::kCalibrationSize;
  throw ValueError("unknown sweep parameter '" + std::string(name) +
                   "' (expected p_targ, I_th, n_checkpoints or n_cal)");
}

const char* to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::kPTarg: return "p_targ";
    case SweepParameter::kSetSizeThreshold: return "I_th";
    case SweepParameter::kCheckpointCount: return "n_checkpoints";
    case SweepParameter::kCalibrationSize: return "n_cal";
  }
  return "?";
}

std::vector<MetricsReport> sweep(const ExperimentRunner& runner, const ExperimentSettings& base,
                                 SweepParameter parameter, const std::vector<double>& values) {
  auto as_int = [](double v) {
    if (v != std::floor(v) || v < 0.0 || v > 1e9) {
      throw ValueError("sweep value " + format_double(v) + " is not a non-negative integer");
    }
    return static_cast<long long>(v);
  };
  std::vector<ExperimentSettings> all;
  for (double v : values) {
    ExperimentSettings s = base;
    switch (parameter) {
      case SweepParameter::kPTarg: s.p_targ = v; break;
      case SweepParameter::kSetSizeThreshold: s.set_size_threshold = static_cast<int>(as_int(v)); break;
      case SweepParameter::kCheckpointCount:
        s.n_checkpoints = static_cast<int>(as_int(v));
        s.checkpoint_list.clear();
        break;
      case SweepParameter::kCalibrationSize: s.n_cal = static_cast<std::size_t>(as_int(v)); break;
    }
    all.push_back(std::move(s));
  }
  std::vector<MetricsReport> reports;
  reports.reserve(all.size());
  for (const auto& s : all) reports.push_back(runner.run(s));
  return reports;
}

// ---------------------------------------------------------------------------
// CSV output

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

void write_summary_header(std::ostream& os) {
  for (const char* m : {"coverage", "reliability_gap", "normalized_latency", "normalized_energy",
                        "normalized_set_size"}) {
    os << ',' << m << "_mean," << m << "_lo95," << m << "_hi95";
  }
}

void write_summary_values(std::ostream& os, const MetricsReport& r) {
  for (const Summary* s : {&r.coverage, &r.reliability_gap, &r.normalized_latency,
                           &r.normalized_energy, &r.normalized_set_size}) {
    os << ',' << format_double(s->mean) << ',' << format_double(s->lo95) << ','
       << format_double(s->hi95);
  }
}

void write_settings_values(std::ostream& os, const MetricsReport& r) {
  const auto& s = r.settings;
  os << to_string(s.policy) << ',' << format_double(s.p_targ) << ',' << s.set_size_threshold << ','
     << join_ints(r.checkpoints) << ',' << s.n_cal << ',' << s.trials << ',' << s.seed;
}

constexpr const char* kSettingsHeader = "policy,p_targ,i_th,checkpoints,n_cal,trials,seed";

}  // namespace

void write_report_csv(std::ostream& os, const MetricsReport& report) {
  os << kSettingsHeader;
  write_summary_header(os);
  os << '\n';
  write_settings_values(os, report);
  write_summary_values(os, report);
  os << '\n';
}

void write_per_trial_csv(std::ostream& os, const MetricsReport& report) {
  os << "trial,n_test,coverage,reliability_gap,normalized_latency,normalized_energy,"
        "normalized_set_size,alpha,thresholds\n";
  for (const auto& m : report.trials) {
    os << m.trial << ',' << m.n_test << ',' << format_double(m.coverage) << ','
       << format_double(m.reliability_gap) << ',' << format_double(m.normalized_latency) << ','
       << format_double(m.normalized_energy) << ',' << format_double(m.normalized_set_size) << ','
       << format_double(m.alpha) << ',' << join_doubles(m.thresholds) << '\n';
  }
}

void write_per_input_csv(std::ostream& os, const MetricsReport& report) {
  os << "trial,input_id,policy,stop_time,set_size,set,covered,energy\n";
  const char* policy = to_string(report.settings.policy);
  for (const auto& r : report.inputs) {
    os << r.trial << ',' << r.input_id << ',' << policy << ',' << r.stop_time << ','
       << r.set.size() << ',' << join_ints(r.set) << ',' << (r.covered ? 1 : 0) << ',' << r.energy
       << '\n';
  }
}

void write_reports(const std::string& dir, const MetricsReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  auto write = [&](const char* file, auto&& fn) {
    const auto path = (std::filesystem::path(dir) / file).string();
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    fn(os, report);
    if (!os) throw IoError("write to '" + path + "' failed");
  };
  write("report.csv", write_report_csv);
  write("per_trial.csv", write_per_trial_csv);
  write("per_input.csv", write_per_input_csv);
}

void write_sweep_csv(std::ostream& os, SweepParameter parameter, const std::vector<double>& values,
                     const std::vector<MetricsReport>& reports) {
  if (values.size() != reports.size()) throw ValueError("one report per sweep value required");
  os << "parameter,value," << kSettingsHeader;
  write_summary_header(os);
  os << '\n';
  for (std::size_t i = 0; i < reports.size(); ++i) {
    os << to_string(parameter) << ',' << format_double(values[i]) << ',';
    write_settings_values(os, reports[i]);
    write_summary_values(os, reports[i]);
    os << '\n';
  }
}

}  // namespace spikecp
