#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "spikecp/adaptive.hpp"
#include "spikecp/conformal.hpp"
#include "spikecp/datagen.hpp"
#include "spikecp/error.hpp"
#include "spikecp/harness.hpp"
#include "spikecp/model_io.hpp"
#include "spikecp/trainer.hpp"

namespace spikecp::cli {

namespace {

struct GenOptions {
  std::string spec_path;
  std::string write_spec;
  std::string out;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  int classes = 10;
  int inputs = 50;
  int steps = 80;
  double on_rate = 0.3;
  double off_rate = 0.1;
  double neighbor_rate = 0.2;
  double noise = 0.0;
};

struct TrainOptions {
  std::string data;
  std::string out;
  std::string loss_log;
  std::string from;
  std::vector<int> hidden{64};
  TrainConfig cfg;
  double gain = 0.7;
  double threshold = 1.0;
  FilterKernel kernel;
  std::string kernel_kind = "first-order";
};

struct InferOptions {
  std::string model;
  std::string input;
  std::size_t index = 0;
  std::string policy = "spikecp-global";
  double p_targ = 0.9;
  int ith = 3;
  int checkpoints = 4;
  std::vector<int> checkpoint_list;
  std::string cal;
  std::size_t n_cal = 0;
  std::string dump_scores;
};

struct ExperimentOptions {
  std::string config;
  std::string out = ".";
  std::size_t n_cal = 0;
  int threads = 0;
};

struct SweepOptions {
  std::string config;
  std::string param;
  std::vector<double> values;
  std::string out = "sweep.csv";
  int threads = 0;
};

struct InspectOptions {
  std::string path;
};

bool starts_with_format(const std::string& path, const char* format) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    return line == std::string("format ") + format;
  }
  return false;
}

std::string join_set(const std::vector<int>& set) {
  std::string s = "{";
  for (std::size_t i = 0; i < set.size(); ++i) s += (i ? "," : "") + std::to_string(set[i]);
  return s + "}";
}

int do_gen(const GenOptions& o, std::ostream& out) {
  const SyntheticSpec spec =
      o.spec_path.empty() ? prototype_spec(o.classes, o.inputs, o.steps, o.on_rate, o.off_rate,
                                           o.neighbor_rate, o.noise)
                          : load_spec(o.spec_path);
  if (!o.write_spec.empty()) save_spec(o.write_spec, spec);
  const auto data = generate(spec, o.n, o.seed);
  save_dataset(o.out, data);
  out << "wrote " << data.size() << " items to " << o.out << '\n';
  return 0;
}

int do_train(TrainOptions o, std::ostream& out) {
  const auto data = load_dataset(o.data);
  o.kernel.kind = kernel_kind_from_string(o.kernel_kind);
  const NetworkParams initial =
      o.from.empty() ? init_network(data.n_input, o.hidden, data.n_classes, data.steps, o.kernel,
                                    o.cfg.seed, o.gain, o.threshold)
                     : load_model(o.from);
  const auto result = train(initial, data, o.cfg);
  save_model(o.out, result.params);
  if (!o.loss_log.empty()) {
    std::ofstream log(o.loss_log);
    if (!log) throw IoError("cannot open '" + o.loss_log + "' for writing");
    write_loss_log(log, result.history);
  }
  const auto& last = result.history.back();
  out << "trained " << result.history.size() << " epochs, final loss " << last.mean_loss
      << ", training accuracy " << last.accuracy << "; wrote " << o.out << '\n';
  return 0;
}

int do_infer(const InferOptions& o, std::ostream& out) {
  const auto params = load_model(o.model);
  InputSequence input;
  if (starts_with_format(o.input, kDatasetFormat)) {
    const auto data = load_dataset(o.input);
    if (o.index >= data.size()) throw ValueError("--index beyond the dataset size");
    input = data.items[o.index].input;
  } else {
    input = load_events(o.input, params.steps, params.n_input);
  }
  auto cal = load_dataset(o.cal);
  if (o.n_cal > 0) {
    if (o.n_cal > cal.size()) throw ValueError("--ncal exceeds the calibration file size");
    cal.items.resize(o.n_cal);
  }
  const Policy policy = policy_from_string(o.policy);

  if (policy == Policy::kDcsnn) {
    const auto grid = default_dcsnn_grid();
    const double p_th = dcsnn_calibrate(params, cal, o.p_targ, grid);
    const auto d = dcsnn_infer(params, input, p_th);
    out << "policy=dcsnn p_th=" << p_th << " label=" << d.point << " stop_time=" << d.stop_time
        << " energy=" << d.energy << '\n';
    return 0;
  }

  const NcScoreKind kind = policy == Policy::kSpikecpLocal ? NcScoreKind::kLocal
                                                             : NcScoreKind::kGlobal;
  const CheckpointSet checkpoints = o.checkpoint_list.empty()
                                        ? CheckpointSet::equally_spaced(params.steps, o.checkpoints)
                                        : CheckpointSet(o.checkpoint_list, params.steps);
  const auto scores = calibration_scores(params, cal, checkpoints, kind);
  if (!o.dump_scores.empty()) {
    std::ofstream dump(o.dump_scores);
    if (!dump) throw IoError("cannot open '" + o.dump_scores + "' for writing");
    write_calibration_dump(dump, scores);
  }
  const auto schedule = calibrate_spikecp(scores, o.p_targ);
  const auto d = spikecp_infer(params, input, schedule, kind, o.ith, checkpoints);
  out << "policy=" << o.policy << " set=" << join_set(d.set) << " set_size=" << d.set.size()
      << " stop_time=" << d.stop_time << " energy=" << d.energy << '\n';
  return 0;
}

int do_experiment(const ExperimentOptions& o, std::ostream& out) {
  auto cfg = load_experiment_config(o.config);
  if (o.threads > 0) cfg.settings.threads = o.threads;
  if (o.n_cal > 0) cfg.settings.n_cal = o.n_cal;
  const auto report = run_experiment(cfg);
  write_reports(o.out, report);
  out << to_string(report.settings.policy) << ": coverage " << report.coverage.mean
      << " (gap " << report.reliability_gap.mean << "), latency "
      << report.normalized_latency.mean << ", energy " << report.normalized_energy.mean
      << ", set size " << report.normalized_set_size.mean << "; wrote " << o.out << '\n';
  return 0;
}

int do_sweep(const SweepOptions& o, std::ostream& out) {
  auto cfg = load_experiment_config(o.config);
  if (o.threads > 0) cfg.settings.threads = o.threads;
  const SweepParameter parameter = sweep_parameter_from_string(o.param);
  const auto reports = sweep(make_runner(cfg), cfg.settings, parameter, o.values);
  std::ofstream os(o.out);
  if (!os) throw IoError("cannot open '" + o.out + "' for writing");
  write_sweep_csv(os, parameter, o.values, reports);
  out << "swept " << to_string(parameter) << " over " << o.values.size() << " values; wrote "
      << o.out << '\n';
  return 0;
}

int do_inspect(const InspectOptions& o, std::ostream& out) {
  if (starts_with_format(o.path, kModelFormat)) {
    const auto p = load_model(o.path);
    out << "model " << kModelFormat << "\ninputs " << p.n_input << "\nclasses " << p.n_classes
        << "\nsteps " << p.steps << "\nthreshold " << p.threshold << "\ntemperature "
        << p.temperature << "\nkernel " << to_string(p.kernel.kind) << " tau_mem "
        << p.kernel.tau_mem << " tau_syn " << p.kernel.tau_syn << " tau_ref " << p.kernel.tau_ref
        << " horizon " << p.kernel.horizon << "\nlayers";
    for (const auto& l : p.layers) out << ' ' << l.rows << 'x' << l.cols;
    out << "\nhidden_neurons " << p.hidden_neuron_count() << '\n';
  } else if (starts_with_format(o.path, kDatasetFormat)) {
    const auto d = load_dataset(o.path);
    std::vector<std::size_t> per_class(static_cast<std::size_t>(d.n_classes), 0);
    for (const auto& s : d.items) ++per_class[s.label];
    out << "dataset " << kDatasetFormat << "\nclasses " << d.n_classes << "\ninputs " << d.n_input
        << "\nsteps " << d.steps << "\nitems " << d.size() << "\nseed " << d.seed
        << "\nclass_counts";
    for (auto c : per_class) out << ' ' << c;
    out << '\n';
  } else if (starts_with_format(o.path, kSpecFormat)) {
    const auto s = load_spec(o.path);
    out << "spec " << kSpecFormat << "\nclasses " << s.n_classes << "\ninputs " << s.n_input
        << "\nsteps " << s.steps << "\nnoise_rate " << s.noise_rate << '\n';
  } else {
    throw ValueError("'" + o.path + "' is not a spikecp model, dataset or spec file");
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"spikecp: reliable delay-adaptive inference for spiking neural networks"};
  app.name("spikecp");
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic rate-coded dataset");
  gen_cmd->add_option("--spec", gen.spec_path, "Synthetic spec file (default: prototype spec)");
  gen_cmd->add_option("--n", gen.n, "Number of items")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output dataset file")->required();
  gen_cmd->add_option("--write-spec", gen.write_spec, "Also save the spec used");
  gen_cmd->add_option("--classes", gen.classes, "Prototype spec: classes")->capture_default_str();
  gen_cmd->add_option("--inputs", gen.inputs, "Prototype spec: input channels")->capture_default_str();
  gen_cmd->add_option("--steps", gen.steps, "Prototype spec: T")->capture_default_str();
  gen_cmd->add_option("--on-rate", gen.on_rate, "Prototype spec: own-block rate")->capture_default_str();
  gen_cmd->add_option("--off-rate", gen.off_rate, "Prototype spec: background rate")->capture_default_str();
  gen_cmd->add_option("--neighbor-rate", gen.neighbor_rate, "Prototype spec: next class's block rate")
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "Bit-flip probability")->capture_default_str();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train an SNN with surrogate gradients");
  train_cmd->add_option("--data", tr.data, "Training dataset")->required();
  train_cmd->add_option("--out", tr.out, "Output model file")->required();
  train_cmd->add_option("--hidden", tr.hidden, "Hidden layer sizes")->capture_default_str();
  train_cmd->add_option("--from", tr.from, "Continue from an existing model");
  train_cmd->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--slope", tr.cfg.surrogate_slope, "Surrogate slope")->capture_default_str();
  train_cmd->add_option("--seed", tr.cfg.seed)->capture_default_str();
  train_cmd->add_option("--gain", tr.gain, "Initial weight scale")->capture_default_str();
  train_cmd->add_option("--threshold", tr.threshold, "Firing threshold")->capture_default_str();
  train_cmd->add_option("--kernel", tr.kernel_kind, "first-order or second-order")->capture_default_str();
  train_cmd->add_option("--tau-mem", tr.kernel.tau_mem)->capture_default_str();
  train_cmd->add_option("--tau-syn", tr.kernel.tau_syn)->capture_default_str();
  train_cmd->add_option("--tau-ref", tr.kernel.tau_ref)->capture_default_str();
  train_cmd->add_option("--horizon", tr.kernel.horizon)->capture_default_str();
  train_cmd->add_option("--loss-log", tr.loss_log, "Per-epoch loss CSV");

  InferOptions inf;
  auto* infer_cmd = app.add_subcommand("infer", "Adaptive inference on one input");
  infer_cmd->add_option("--model", inf.model)->required();
  infer_cmd->add_option("--input", inf.input, "Event-list file or dataset file")->required();
  infer_cmd->add_option("--index", inf.index, "Item index when --input is a dataset");
  infer_cmd->add_option("--policy", inf.policy, "spikecp-global, spikecp-local or dcsnn")
      ->capture_default_str();
  infer_cmd->add_option("--ptarg", inf.p_targ, "Target accuracy")->capture_default_str();
  infer_cmd->add_option("--ith", inf.ith, "Target set size")->capture_default_str();
  infer_cmd->add_option("--checkpoints", inf.checkpoints, "Number of equally spaced checkpoints")
      ->capture_default_str();
  infer_cmd->add_option("--checkpoint-list", inf.checkpoint_list, "Explicit checkpoints");
  infer_cmd->add_option("--cal", inf.cal, "Calibration dataset")->required();
  infer_cmd->add_option("--ncal", inf.n_cal, "Use only the first n calibration items");
  infer_cmd->add_option("--dump-scores", inf.dump_scores, "Write calibration scores here");

  ExperimentOptions ex;
  auto* exp_cmd = app.add_subcommand("experiment", "Run repeated calibration/test trials");
  exp_cmd->add_option("--config", ex.config, "Experiment config file")->required();
  exp_cmd->add_option("--out", ex.out, "Output directory")->capture_default_str();
  exp_cmd->add_option("--ncal", ex.n_cal, "Override the calibration size");
  exp_cmd->add_option("--threads", ex.threads, "Worker threads (default $SPIKECP_THREADS)");

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat an experiment over parameter values");
  sweep_cmd->add_option("--config", sw.config, "Experiment config file")->required();
  sweep_cmd->add_option("--param", sw.param, "p_targ, I_th, n_checkpoints or n_cal")->required();
  sweep_cmd->add_option("--values", sw.values, "Values to sweep")->delimiter(',');
  sweep_cmd->add_option("--out", sw.out, "Output CSV")->capture_default_str();
  sweep_cmd->add_option("--threads", sw.threads, "Worker threads (default $SPIKECP_THREADS)");

  InspectOptions ins;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print the header of a model, dataset or spec");
  inspect_cmd->add_option("path", ins.path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) err << app.help() << '\n';
    return app.exit(e, out, err);
  }

  try {
    if (*gen_cmd) return do_gen(gen, out);
    if (*train_cmd) return do_train(tr, out);
    if (*infer_cmd) return do_infer(inf, out);
    if (*exp_cmd) return do_experiment(ex, out);
    if (*sweep_cmd) return do_sweep(sw, out);
    if (*inspect_cmd) return do_inspect(ins, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace spikecp::cli
