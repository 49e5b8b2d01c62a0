#include "spikecp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "spikecp/datagen.hpp"
#include "spikecp/rng.hpp"
#include "text_io.hpp"

namespace spikecp {

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw ValueError("epochs and batch_size must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ValueError("learning_rate must be finite and >= 0");
  }
  if (!std::isfinite(surrogate_slope) || surrogate_slope <= 0.0) {
    throw ValueError("surrogate_slope must be > 0");
  }
}

NetworkParams init_network(int n_input, std::span<const int> hidden_sizes, int n_classes,
                           int steps, const FilterKernel& kernel, std::uint64_t seed, double gain,
                           double threshold) {
  NetworkParams p;
  p.n_input = n_input;
  p.n_classes = n_classes;
  p.steps = steps;
  p.threshold = threshold;
  p.kernel = kernel;
  Rng rng(seed);
  int pre = n_input;
  std::vector<int> sizes(hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(n_classes);
  for (int post : sizes) {
    LayerParams layer(post, pre);
    const double bound = gain / std::sqrt(static_cast<double>(pre));
    for (auto& w : layer.weights) w = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
    pre = post;
  }
  p.validate();
  return p;
}

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Full-time activations of one layer, row-major over time.
struct LayerTrace {
  int pre = 0;
  int post = 0;
  std::vector<double> filtered;  // T x pre
  std::vector<double> potential;  // T x post
  std::vector<double> spikes;     // T x post
};

struct ForwardPass {
  std::vector<LayerTrace> layers;
  std::vector<double> counts;
  double loss = 0.0;
  std::vector<double> probs;
};

ForwardPass forward(const NetworkParams& params, const InputSequence& input, int label,
                    double slope, SpikeMode mode) {
  const int T = params.steps;
  const int h = params.kernel.horizon;
  const auto alpha = params.kernel.synaptic_taps();
  const auto beta = params.kernel.refractory_taps(params.threshold);

  ForwardPass fp;
  fp.layers.resize(params.layers.size());
  std::vector<double> layer_in(input.values);  // T x pre
  int pre = params.n_input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& lp = params.layers[l];
    auto& lt = fp.layers[l];
    lt.pre = pre;
    lt.post = lp.rows;
    lt.filtered.assign(static_cast<std::size_t>(T) * pre, 0.0);
    lt.potential.assign(static_cast<std::size_t>(T) * lp.rows, 0.0);
    lt.spikes.assign(static_cast<std::size_t>(T) * lp.rows, 0.0);
    for (int t = 0; t < T; ++t) {
      double* a = &lt.filtered[static_cast<std::size_t>(t) * pre];
      for (int d = 0; d < h && d <= t; ++d) {
        const double* x = &layer_in[static_cast<std::size_t>(t - d) * pre];
        for (int j = 0; j < pre; ++j) a[j] += alpha[d] * x[j];
      }
      for (int k = 0; k < lp.rows; ++k) {
        const auto w = lp.row(k);
        double o = 0.0;
        for (int j = 0; j < pre; ++j) o += w[j] * a[j];
        for (int d = 1; d <= h && d <= t; ++d) {
          o += beta[d - 1] * lt.spikes[static_cast<std::size_t>(t - d) * lp.rows + k];
        }
        lt.potential[static_cast<std::size_t>(t) * lp.rows + k] = o;
        lt.spikes[static_cast<std::size_t>(t) * lp.rows + k] =
            mode == SpikeMode::kHard ? (o >= params.threshold ? 1.0 : 0.0)
                                     : logistic(slope * (o - params.threshold));
      }
    }
    layer_in = lt.spikes;
    pre = lp.rows;
  }

  const int C = params.n_classes;
  const auto& out = fp.layers.back();
  fp.counts.assign(C, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < C; ++c) fp.counts[c] += out.spikes[static_cast<std::size_t>(t) * C + c];
  }
  const double tau = params.temperature;
  const double m = *std::max_element(fp.counts.begin(), fp.counts.end());
  double z = 0.0;
  fp.probs.resize(C);
  for (int c = 0; c < C; ++c) {
    fp.probs[c] = std::exp((fp.counts[c] - m) / tau);
    z += fp.probs[c];
  }
  for (auto& p : fp.probs) p /= z;
  fp.loss = std::log(z) - (fp.counts[label] - m) / tau;
  return fp;
}

}  // namespace

double forward_loss(const NetworkParams& params, const InputSequence& input, int label,
                    double surrogate_slope, SpikeMode mode) {
  return forward(params, input, label, surrogate_slope, mode).loss;
}

LossGradient loss_and_gradient(const NetworkParams& params, const InputSequence& input, int label,
                               double surrogate_slope, SpikeMode mode) {
  if (input.steps != params.steps || input.channels != params.n_input) {
    throw ShapeError("input shape does not match the network");
  }
  if (label < 0 || label >= params.n_classes) throw ValueError("label out of range");
  const auto fp = forward(params, input, label, surrogate_slope, mode);

  const int T = params.steps;
  const int h = params.kernel.horizon;
  const int C = params.n_classes;
  const auto alpha = params.kernel.synaptic_taps();
  const auto beta = params.kernel.refractory_taps(params.threshold);

  LossGradient out;
  out.loss = fp.loss;
  out.counts = fp.counts;
  out.grads.reserve(params.layers.size());
  for (const auto& lp : params.layers) out.grads.emplace_back(lp.rows, lp.cols);

  // dL/db(t) arriving from above; for the readout it is dL/dr_c at every t.
  std::vector<double> grad_spikes(static_cast<std::size_t>(T) * C);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < C; ++c) {
      grad_spikes[static_cast<std::size_t>(t) * C + c] =
          (fp.probs[c] - (c == label ? 1.0 : 0.0)) / params.temperature;
    }
  }

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& lp = params.layers[li];
    const auto& lt = fp.layers[li];
    const int post = lt.post;
    const int pre = lt.pre;
    std::vector<double> grad_potential(static_cast<std::size_t>(T) * post, 0.0);
    for (int t = T - 1; t >= 0; --t) {
      for (int k = 0; k < post; ++k) {
        double gb = grad_spikes[static_cast<std::size_t>(t) * post + k];
        for (int d = 1; d <= h && t + d < T; ++d) {
          gb += beta[d - 1] * grad_potential[static_cast<std::size_t>(t + d) * post + k];
        }
        const double s = logistic(surrogate_slope *
                                  (lt.potential[static_cast<std::size_t>(t) * post + k] -
                                   params.threshold));
        grad_potential[static_cast<std::size_t>(t) * post + k] = gb * surrogate_slope * s * (1.0 - s);
      }
    }

    auto& gw = out.grads[li];
    for (int t = 0; t < T; ++t) {
      const double* a = &lt.filtered[static_cast<std::size_t>(t) * pre];
      const double* go = &grad_potential[static_cast<std::size_t>(t) * post];
      for (int k = 0; k < post; ++k) {
        if (go[k] == 0.0) continue;
        double* row = &gw.weights[static_cast<std::size_t>(k) * pre];
        for (int j = 0; j < pre; ++j) row[j] += go[k] * a[j];
      }
    }

    if (li == 0) break;
    // Through the weights to the filtered inputs, then back through the filter.
    std::vector<double> grad_filtered(static_cast<std::size_t>(T) * pre, 0.0);
    for (int t = 0; t < T; ++t) {
      const double* go = &grad_potential[static_cast<std::size_t>(t) * post];
      double* ga = &grad_filtered[static_cast<std::size_t>(t) * pre];
      for (int k = 0; k < post; ++k) {
        if (go[k] == 0.0) continue;
        const auto w = lp.row(k);
        for (int j = 0; j < pre; ++j) ga[j] += go[k] * w[j];
      }
    }
    grad_spikes.assign(static_cast<std::size_t>(T) * pre, 0.0);
    for (int t = 0; t < T; ++t) {
      double* gi = &grad_spikes[static_cast<std::size_t>(t) * pre];
      for (int d = 0; d < h && t + d < T; ++d) {
        const double* ga = &grad_filtered[static_cast<std::size_t>(t + d) * pre];
        for (int j = 0; j < pre; ++j) gi[j] += alpha[d] * ga[j];
      }
    }
  }
  return out;
}

double point_accuracy(const NetworkParams& params, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : data.items) {
    Simulator sim(params, s.input);
    sim.advance_to(params.steps);
    const auto counts = sim.counts();
    const int pred = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    correct += pred == s.label;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const NetworkParams& initial, const LabeledDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  initial.validate();
  if (data.size() == 0) throw ValueError("training set is empty");
  if (data.n_input != initial.n_input || data.steps != initial.steps ||
      data.n_classes != initial.n_classes) {
    throw ShapeError("dataset dimensions do not match the network");
  }

  TrainResult result{initial, {}};
  NetworkParams& params = result.params;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<LayerParams> batch_grad;
      for (const auto& lp : params.layers) batch_grad.emplace_back(lp.rows, lp.cols);
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = data.items[order[b]];
        const auto lg = loss_and_gradient(params, s.input, s.label, cfg.surrogate_slope,
                                          SpikeMode::kHard);
        if (!std::isfinite(lg.loss)) {
          throw TrainingDiverged("loss became non-finite at epoch " + std::to_string(epoch) +
                                 ", item " + std::to_string(order[b]));
        }
        loss_sum += lg.loss;
        const int pred = static_cast<int>(std::max_element(lg.counts.begin(), lg.counts.end()) -
                                          lg.counts.begin());
        correct += pred == s.label;
        for (std::size_t l = 0; l < batch_grad.size(); ++l) {
          auto& dst = batch_grad[l].weights;
          const auto& src = lg.grads[l].weights;
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
      }
      const double scale = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t l = 0; l < batch_grad.size(); ++l) {
        auto& w = params.layers[l].weights;
        const auto& g = batch_grad[l].weights;
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= scale * g[k];
        if (!std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); })) {
          throw TrainingDiverged("weights of layer " + std::to_string(l) +
                                 " became non-finite at epoch " + std::to_string(epoch));
        }
      }
    }
    result.history.push_back({epoch, loss_sum / static_cast<double>(data.size()),
                              static_cast<double>(correct) / static_cast<double>(data.size())});
  }
  return result;
}

void write_loss_log(std::ostream& os, std::span<const EpochStats> history) {
  os << "epoch,mean_loss,accuracy\n";
  for (const auto& e : history) {
    os << e.epoch << ',' << detail::format_double(e.mean_loss) << ','
       << detail::format_double(e.accuracy) << '\n';
  }
}

}  // namespace spikecp
