#include "spikecp/snn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikecp/error.hpp"

namespace spikecp {

const char* to_string(KernelKind kind) {
  return kind == KernelKind::kFirstOrder ? "first-order" : "second-order";
}

KernelKind kernel_kind_from_string(const std::string_view name) {
  if (name == "first-order") return KernelKind::kFirstOrder;
  if (name == "second-order") return KernelKind::kSecondOrder;
  throw ValueError("unknown kernel kind '" + std::string(name) + "'");
}

void FilterKernel::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(tau_mem) || !positive(tau_ref) ||
      (kind == KernelKind::kSecondOrder && !positive(tau_syn))) {
    throw ValueError("kernel time constants must be finite and positive");
  }
  if (horizon < 1) throw ValueError("kernel horizon must be >= 1");
}

std::vector<double> FilterKernel::synaptic_taps() const {
  std::vector<double> taps(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    taps[t - 1] = kind == KernelKind::kFirstOrder
                      ? std::exp(-(t - 1) / tau_mem)
                      : std::exp(-t / tau_mem) - std::exp(-t / tau_syn);
  }
  return taps;
}

std::vector<double> FilterKernel::refractory_taps(double threshold) const {
  std::vector<double> taps(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) taps[t - 1] = -threshold * std::exp(-(t - 1) / tau_ref);
  return taps;
}

LayerParams::LayerParams(int rows, int cols, double fill)
    : rows(rows), cols(cols), weights(static_cast<std::size_t>(rows) * cols, fill) {}

void NetworkParams::validate() const {
  if (n_input < 1 || n_classes < 1 || steps < 1) {
    throw ShapeError("network needs n_input, n_classes and steps >= 1");
  }
  if (!std::isfinite(threshold) || threshold <= 0.0) throw ValueError("threshold must be > 0");
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw ValueError("temperature must be > 0");
  }
  kernel.validate();
  if (layers.empty()) throw ShapeError("network has no layers");
  int pre = n_input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.cols != pre || layer.rows < 1 ||
        layer.weights.size() != static_cast<std::size_t>(layer.rows) * layer.cols) {
      throw ShapeError("layer " + std::to_string(l) + " has shape " + std::to_string(layer.rows) +
                       "x" + std::to_string(layer.cols) + ", expected ?x" + std::to_string(pre));
    }
    if (!std::all_of(layer.weights.begin(), layer.weights.end(),
                     [](double w) { return std::isfinite(w); })) {
      throw ValueError("layer " + std::to_string(l) + " has non-finite weights");
    }
    pre = layer.rows;
  }
  if (pre != n_classes) {
    throw ShapeError("readout layer has " + std::to_string(pre) + " neurons, expected " +
                     std::to_string(n_classes));
  }
}

int NetworkParams::hidden_neuron_count() const {
  int n = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l].rows;
  return n;
}

NetworkState::NetworkState(const NetworkParams& params)
    : synaptic_(params.kernel.synaptic_taps()),
      refractory_(params.kernel.refractory_taps(params.threshold)),
      depth_(params.kernel.horizon) {
  layers_.reserve(params.layers.size());
  for (const auto& lp : params.layers) {
    LayerState ls;
    ls.pre = lp.cols;
    ls.post = lp.rows;
    ls.input_history.assign(static_cast<std::size_t>(depth_) * ls.pre, 0.0);
    ls.spike_history.assign(static_cast<std::size_t>(depth_) * ls.post, 0);
    ls.filtered.assign(ls.pre, 0.0);
    ls.potential.assign(ls.post, 0.0);
    ls.spikes.assign(ls.post, 0);
    layers_.push_back(std::move(ls));
  }
}

void NetworkState::reset() {
  for (auto& ls : layers_) {
    std::fill(ls.input_history.begin(), ls.input_history.end(), 0.0);
    std::fill(ls.spike_history.begin(), ls.spike_history.end(), 0);
    std::fill(ls.filtered.begin(), ls.filtered.end(), 0.0);
    std::fill(ls.potential.begin(), ls.potential.end(), 0.0);
    std::fill(ls.spikes.begin(), ls.spikes.end(), 0);
  }
  t_ = 0;
}

StepResult forward_step(const NetworkParams& params, NetworkState& state,
                        std::span<const double> x_t) {
  if (state.layers_.size() != params.layers.size() || state.depth_ != params.kernel.horizon) {
    throw ShapeError("state was built for a different network");
  }
  if (state.t_ >= params.steps) {
    throw ValueError("state already at t = " + std::to_string(state.t_) + " = T");
  }
  if (x_t.size() != static_cast<std::size_t>(params.n_input)) {
    throw ShapeError("input has " + std::to_string(x_t.size()) + " entries, expected " +
                     std::to_string(params.n_input));
  }
  if (!std::all_of(x_t.begin(), x_t.end(), [](double v) { return std::isfinite(v); })) {
    throw ValueError("non-finite input value");
  }

  const int t = state.t_ + 1;
  const int depth = state.depth_;
  const int slot = (t - 1) % depth;
  // Lags reachable at time t: 0..min(t-1, depth-1) for inputs, 1..min(t-1, depth) for spikes.
  const int input_lags = std::min(t, depth);
  const int spike_lags = std::min(t - 1, depth);

  int hidden = 0;
  std::span<const double> layer_in = x_t;
  std::vector<double> spike_as_real;

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& lp = params.layers[l];
    auto& ls = state.layers_[l];
    if (lp.rows != ls.post || lp.cols != ls.pre) throw ShapeError("state/params layer mismatch");

    std::copy(layer_in.begin(), layer_in.end(),
              ls.input_history.begin() + static_cast<std::ptrdiff_t>(slot) * ls.pre);

    std::fill(ls.filtered.begin(), ls.filtered.end(), 0.0);
    for (int d = 0; d < input_lags; ++d) {
      const double a = state.synaptic_[d];
      const int s = ((t - 1 - d) % depth + depth) % depth;
      const double* hist = ls.input_history.data() + static_cast<std::size_t>(s) * ls.pre;
      for (int j = 0; j < ls.pre; ++j) ls.filtered[j] += a * hist[j];
    }

    for (int k = 0; k < ls.post; ++k) {
      const auto w = lp.row(k);
      double o = 0.0;
      for (int j = 0; j < ls.pre; ++j) o += w[j] * ls.filtered[j];
      for (int d = 1; d <= spike_lags; ++d) {
        const int s = ((t - 1 - d) % depth + depth) % depth;
        if (ls.spike_history[static_cast<std::size_t>(s) * ls.post + k]) {
          o += state.refractory_[d - 1];
        }
      }
      ls.potential[k] = o;
      ls.spikes[k] = o >= params.threshold ? 1 : 0;
    }
    std::copy(ls.spikes.begin(), ls.spikes.end(),
              ls.spike_history.begin() + static_cast<std::ptrdiff_t>(slot) * ls.post);

    if (l + 1 < params.layers.size()) {
      spike_as_real.assign(ls.spikes.begin(), ls.spikes.end());
      for (auto b : ls.spikes) hidden += b;
      layer_in = spike_as_real;
    }
  }
  state.t_ = t;
  return {state.layers_.back().spikes, hidden};
}

void predictive_probs(std::span<const int> counts, std::span<double> out, double temperature) {
  if (counts.empty()) return;
  const int max_count = *std::max_element(counts.begin(), counts.end());
  double total = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out[c] = std::exp((counts[c] - max_count) / temperature);
    total += out[c];
  }
  for (auto& p : out) p /= total;
}

std::vector<double> predictive_probs(std::span<const int> counts, double temperature) {
  std::vector<double> out(counts.size());
  predictive_probs(counts, out, temperature);
  return out;
}

std::optional<std::size_t> RunTrace::index_of(int t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - times.begin());
}

namespace {

void check_input(const NetworkParams& params, const InputSequence& input) {
  if (input.steps != params.steps || input.channels != params.n_input ||
      input.values.size() != static_cast<std::size_t>(input.steps) * input.channels) {
    throw ShapeError("input is " + std::to_string(input.steps) + "x" +
                     std::to_string(input.channels) + ", network expects " +
                     std::to_string(params.steps) + "x" + std::to_string(params.n_input));
  }
}

}  // namespace

Simulator::Simulator(const NetworkParams& params, const InputSequence& input)
    : params_(params), input_(input), state_(params), counts_(params.n_classes, 0) {
  check_input(params, input);
}

void Simulator::step() {
  const auto result = forward_step(params_, state_, input_.at(state_.time() + 1));
  for (std::size_t c = 0; c < counts_.size(); ++c) counts_[c] += result.output_spikes[c];
  hidden_ += result.hidden_spikes;
}

void Simulator::advance_to(int t) {
  if (t < time() || t > params_.steps) {
    throw ValueError("cannot advance from t = " + std::to_string(time()) + " to " +
                     std::to_string(t));
  }
  while (time() < t) step();
}

RunTrace run_to_checkpoints(const NetworkParams& params, const InputSequence& input,
                            std::span<const int> checkpoints) {
  if (checkpoints.empty()) throw ValueError("empty checkpoint set");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || checkpoints[i] > params.steps ||
        (i > 0 && checkpoints[i] <= checkpoints[i - 1])) {
      throw ValueError("checkpoints must be strictly increasing within 1..T");
    }
  }
  const int C = params.n_classes;
  RunTrace trace;
  trace.n_classes = C;
  trace.times.assign(checkpoints.begin(), checkpoints.end());
  trace.counts.reserve(checkpoints.size() * C);
  trace.probs.resize(checkpoints.size() * C);
  trace.hidden_spikes.reserve(checkpoints.size());

  Simulator sim(params, input);
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    sim.advance_to(checkpoints[i]);
    const auto counts = sim.counts();
    trace.counts.insert(trace.counts.end(), counts.begin(), counts.end());
    predictive_probs(counts, std::span<double>(trace.probs).subspan(i * C, C),
                     params.temperature);
    trace.hidden_spikes.push_back(sim.hidden_spikes());
  }
  return trace;
}

RunTrace run_full(const NetworkParams& params, const InputSequence& input) {
  std::vector<int> all(static_cast<std::size_t>(params.steps));
  for (int t = 1; t <= params.steps; ++t) all[t - 1] = t;
  return run_to_checkpoints(params, input, all);
}

}  // namespace spikecp
