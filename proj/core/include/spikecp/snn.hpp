#pragma once

// Discrete-time spike response model (SRM) networks: fully-connected layers,
// rate decoding of the readout layer and hidden-spike energy accounting.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace spikecp {

enum class KernelKind { kFirstOrder, kSecondOrder };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string_view name);

/// Synaptic and refractory filters, truncated to `horizon` taps.
///
/// Time constants are in units of time steps. The synaptic filter is applied
/// at lags 0..horizon-1 (a spike affects its post-synaptic potential starting
/// at its own step); the refractory filter at lags 1..horizon.
struct FilterKernel {
  KernelKind kind = KernelKind::kFirstOrder;
  double tau_mem = 10.0;
  double tau_syn = 5.0;
  double tau_ref = 1.0;
  int horizon = 32;

  void validate() const;

  /// alpha_1..alpha_h: first-order exp(-(t-1)/tau_mem),
  /// second-order exp(-t/tau_mem) - exp(-t/tau_syn).
  std::vector<double> synaptic_taps() const;

  /// beta_1..beta_h = -threshold * exp(-(t-1)/tau_ref); soft reset.
  std::vector<double> refractory_taps(double threshold) const;

  bool operator==(const FilterKernel&) const = default;
};

/// Dense weights of one layer, row-major (post x pre).
struct LayerParams {
  int rows = 0;
  int cols = 0;
  std::vector<double> weights;

  LayerParams() = default;
  LayerParams(int rows, int cols, double fill = 0.0);

  double& at(int r, int c) { return weights[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return weights[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const double> row(int r) const {
    return {weights.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  bool operator==(const LayerParams&) const = default;
};

struct NetworkParams {
  int n_input = 0;
  int n_classes = 0;
  int steps = 0;  ///< sequence length T
  double threshold = 1.0;
  /// Readout softmax temperature. 1 gives plain softmax over spike counts;
  /// values below 1 sharpen confidences.
  double temperature = 1.0;
  FilterKernel kernel;
  std::vector<LayerParams> layers;

  /// Throws ShapeError / ValueError if the parameters are inconsistent.
  void validate() const;

  /// Number of neurons in all layers but the readout.
  int hidden_neuron_count() const;

  bool operator==(const NetworkParams&) const = default;
};

/// Real-valued T x N input, row-major. Time is 1-based in the accessors.
struct InputSequence {
  int steps = 0;
  int channels = 0;
  std::vector<double> values;

  InputSequence() = default;
  InputSequence(int steps, int channels, double fill = 0.0)
      : steps(steps), channels(channels),
        values(static_cast<std::size_t>(steps) * channels, fill) {}

  std::span<const double> at(int t) const {
    return {values.data() + static_cast<std::size_t>(t - 1) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<double> at(int t) {
    return {values.data() + static_cast<std::size_t>(t - 1) * channels,
            static_cast<std::size_t>(channels)};
  }

  bool operator==(const InputSequence&) const = default;
};

struct StepResult {
  /// Readout spikes y_t; views into the state, valid until the next step.
  std::span<const std::uint8_t> output_spikes;
  int hidden_spikes = 0;
};

/// Per-neuron filter histories of a network, advanced one step at a time.
class NetworkState {
 public:
  explicit NetworkState(const NetworkParams& params);

  void reset();

  /// Number of steps already simulated; the next step is time() + 1.
  int time() const noexcept { return t_; }

  std::span<const double> potentials(std::size_t layer) const { return layers_[layer].potential; }
  std::span<const std::uint8_t> spikes(std::size_t layer) const { return layers_[layer].spikes; }
  std::size_t layer_count() const noexcept { return layers_.size(); }

 private:
  friend StepResult forward_step(const NetworkParams&, NetworkState&, std::span<const double>);

  struct LayerState {
    int pre = 0;
    int post = 0;
    std::vector<double> input_history;       // depth x pre ring
    std::vector<std::uint8_t> spike_history;  // depth x post ring
    std::vector<double> filtered;             // (alpha * input)_t, length pre
    std::vector<double> potential;
    std::vector<std::uint8_t> spikes;
  };

  std::vector<double> synaptic_;
  std::vector<double> refractory_;
  std::vector<LayerState> layers_;
  int depth_ = 0;
  int t_ = 0;
};

/// Advances `state` by one step on input x_t.
///
/// o_{k,t} = sum_j w_{k,j} (alpha * in_j)_t + (beta * b_k)_t and
/// b_{k,t} = 1 iff o_{k,t} >= threshold.
StepResult forward_step(const NetworkParams& params, NetworkState& state,
                        std::span<const double> x_t);

/// Softmax of spike counts, max-subtracted. `out` must have counts.size() entries.
void predictive_probs(std::span<const int> counts, std::span<double> out,
                      double temperature = 1.0);
std::vector<double> predictive_probs(std::span<const int> counts, double temperature = 1.0);

/// Spike counts, probabilities and cumulative hidden spikes at recorded times.
struct RunTrace {
  int n_classes = 0;
  std::vector<int> times;
  std::vector<int> counts;   // times.size() x n_classes
  std::vector<double> probs;  // times.size() x n_classes
  std::vector<std::int64_t> hidden_spikes;

  std::size_t size() const noexcept { return times.size(); }
  std::span<const int> counts_at(std::size_t i) const {
    return {counts.data() + i * n_classes, static_cast<std::size_t>(n_classes)};
  }
  std::span<const double> probs_at(std::size_t i) const {
    return {probs.data() + i * n_classes, static_cast<std::size_t>(n_classes)};
  }
  std::optional<std::size_t> index_of(int t) const;

  bool operator==(const RunTrace&) const = default;
};

/// Incremental simulation of one input, for policies that stop early.
class Simulator {
 public:
  Simulator(const NetworkParams& params, const InputSequence& input);

  int time() const noexcept { return state_.time(); }
  void step();
  void advance_to(int t);

  std::span<const int> counts() const noexcept { return counts_; }
  std::int64_t hidden_spikes() const noexcept { return hidden_; }

 private:
  const NetworkParams& params_;
  const InputSequence& input_;
  NetworkState state_;
  std::vector<int> counts_;
  std::int64_t hidden_ = 0;
};

/// Simulates `input` up to the largest checkpoint and records the trace at each
/// checkpoint. Checkpoints must be strictly increasing within 1..T.
RunTrace run_to_checkpoints(const NetworkParams& params, const InputSequence& input,
                            std::span<const int> checkpoints);

/// Trace at every step 1..T.
RunTrace run_full(const NetworkParams& params, const InputSequence& input);

}  // namespace spikecp
