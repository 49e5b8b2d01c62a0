#pragma once

// Surrogate-gradient backpropagation through time for small fully-connected
// SRM networks, trained on cross-entropy of softmax(final spike counts).

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "spikecp/error.hpp"
#include "spikecp/snn.hpp"

namespace spikecp {

struct LabeledDataset;

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.005;
  int batch_size = 16;
  double surrogate_slope = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Loss became non-finite during training.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Weights drawn uniformly from +-gain/sqrt(fan_in).
NetworkParams init_network(int n_input, std::span<const int> hidden_sizes, int n_classes,
                           int steps, const FilterKernel& kernel, std::uint64_t seed,
                           double gain = 0.7, double threshold = 1.0);

/// Hard: Heaviside spikes forward, surrogate derivative backward (training).
/// Smooth: logistic spikes sigma(slope (o - threshold)) forward too, so the
/// returned gradient is the exact gradient of the smoothed network.
enum class SpikeMode { kHard, kSmooth };

struct LossGradient {
  double loss = 0.0;
  std::vector<LayerParams> grads;  ///< same shapes as params.layers
  std::vector<double> counts;      ///< readout spike counts r(x^T)
};

LossGradient loss_and_gradient(const NetworkParams& params, const InputSequence& input, int label,
                               double surrogate_slope, SpikeMode mode);

/// Forward-only loss, for finite-difference checks.
double forward_loss(const NetworkParams& params, const InputSequence& input, int label,
                    double surrogate_slope, SpikeMode mode);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double accuracy = 0.0;  ///< argmax of final counts vs label, on the training data
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochStats> history;
};

/// Plain mini-batch SGD. Never modifies `data`; deterministic under cfg.seed.
TrainResult train(const NetworkParams& initial, const LabeledDataset& data, const TrainConfig& cfg);

/// Point accuracy of argmax r(x^T) on a dataset.
double point_accuracy(const NetworkParams& params, const LabeledDataset& data);

/// "epoch,mean_loss,accuracy" CSV.
void write_loss_log(std::ostream& os, std::span<const EpochStats> history);

}  // namespace spikecp
