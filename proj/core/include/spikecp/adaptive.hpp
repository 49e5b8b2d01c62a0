#pragma once

// Adaptive inference policies: SpikeCP set prediction with checkpoint-based
// stopping, and the DC-SNN confidence-threshold point classifier.

#include <cstdint>
#include <span>
#include <vector>

#include "spikecp/conformal.hpp"
#include "spikecp/snn.hpp"

namespace spikecp {

struct LabeledDataset;

/// Pre-registered stopping times, strictly increasing, always ending at T.
class CheckpointSet {
 public:
  CheckpointSet(std::vector<int> times, int steps);

  /// {floor(T/m), floor(2T/m), ..., T}; exactly {T/m, ..., T} when m divides T.
  static CheckpointSet equally_spaced(int steps, int count);

  std::span<const int> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  int steps() const noexcept { return steps_; }

  bool operator==(const CheckpointSet&) const = default;

 private:
  std::vector<int> times_;
  int steps_ = 0;
};

/// Per-class scores at time t from the readout counts and probabilities.
void class_scores(NcScoreKind kind, int t, std::span<const int> counts,
                  std::span<const double> probs, std::span<double> out);

/// Score of the true label for every calibration item at every checkpoint.
CalibrationScores calibration_scores(const NetworkParams& params, const LabeledDataset& cal,
                                     const CheckpointSet& checkpoints, NcScoreKind kind);

/// Same, from precomputed traces that contain every checkpoint.
CalibrationScores calibration_scores(std::span<const RunTrace* const> traces,
                                     std::span<const int> labels,
                                     const CheckpointSet& checkpoints, NcScoreKind kind);

/// Thresholds with the Bonferroni-corrected alpha = (1 - p_targ)/|checkpoints|.
ThresholdSchedule calibrate_spikecp(const CalibrationScores& scores, double p_targ);

enum class DecisionKind { kSet, kPoint };

struct CheckpointLog {
  int time = 0;
  double value = 0.0;  ///< set size (SpikeCP) or max confidence (DC-SNN)

  bool operator==(const CheckpointLog&) const = default;
};

struct AdaptiveDecision {
  DecisionKind kind = DecisionKind::kSet;
  std::vector<int> set;  ///< 0-based labels, set kind only
  int point = -1;        ///< 0-based label, point kind only
  int stop_time = 0;
  std::int64_t energy = 0;
  std::vector<CheckpointLog> log;

  bool covers(int label) const;
  bool operator==(const AdaptiveDecision&) const = default;
};

/// SpikeCP with early exit: simulates only up to the stopping checkpoint.
AdaptiveDecision spikecp_infer(const NetworkParams& params, const InputSequence& input,
                               const ThresholdSchedule& schedule, NcScoreKind kind,
                               int set_size_threshold, const CheckpointSet& checkpoints);

/// SpikeCP on a trace that records every checkpoint (and possibly more).
AdaptiveDecision spikecp_decide(const RunTrace& trace, const ThresholdSchedule& schedule,
                                NcScoreKind kind, int set_size_threshold,
                                const CheckpointSet& checkpoints);

/// DC-SNN: stop at the first t with max_c p_c >= p_th, else at T.
AdaptiveDecision dcsnn_infer(const NetworkParams& params, const InputSequence& input,
                             double p_th);

/// DC-SNN on a full trace (recorded at every t = 1..T).
AdaptiveDecision dcsnn_decide(const RunTrace& full_trace, double p_th);

/// Default DC-SNN grid {0.01, 0.02, ..., 0.99}.
std::vector<double> default_dcsnn_grid();

/// Smallest grid value whose accuracy reaches p_targ, else the smallest
/// grid value attaining the maximum accuracy.
double select_dcsnn_threshold(std::span<const double> grid, std::span<const double> accuracy,
                              double p_targ);

/// Calibration accuracy of DC-SNN at every grid value.
std::vector<double> dcsnn_grid_accuracy(std::span<const RunTrace* const> full_traces,
                                        std::span<const int> labels,
                                        std::span<const double> grid);

double dcsnn_calibrate(const NetworkParams& params, const LabeledDataset& cal, double p_targ,
                       std::span<const double> grid);

double dcsnn_calibrate(std::span<const RunTrace* const> full_traces, std::span<const int> labels,
                       double p_targ, std::span<const double> grid);

}  // namespace spikecp
