#pragma once

// Split conformal prediction: non-conformity scores, Bonferroni-corrected
// per-checkpoint thresholds and predicted-set construction.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace spikecp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Floor applied to probabilities before taking the log-loss.
inline constexpr double kProbabilityFloor = 1e-300;

enum class NcScoreKind { kLocal, kGlobal };

const char* to_string(NcScoreKind kind);
NcScoreKind nc_score_kind_from_string(std::string_view name);

/// t - r_c. Lower is more plausible.
double local_nc_score(int t, int count);

/// -ln(p_c), with p_c floored at kProbabilityFloor.
double global_nc_score(double prob);

/// (1 - p_targ) / n_checkpoints.
double bonferroni_alpha(double p_targ, int n_checkpoints);

/// Calibration scores s^t[i] of the true labels, one list per checkpoint.
struct CalibrationScores {
  std::vector<int> checkpoints;
  std::vector<std::vector<double>> scores;  // parallel to checkpoints, n_cal each

  std::size_t n_cal() const noexcept { return scores.empty() ? 0 : scores.front().size(); }
  void validate() const;
};

struct ThresholdSchedule {
  std::vector<int> checkpoints;
  std::vector<double> thresholds;  // parallel to checkpoints; may be +inf
  double alpha = 0.0;
  double p_targ = 0.0;
  std::size_t n_cal = 0;

  /// Threshold at checkpoint t; throws ValueError if t is not a checkpoint.
  double at(int t) const;
};

/// Rank k = ceil((1 - alpha)(n + 1)) of the calibration quantile, or 0 when
/// alpha < 1/(n + 1) (threshold is +inf).
std::size_t conformal_rank(std::size_t n_cal, double alpha);

/// k-th smallest (1-based) of `scores` via selection; k must be in 1..size.
double kth_smallest(std::span<const double> scores, std::size_t k);

/// Per-checkpoint thresholds: the k-th smallest calibration score, or +inf
/// when alpha < 1/(n_cal + 1). `p_targ` is only recorded in the schedule.
ThresholdSchedule calibrate_thresholds(const CalibrationScores& scores, double alpha,
                                       double p_targ = 0.0);

/// Labels c (0-based) with scores[c] <= threshold, in increasing order.
std::vector<int> predicted_set(std::span<const double> scores, double threshold);

/// Audit dump: one "checkpoint,<t>" block of "index,score" rows per checkpoint.
void write_calibration_dump(std::ostream& os, const CalibrationScores& scores);

}  // namespace spikecp
