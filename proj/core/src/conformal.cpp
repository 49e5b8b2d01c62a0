#include "spikecp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <spdlog/spdlog.h>

#include "spikecp/error.hpp"

namespace spikecp {

namespace {

// Relative slack on the quantile index arithmetic so that e.g. alpha = 1 - 0.9
// (0.09999999999999998 in binary) still counts as alpha >= 1/10 with n = 9.
constexpr double kIndexSlack = 1e-12;

}  // namespace

const char* to_string(NcScoreKind kind) { return kind == NcScoreKind::kLocal ? "local" : "global"; }

NcScoreKind nc_score_kind_from_string(std::string_view name) {
  if (name == "local") return NcScoreKind::kLocal;
  if (name == "global") return NcScoreKind::kGlobal;
  throw ValueError("unknown score kind '" + std::string(name) + "'");
}

double local_nc_score(int t, int count) {
  if (count < 0 || count > t) {
    throw ValueError("spike count " + std::to_string(count) + " outside 0.." + std::to_string(t));
  }
  return static_cast<double>(t - count);
}

double global_nc_score(double prob) {
  if (std::isnan(prob) || prob > 1.0) throw ValueError("probability must lie in (0, 1]");
  return -std::log(std::max(prob, kProbabilityFloor));
}

double bonferroni_alpha(double p_targ, int n_checkpoints) {
  if (!(p_targ > 0.0 && p_targ < 1.0)) throw ValueError("p_targ must lie in (0, 1)");
  if (n_checkpoints < 1) throw ValueError("need at least one checkpoint");
  return (1.0 - p_targ) / n_checkpoints;
}

void CalibrationScores::validate() const {
  if (scores.size() != checkpoints.size()) {
    throw ShapeError("calibration scores: one list per checkpoint required");
  }
  for (std::size_t s = 0; s < checkpoints.size(); ++s) {
    if (checkpoints[s] < 1 || (s > 0 && checkpoints[s] <= checkpoints[s - 1])) {
      throw ValueError("calibration checkpoints must be positive and strictly increasing");
    }
  }
  const std::size_t n = n_cal();
  for (const auto& list : scores) {
    if (list.size() != n) throw ShapeError("calibration scores: ragged checkpoint lists");
    for (double s : list) {
      if (std::isnan(s) || s == -kInfinity) throw ValueError("calibration score is not finite");
    }
  }
}

double ThresholdSchedule::at(int t) const {
  auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), t);
  if (it == checkpoints.end() || *it != t) {
    throw ValueError("t = " + std::to_string(t) + " is not a checkpoint of the schedule");
  }
  return thresholds[static_cast<std::size_t>(it - checkpoints.begin())];
}

std::size_t conformal_rank(std::size_t n_cal, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValueError("alpha must lie in (0, 1)");
  const double n1 = static_cast<double>(n_cal) + 1.0;
  if (alpha * n1 < 1.0 - kIndexSlack) return 0;
  const double position = (1.0 - alpha) * n1;
  auto k = static_cast<std::size_t>(std::ceil(position - kIndexSlack * n1));
  return std::clamp<std::size_t>(k, 1, n_cal);
}

double kth_smallest(std::span<const double> scores, std::size_t k) {
  if (k < 1 || k > scores.size()) throw ValueError("rank out of range");
  std::vector<double> work(scores.begin(), scores.end());
  auto nth = work.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(work.begin(), nth, work.end());
  return *nth;
}

ThresholdSchedule calibrate_thresholds(const CalibrationScores& scores, double alpha,
                                       double p_targ) {
  scores.validate();
  ThresholdSchedule schedule;
  schedule.checkpoints = scores.checkpoints;
  schedule.alpha = alpha;
  schedule.p_targ = p_targ;
  schedule.n_cal = scores.n_cal();

  if (schedule.n_cal == 0) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValueError("alpha must lie in (0, 1)");
    spdlog::warn("empty calibration set: every threshold is +inf");
    schedule.thresholds.assign(scores.checkpoints.size(), kInfinity);
    return schedule;
  }

  const std::size_t k = conformal_rank(schedule.n_cal, alpha);
  schedule.thresholds.reserve(scores.checkpoints.size());
  for (const auto& list : scores.scores) {
    schedule.thresholds.push_back(k == 0 ? kInfinity : kth_smallest(list, k));
  }
  return schedule;
}

std::vector<int> predicted_set(std::span<const double> scores, double threshold) {
  std::vector<int> set;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (scores[c] <= threshold) set.push_back(static_cast<int>(c));
  }
  return set;
}

void write_calibration_dump(std::ostream& os, const CalibrationScores& scores) {
  char buf[64];
  for (std::size_t i = 0; i < scores.checkpoints.size(); ++i) {
    os << "checkpoint," << scores.checkpoints[i] << "\nindex,score\n";
    for (std::size_t j = 0; j < scores.scores[i].size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", scores.scores[i][j]);
      os << j << ',' << buf << '\n';
    }
  }
}

}  // namespace spikecp
