#include "spikecp/adaptive.hpp"

#include <algorithm>
#include <string>

#include "spikecp/datagen.hpp"
#include "spikecp/error.hpp"

namespace spikecp {

CheckpointSet::CheckpointSet(std::vector<int> times, int steps)
    : times_(std::move(times)), steps_(steps) {
  if (steps_ < 1) throw ValueError("T must be >= 1");
  if (times_.empty()) throw ValueError("empty checkpoint set");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] < 1 || times_[i] > steps_ || (i > 0 && times_[i] <= times_[i - 1])) {
      throw ValueError("checkpoints must be strictly increasing within 1.." +
                       std::to_string(steps_));
    }
  }
  if (times_.back() != steps_) throw ValueError("checkpoint set must contain T");
}

CheckpointSet CheckpointSet::equally_spaced(int steps, int count) {
  if (count < 1 || count > steps) {
    throw ValueError("checkpoint count " + std::to_string(count) + " outside 1.." +
                     std::to_string(steps));
  }
  std::vector<int> times(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) {
    times[k - 1] = static_cast<int>(static_cast<long long>(k) * steps / count);
  }
  return CheckpointSet(std::move(times), steps);
}

void class_scores(NcScoreKind kind, int t, std::span<const int> counts,
                  std::span<const double> probs, std::span<double> out) {
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = kind == NcScoreKind::kLocal ? local_nc_score(t, counts[c]) : global_nc_score(probs[c]);
  }
}

CalibrationScores calibration_scores(std::span<const RunTrace* const> traces,
                                     std::span<const int> labels,
                                     const CheckpointSet& checkpoints, NcScoreKind kind) {
  if (traces.size() != labels.size()) throw ShapeError("one label per calibration trace");
  CalibrationScores out;
  out.checkpoints.assign(checkpoints.times().begin(), checkpoints.times().end());
  out.scores.assign(checkpoints.size(), std::vector<double>(traces.size()));
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const RunTrace& trace = *traces[i];
    const int label = labels[i];
    if (label < 0 || label >= trace.n_classes) throw ValueError("calibration label out of range");
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      const int t = checkpoints.times()[k];
      const auto idx = trace.index_of(t);
      if (!idx) throw ValueError("trace does not record checkpoint " + std::to_string(t));
      out.scores[k][i] = kind == NcScoreKind::kLocal
                             ? local_nc_score(t, trace.counts_at(*idx)[label])
                             : global_nc_score(trace.probs_at(*idx)[label]);
    }
  }
  return out;
}

CalibrationScores calibration_scores(const NetworkParams& params, const LabeledDataset& cal,
                                     const CheckpointSet& checkpoints, NcScoreKind kind) {
  std::vector<RunTrace> traces;
  traces.reserve(cal.size());
  for (const auto& s : cal.items) traces.push_back(run_to_checkpoints(params, s.input, checkpoints.times()));
  std::vector<const RunTrace*> ptrs;
  for (const auto& t : traces) ptrs.push_back(&t);
  const auto labels = cal.labels();
  return calibration_scores(ptrs, labels, checkpoints, kind);
}

ThresholdSchedule calibrate_spikecp(const CalibrationScores& scores, double p_targ) {
  const double alpha = bonferroni_alpha(p_targ, static_cast<int>(scores.checkpoints.size()));
  return calibrate_thresholds(scores, alpha, p_targ);
}

bool AdaptiveDecision::covers(int label) const {
  if (kind == DecisionKind::kPoint) return point == label;
  return std::binary_search(set.begin(), set.end(), label);
}

namespace {

void check_schedule(const ThresholdSchedule& schedule, const CheckpointSet& checkpoints,
                    int n_classes, int set_size_threshold) {
  if (!std::equal(schedule.checkpoints.begin(), schedule.checkpoints.end(),
                  checkpoints.times().begin(), checkpoints.times().end()) ||
      schedule.thresholds.size() != schedule.checkpoints.size()) {
    throw ValueError("threshold schedule was calibrated for different checkpoints");
  }
  if (set_size_threshold < 0 || set_size_threshold > n_classes) {
    throw ValueError("I_th must lie in 0..C");
  }
}

void check_p_th(double p_th) {
  if (!(p_th > 0.0 && p_th < 1.0)) throw ValueError("p_th must lie in (0, 1)");
}

// Lowest index wins ties.
int argmax(std::span<const int> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// One SpikeCP checkpoint; returns true when the set is small enough to stop.
bool spikecp_checkpoint(NcScoreKind kind, int t, std::span<const int> counts,
                        std::span<const double> probs, double threshold, int set_size_threshold,
                        std::vector<double>& scratch, AdaptiveDecision& decision) {
  class_scores(kind, t, counts, probs, scratch);
  decision.set = predicted_set(scratch, threshold);
  decision.stop_time = t;
  decision.log.push_back({t, static_cast<double>(decision.set.size())});
  return static_cast<int>(decision.set.size()) <= set_size_threshold;
}

}  // namespace

AdaptiveDecision spikecp_decide(const RunTrace& trace, const ThresholdSchedule& schedule,
                                NcScoreKind kind, int set_size_threshold,
                                const CheckpointSet& checkpoints) {
  check_schedule(schedule, checkpoints, trace.n_classes, set_size_threshold);
  AdaptiveDecision decision;
  decision.kind = DecisionKind::kSet;
  std::vector<double> scratch(static_cast<std::size_t>(trace.n_classes));
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const int t = checkpoints.times()[k];
    const auto idx = trace.index_of(t);
    if (!idx) throw ValueError("trace does not record checkpoint " + std::to_string(t));
    decision.energy = trace.hidden_spikes[*idx];
    if (spikecp_checkpoint(kind, t, trace.counts_at(*idx), trace.probs_at(*idx),
                           schedule.thresholds[k], set_size_threshold, scratch, decision)) {
      break;
    }
  }
  return decision;
}

AdaptiveDecision spikecp_infer(const NetworkParams& params, const InputSequence& input,
                               const ThresholdSchedule& schedule, NcScoreKind kind,
                               int set_size_threshold, const CheckpointSet& checkpoints) {
  if (checkpoints.steps() != params.steps) throw ValueError("checkpoint set built for another T");
  check_schedule(schedule, checkpoints, params.n_classes, set_size_threshold);
  AdaptiveDecision decision;
  decision.kind = DecisionKind::kSet;
  Simulator sim(params, input);
  std::vector<double> probs(static_cast<std::size_t>(params.n_classes));
  std::vector<double> scratch(probs.size());
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const int t = checkpoints.times()[k];
    sim.advance_to(t);
    predictive_probs(sim.counts(), probs, params.temperature);
    decision.energy = sim.hidden_spikes();
    if (spikecp_checkpoint(kind, t, sim.counts(), probs, schedule.thresholds[k],
                           set_size_threshold, scratch, decision)) {
      break;
    }
  }
  return decision;
}

AdaptiveDecision dcsnn_decide(const RunTrace& full_trace, double p_th) {
  check_p_th(p_th);
  const auto T = full_trace.size();
  if (T == 0 || full_trace.times.front() != 1 || full_trace.times.back() != static_cast<int>(T)) {
    throw ValueError("DC-SNN needs a trace recorded at every step");
  }
  AdaptiveDecision decision;
  decision.kind = DecisionKind::kPoint;
  for (std::size_t i = 0; i < T; ++i) {
    const auto probs = full_trace.probs_at(i);
    const double max_p = *std::max_element(probs.begin(), probs.end());
    decision.log.push_back({full_trace.times[i], max_p});
    if (max_p >= p_th || i + 1 == T) {
      decision.stop_time = full_trace.times[i];
      decision.point = argmax(full_trace.counts_at(i));
      decision.energy = full_trace.hidden_spikes[i];
      break;
    }
  }
  return decision;
}

AdaptiveDecision dcsnn_infer(const NetworkParams& params, const InputSequence& input,
                             double p_th) {
  check_p_th(p_th);
  AdaptiveDecision decision;
  decision.kind = DecisionKind::kPoint;
  Simulator sim(params, input);
  std::vector<double> probs(static_cast<std::size_t>(params.n_classes));
  while (sim.time() < params.steps) {
    sim.step();
    predictive_probs(sim.counts(), probs, params.temperature);
    const double max_p = *std::max_element(probs.begin(), probs.end());
    decision.log.push_back({sim.time(), max_p});
    if (max_p >= p_th || sim.time() == params.steps) {
      decision.stop_time = sim.time();
      decision.point = argmax(sim.counts());
      decision.energy = sim.hidden_spikes();
      break;
    }
  }
  return decision;
}

std::vector<double> default_dcsnn_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

double select_dcsnn_threshold(std::span<const double> grid, std::span<const double> accuracy,
                              double p_targ) {
  if (grid.empty() || grid.size() != accuracy.size()) {
    throw ValueError("grid and accuracy must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (accuracy[i] >= p_targ) return grid[i];
  }
  const auto best = std::max_element(accuracy.begin(), accuracy.end());
  return grid[static_cast<std::size_t>(best - accuracy.begin())];
}

std::vector<double> dcsnn_grid_accuracy(std::span<const RunTrace* const> full_traces,
                                        std::span<const int> labels,
                                        std::span<const double> grid) {
  if (full_traces.empty()) throw ValueError("empty calibration set");
  if (full_traces.size() != labels.size()) throw ShapeError("one label per calibration trace");
  if (grid.empty()) throw ValueError("empty DC-SNN grid");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    check_p_th(grid[g]);
    if (g > 0 && grid[g] < grid[g - 1]) throw ValueError("DC-SNN grid must be sorted ascending");
  }

  std::vector<std::size_t> correct(grid.size(), 0);
  for (std::size_t i = 0; i < full_traces.size(); ++i) {
    const RunTrace& trace = *full_traces[i];
    const std::size_t T = trace.size();
    if (T == 0 || trace.times.front() != 1 || trace.times.back() != static_cast<int>(T)) {
      throw ValueError("DC-SNN needs traces recorded at every step");
    }
    // First passage of max_c p_c over an ascending grid: walk time forward with
    // the running maximum, since stop(p) is non-decreasing in p.
    std::size_t t = 0;
    double running_max = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      while (running_max < grid[g] && t < T) {
        const auto probs = trace.probs_at(t);
        running_max = std::max(running_max, *std::max_element(probs.begin(), probs.end()));
        ++t;
      }
      const std::size_t stop = running_max >= grid[g] ? t - 1 : T - 1;
      if (argmax(trace.counts_at(stop)) == labels[i]) ++correct[g];
    }
  }
  std::vector<double> accuracy(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    accuracy[g] = static_cast<double>(correct[g]) / static_cast<double>(full_traces.size());
  }
  return accuracy;
}

double dcsnn_calibrate(std::span<const RunTrace* const> full_traces, std::span<const int> labels,
                       double p_targ, std::span<const double> grid) {
  if (!(p_targ > 0.0 && p_targ < 1.0)) throw ValueError("p_targ must lie in (0, 1)");
  return select_dcsnn_threshold(grid, dcsnn_grid_accuracy(full_traces, labels, grid), p_targ);
}

double dcsnn_calibrate(const NetworkParams& params, const LabeledDataset& cal, double p_targ,
                       std::span<const double> grid) {
  if (cal.size() == 0) throw ValueError("empty calibration set");
  std::vector<RunTrace> traces;
  traces.reserve(cal.size());
  for (const auto& s : cal.items) traces.push_back(run_full(params, s.input));
  std::vector<const RunTrace*> ptrs;
  for (const auto& t : traces) ptrs.push_back(&t);
  const auto labels = cal.labels();
  return dcsnn_calibrate(ptrs, labels, p_targ, grid);
}

}  // namespace spikecp
