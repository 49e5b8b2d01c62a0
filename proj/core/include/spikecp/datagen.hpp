#pragma once

// Synthetic rate-coded classification data, calibration/test splits, and the
// text formats for datasets, synthetic specs and event lists.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "spikecp/snn.hpp"

namespace spikecp {

/// Class-conditional Bernoulli firing rates per input channel.
struct SyntheticSpec {
  int n_classes = 0;
  int n_input = 0;
  int steps = 0;
  std::vector<double> rates;  // n_classes x n_input, row-major
  double noise_rate = 0.0;    // probability of flipping each sampled bit
  std::vector<double> class_prior;
  bool allow_degenerate = false;  // permit identical class rows

  double rate(int c, int j) const { return rates[static_cast<std::size_t>(c) * n_input + j]; }

  void validate() const;
  std::uint64_t fingerprint() const;

  bool operator==(const SyntheticSpec&) const = default;
};

/// Class c fires at `on_rate` on its own block of channels (channel j belongs
/// to block j * C / N), at `neighbor_rate` on the block of class c+1 (mod C),
/// and at `off_rate` elsewhere. Uniform class prior.
SyntheticSpec prototype_spec(int n_classes, int n_input, int steps, double on_rate,
                             double off_rate, double neighbor_rate, double noise_rate);

struct Sample {
  InputSequence input;
  int label = 0;  ///< 0-based class index

  bool operator==(const Sample&) const = default;
};

struct LabeledDataset {
  int n_classes = 0;
  int n_input = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t fingerprint = 0;
  std::vector<Sample> items;

  std::size_t size() const noexcept { return items.size(); }
  std::vector<int> labels() const;
  void validate() const;

  bool operator==(const LabeledDataset&) const = default;
};

/// n i.i.d. items. Item i uses its own generator seeded by derive_seed(seed, i).
LabeledDataset generate(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed);

struct SplitIndices {
  std::vector<std::size_t> cal;
  std::vector<std::size_t> test;
};

/// Uniformly random disjoint split of 0..n-1 into n_cal and n - n_cal indices.
SplitIndices split_indices(std::size_t n, std::size_t n_cal, std::uint64_t seed);

std::pair<LabeledDataset, LabeledDataset> split_cal_test(const LabeledDataset& data,
                                                         std::size_t n_cal, std::uint64_t seed);

inline constexpr const char* kDatasetFormat = "spikecp-data/1";
inline constexpr const char* kSpecFormat = "spikecp-spec/1";

void save_dataset(std::ostream& os, const LabeledDataset& data);
void save_dataset(const std::string& path, const LabeledDataset& data);
LabeledDataset load_dataset(std::istream& is, const std::string& name = "<stream>");
LabeledDataset load_dataset(const std::string& path);

void save_spec(std::ostream& os, const SyntheticSpec& spec);
void save_spec(const std::string& path, const SyntheticSpec& spec);
SyntheticSpec load_spec(std::istream& is, const std::string& name = "<stream>");
SyntheticSpec load_spec(const std::string& path);

/// Event list, one "t channel polarity" per line (t in 1..T, channel in
/// 0..N-1, polarity in {-1, 0, 1}); '#' starts a comment. Events of either
/// polarity are counted per (t, channel) and clipped to [0, 1].
InputSequence load_events(std::istream& is, int steps, int channels,
                          const std::string& name = "<stream>");
InputSequence load_events(const std::string& path, int steps, int channels);

}  // namespace spikecp
