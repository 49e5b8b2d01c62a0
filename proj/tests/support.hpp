#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "spikecp/datagen.hpp"
#include "spikecp/rng.hpp"
#include "spikecp/snn.hpp"

namespace spikecp::testing {

/// One input channel feeding one readout neuron with weight w.
inline NetworkParams single_neuron(double w, double threshold, double tau_mem, int steps = 8) {
  NetworkParams p;
  p.n_input = 1;
  p.n_classes = 1;
  p.steps = steps;
  p.threshold = threshold;
  p.kernel.tau_mem = tau_mem;
  p.layers.emplace_back(1, 1, w);
  return p;
}

inline NetworkParams random_network(int n_input, std::vector<int> sizes, int steps,
                                    std::uint64_t seed, double scale = 1.0) {
  NetworkParams p;
  p.n_input = n_input;
  p.n_classes = sizes.back();
  p.steps = steps;
  Rng rng(seed);
  int pre = n_input;
  for (int post : sizes) {
    LayerParams l(post, pre);
    for (double& w : l.weights) w = rng.uniform(-scale, scale);
    p.layers.push_back(std::move(l));
    pre = post;
  }
  return p;
}

inline InputSequence random_input(int steps, int channels, double rate, std::uint64_t seed) {
  InputSequence x(steps, channels);
  Rng rng(seed);
  for (double& v : x.values) v = rng.bernoulli(rate) ? 1.0 : 0.0;
  return x;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("spikecp-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace spikecp::testing
