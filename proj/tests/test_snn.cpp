#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spikecp/error.hpp"
#include "spikecp/snn.hpp"
#include "support.hpp"

namespace spikecp {
namespace {

using testing::random_input;
using testing::random_network;
using testing::single_neuron;

// Direct convolution over the full history, kernels written out from their
// closed forms rather than taken from FilterKernel.
struct NaiveTrace {
  std::vector<std::vector<double>> potentials;  // [t][neuron] for the readout
  std::vector<std::vector<int>> counts;         // cumulative readout counts
  std::vector<long> hidden;                     // cumulative hidden spikes
};

NaiveTrace naive_forward(const NetworkParams& p, const InputSequence& x) {
  const int T = p.steps;
  const int h = p.kernel.horizon;
  auto alpha = [&](int t) {
    return p.kernel.kind == KernelKind::kFirstOrder
               ? std::exp(-(t - 1) / p.kernel.tau_mem)
               : std::exp(-t / p.kernel.tau_mem) - std::exp(-t / p.kernel.tau_syn);
  };
  auto beta = [&](int d) { return -p.threshold * std::exp(-(d - 1) / p.kernel.tau_ref); };

  std::vector<std::vector<double>> in(T + 1, std::vector<double>(p.n_input));
  for (int t = 1; t <= T; ++t) {
    for (int j = 0; j < p.n_input; ++j) in[t][j] = x.at(t)[j];
  }
  NaiveTrace out;
  out.potentials.assign(T + 1, {});
  out.hidden.assign(T + 1, 0);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    std::vector<std::vector<double>> spikes(T + 1, std::vector<double>(L.rows, 0.0));
    for (int t = 1; t <= T; ++t) {
      for (int k = 0; k < L.rows; ++k) {
        double o = 0.0;
        for (int j = 0; j < L.cols; ++j) {
          double f = 0.0;
          for (int d = 0; d < h && t - d >= 1; ++d) f += alpha(d + 1) * in[t - d][j];
          o += L.at(k, j) * f;
        }
        for (int d = 1; d <= h && t - d >= 1; ++d) o += beta(d) * spikes[t - d][k];
        spikes[t][k] = o >= p.threshold ? 1.0 : 0.0;
        if (l + 1 == p.layers.size()) out.potentials[t].push_back(o);
      }
    }
    if (l + 1 < p.layers.size()) {
      for (int t = 1; t <= T; ++t) {
        out.hidden[t] += static_cast<long>(std::accumulate(spikes[t].begin(), spikes[t].end(), 0.0));
      }
    }
    in = std::move(spikes);
  }
  for (int t = 1; t <= T; ++t) out.hidden[t] += out.hidden[t - 1];
  out.counts.assign(T + 1, std::vector<int>(p.n_classes, 0));
  for (int t = 1; t <= T; ++t) {
    for (int c = 0; c < p.n_classes; ++c) out.counts[t][c] = out.counts[t - 1][c] + (in[t][c] > 0.5);
  }
  return out;
}

TEST(SrmForward, ImpulseResponseHalvesEachStep) {
  auto p = single_neuron(1.0, 10.0, 1.0 / std::log(2.0), 3);
  InputSequence x(3, 1);
  x.at(1)[0] = 1.0;
  NetworkState s(p);
  const double expected[] = {1.0, 0.5, 0.25};
  for (int t = 1; t <= 3; ++t) {
    auto r = forward_step(p, s, x.at(t));
    EXPECT_NEAR(s.potentials(0)[0], expected[t - 1], 1e-12);
    EXPECT_EQ(r.output_spikes[0], 0);
  }
}

TEST(SrmForward, ZeroInputStaysAtRest) {
  auto p = random_network(6, {5, 3}, 12, 7);
  InputSequence x(12, 6);
  NetworkState s(p);
  for (int t = 1; t <= 12; ++t) {
    auto r = forward_step(p, s, x.at(t));
    EXPECT_EQ(r.hidden_spikes, 0);
    for (std::size_t l = 0; l < s.layer_count(); ++l) {
      for (double o : s.potentials(l)) EXPECT_EQ(o, 0.0);
      for (auto b : s.spikes(l)) EXPECT_EQ(b, 0);
    }
  }
}

TEST(SrmForward, RefractorySuppressesSecondSpike) {
  // Tiny tau_mem makes the synaptic filter a pure pass-through: w x_t = threshold.
  auto p = single_neuron(2.0, 2.0, 1e-3, 3);
  InputSequence x(3, 1, 1.0);
  NetworkState s(p);
  forward_step(p, s, x.at(1));
  EXPECT_NEAR(s.potentials(0)[0], 2.0, 1e-12);
  EXPECT_EQ(s.spikes(0)[0], 1);
  forward_step(p, s, x.at(2));
  EXPECT_NEAR(s.potentials(0)[0], 0.0, 1e-12);
  EXPECT_EQ(s.spikes(0)[0], 0);
  forward_step(p, s, x.at(3));
  EXPECT_NEAR(s.potentials(0)[0], 2.0 - 2.0 * std::exp(-1.0), 1e-12);
}

TEST(SrmForward, MatchesDirectConvolution) {
  for (auto kind : {KernelKind::kFirstOrder, KernelKind::kSecondOrder}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      auto p = random_network(7, {9, 4}, 40, seed, 1.2);
      p.kernel.kind = kind;
      p.kernel.horizon = 6;
      p.kernel.tau_ref = 2.0;
      auto x = random_input(40, 7, 0.4, seed + 100);
      auto naive = naive_forward(p, x);
      NetworkState s(p);
      std::vector<int> counts(4, 0);
      long hidden = 0;
      for (int t = 1; t <= 40; ++t) {
        auto r = forward_step(p, s, x.at(t));
        for (int c = 0; c < 4; ++c) {
          EXPECT_NEAR(s.potentials(1)[c], naive.potentials[t][c], 1e-12);
          counts[c] += r.output_spikes[c];
        }
        EXPECT_EQ(counts, naive.counts[t]) << "t=" << t;
        hidden += r.hidden_spikes;
        EXPECT_EQ(hidden, naive.hidden[t]);
      }
    }
  }
}

TEST(SrmForward, RejectsBadInputs) {
  auto p = random_network(3, {2}, 2, 1);
  NetworkState s(p);
  std::vector<double> wrong(4, 0.0);
  EXPECT_THROW(forward_step(p, s, wrong), ShapeError);
  std::vector<double> nan{0.0, std::nan(""), 0.0};
  EXPECT_THROW(forward_step(p, s, nan), ValueError);
  std::vector<double> ok(3, 0.0);
  forward_step(p, s, ok);
  forward_step(p, s, ok);
  EXPECT_THROW(forward_step(p, s, ok), ValueError);
}

TEST(SrmForward, KernelTruncation) {
  auto p = random_network(5, {6, 3}, 60, 3, 1.0);
  p.kernel.horizon = 4;
  // A single early burst: with horizon 4 it must not reach beyond t = 4.
  InputSequence x(60, 5);
  for (int j = 0; j < 5; ++j) x.at(1)[j] = 1.0;
  NetworkState s(p);
  for (int t = 1; t <= 60; ++t) {
    forward_step(p, s, x.at(t));
    if (t > 4 + 4 * 2) {
      // inputs and all downstream spikes are older than the horizon by now
      for (double o : s.potentials(0)) EXPECT_EQ(o, 0.0);
    }
  }

  // Past the point where taps fall below 1e-12, longer horizons agree closely.
  auto q = random_network(5, {6, 3}, 80, 4, 0.5);
  q.kernel.tau_mem = 2.0;
  q.kernel.tau_ref = 1.0;
  auto y = random_input(80, 5, 0.5, 9);
  auto run = [&](int h) {
    auto r = q;
    r.kernel.horizon = h;
    NetworkState st(r);
    std::vector<double> all;
    for (int t = 1; t <= 80; ++t) {
      forward_step(r, st, y.at(t));
      for (std::size_t l = 0; l < st.layer_count(); ++l) {
        all.insert(all.end(), st.potentials(l).begin(), st.potentials(l).end());
      }
    }
    return all;
  };
  const int h0 = 1 + static_cast<int>(std::ceil(2.0 * 12.0 * std::log(10.0)));  // exp(-(h-1)/2) < 1e-12
  auto a = run(h0);
  auto b = run(h0 + 30);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(PredictiveProbs, Examples) {
  auto u = predictive_probs(std::vector<int>{2, 2, 2});
  for (double v : u) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

  auto p = predictive_probs(std::vector<int>{1, 0, 0});
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], e / (e + 2), 1e-15);
  EXPECT_NEAR(p[1], 1 / (e + 2), 1e-15);
  EXPECT_NEAR(p[0], 0.57612, 1e-5);
  EXPECT_NEAR(p[2], 0.21194, 1e-5);

  auto big = predictive_probs(std::vector<int>{80, 0});
  EXPECT_GE(big[0], 1.0 - 1e-30);
  EXPECT_TRUE(std::isfinite(big[1]));
  EXPECT_GT(big[1], 0.0);
}

TEST(PredictiveProbs, TemperatureSharpens) {
  auto p1 = predictive_probs(std::vector<int>{3, 1}, 1.0);
  auto p2 = predictive_probs(std::vector<int>{3, 1}, 0.5);
  EXPECT_GT(p2[0], p1[0]);
  EXPECT_NEAR(p2[0], 1.0 / (1.0 + std::exp(-4.0)), 1e-15);
}

TEST(PredictiveProbs, PropertiesOnRandomCounts) {
  Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const int C = 1 + static_cast<int>(rng.below(12));
    std::vector<int> r(C);
    for (int& v : r) v = static_cast<int>(rng.below(100));
    auto p = predictive_probs(r);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    EXPECT_EQ(std::max_element(r.begin(), r.end()) - r.begin(),
              std::max_element(p.begin(), p.end()) - p.begin());
  }
}

TEST(RunTrace, RecordsRequestedCheckpoints) {
  auto p = random_network(10, {8, 5}, 80, 11);
  auto x = random_input(80, 10, 0.3, 12);
  std::vector<int> cps{20, 40, 60, 80};
  auto tr = run_to_checkpoints(p, x, cps);
  EXPECT_EQ(tr.times, cps);
  EXPECT_EQ(tr.size(), 4u);
  EXPECT_EQ(run_to_checkpoints(p, x, cps), tr);

  auto full = run_full(p, x);
  ASSERT_EQ(full.size(), 80u);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto j = *full.index_of(cps[i]);
    EXPECT_TRUE(std::equal(tr.counts_at(i).begin(), tr.counts_at(i).end(),
                           full.counts_at(j).begin()));
    EXPECT_EQ(tr.hidden_spikes[i], full.hidden_spikes[j]);
  }
  EXPECT_FALSE(full.index_of(81).has_value());
}

TEST(RunTrace, RejectsBadCheckpoints) {
  auto p = random_network(2, {2}, 10, 1);
  InputSequence x(10, 2);
  EXPECT_THROW(run_to_checkpoints(p, x, std::vector<int>{}), ValueError);
  EXPECT_THROW(run_to_checkpoints(p, x, std::vector<int>{5, 5}), ValueError);
  EXPECT_THROW(run_to_checkpoints(p, x, std::vector<int>{0, 5}), ValueError);
  EXPECT_THROW(run_to_checkpoints(p, x, std::vector<int>{11}), ValueError);
}

TEST(RunTrace, SaturatedNeuronCountsEveryStep) {
  // Large weight overwhelms the soft reset so the neuron fires every step.
  auto p = single_neuron(100.0, 1.0, 10.0, 30);
  InputSequence x(30, 1, 1.0);
  auto full = run_full(p, x);
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_EQ(full.counts_at(i)[0], full.times[i]);
}

TEST(RunTrace, CountAndEnergyInvariants) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = random_network(12, {10, 6, 4}, 50, seed, 1.5);
    auto x = random_input(50, 12, 0.35, seed * 7);
    auto full = run_full(p, x);
    for (std::size_t i = 0; i < full.size(); ++i) {
      const int t = full.times[i];
      for (int c = 0; c < 4; ++c) {
        EXPECT_GE(full.counts_at(i)[c], 0);
        EXPECT_LE(full.counts_at(i)[c], t);
        if (i > 0) EXPECT_GE(full.counts_at(i)[c], full.counts_at(i - 1)[c]);
      }
      if (i > 0) EXPECT_GE(full.hidden_spikes[i], full.hidden_spikes[i - 1]);
    }

    // Energy additivity against a step-by-step simulator.
    Simulator sim(p, x);
    std::int64_t acc = 0;
    for (int t = 1; t <= 50; ++t) {
      const auto before = sim.hidden_spikes();
      sim.step();
      acc += sim.hidden_spikes() - before;
      EXPECT_EQ(acc, full.hidden_spikes[t - 1]);
    }
  }
}

TEST(NetworkParams, ValidateCatchesShapeErrors) {
  auto p = random_network(3, {4, 2}, 5, 1);
  EXPECT_NO_THROW(p.validate());
  auto bad = p;
  bad.layers[1] = LayerParams(2, 5);
  EXPECT_THROW(bad.validate(), ShapeError);
  bad = p;
  bad.n_classes = 3;
  EXPECT_THROW(bad.validate(), ShapeError);
  bad = p;
  bad.threshold = 0.0;
  EXPECT_THROW(bad.validate(), ValueError);
  bad = p;
  bad.kernel.horizon = 0;
  EXPECT_THROW(bad.validate(), ValueError);
  EXPECT_EQ(p.hidden_neuron_count(), 4);
}

}  // namespace
}  // namespace spikecp
