#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "prunemip/error.hpp"
#include "prunemip/prune.hpp"

using namespace prunemip;

namespace {

MaskedNetwork denseRandom(std::uint64_t seed, const std::vector<std::size_t>& widths) {
  oracle::Rng rng(seed);
  return oracle::randomNetwork(rng, widths, 1.0, 0.5, 0.0);
}

bool masksMonotone(const MaskedNetwork& before, const MaskedNetwork& after) {
  for (std::size_t j = 0; j < before.numLayers(); ++j) {
    const auto& a = before.layer(j);
    const auto& b = after.layer(j);
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
      if (!a.weight_mask[k] && b.weight_mask[k]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("iteration schedule") {
  CHECK(numIterations(0.99, 0.25).iterations == 16);
  CHECK(numIterations(0.25, 0.25).iterations == 1);
  const auto s = numIterations(0.8, 0.25);
  CHECK(s.iterations == 6);
  CHECK(s.rate == doctest::Approx(1.0 - std::pow(0.2, 1.0 / 6.0)));
  CHECK(s.rate == doctest::Approx(0.235).epsilon(1e-2));
  CHECK(numIterations(0.01, 0.9).iterations == 1);
  CHECK_THROWS_AS(numIterations(1.0, 0.25), Error);
}

TEST_CASE("weight step masks the smallest magnitudes globally") {
  MaskedNetwork net({2, 2, 1});
  net.layer(0).weights = {0.1, -0.5, 2.0, -3.0};
  net.layer(1).weights = {5.0, 6.0};
  CHECK(pruneWeightsCount(net, 2) == 2);
  CHECK_FALSE(net.layer(0).live(0, 0));
  CHECK_FALSE(net.layer(0).live(0, 1));
  CHECK(net.layer(0).w(0, 1) == 0.0);
  CHECK(net.layer(0).live(1, 0));
  CHECK(net.layer(0).bias_mask[0] == 1);

  MaskedNetwork four({4, 1});
  four.layer(0).weights = {0.1, -0.5, 2.0, -3.0};
  CHECK(pruneWeightsStep(four, 0.5) == 2);
  CHECK(four.layer(0).weight_mask == std::vector<std::uint8_t>{0, 0, 1, 1});
}

TEST_CASE("weight step on 2-5-5-1 at rate 0.2 leaves 32 weights") {
  MaskedNetwork net = denseRandom(1, {2, 5, 5, 1});
  CHECK(net.unmaskedWeights() == 40);
  pruneWeightsStep(net, 0.2);
  CHECK(net.unmaskedWeights() == 32);
}

TEST_CASE("weight ties resolve to the lower layer, row, column") {
  MaskedNetwork net({2, 2, 1});
  net.layer(0).weights = {1.0, 1.0, 1.0, 1.0};
  net.layer(1).weights = {1.0, 1.0};
  pruneWeightsCount(net, 3);
  CHECK(net.layer(0).weight_mask == std::vector<std::uint8_t>{0, 0, 0, 1});
  CHECK(net.layer(1).weight_mask == std::vector<std::uint8_t>{1, 1});
}

TEST_CASE("nothing left to prune") {
  MaskedNetwork net({1, 1});
  net.layer(0).maskWeight(0, 0);
  try {
    pruneWeightsStep(net, 0.5);
    FAIL("expected nothing-to-prune");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::NothingToPrune));
  }
}

TEST_CASE("node step on 2-5-5-1 gives 2-4-4-1 with 28 weights") {
  MaskedNetwork net = denseRandom(2, {2, 5, 5, 1});
  CHECK(pruneNodesStep(net, 0.2) == 2);
  CHECK(net.liveHiddenNeurons(0) == 4);
  CHECK(net.liveHiddenNeurons(1) == 4);
  CHECK(net.unmaskedWeights() == 28);
  CHECK(1.0 - 28.0 / 40.0 == doctest::Approx(0.3));
}

TEST_CASE("node step removes the lowest incoming score") {
  MaskedNetwork net({1, 5, 1});
  net.layer(0).weights = {5.0, -5.0, 0.1, 5.0, 5.0};
  net.layer(0).bias = {0.0, 0.0, 100.0, 0.0, 0.0};
  net.layer(1).weights = {1.0, 1.0, 1.0, 1.0, 1.0};
  pruneNodesStep(net, 0.2);
  CHECK_FALSE(net.hiddenNeuronLive(0, 2));
  CHECK(net.layer(0).bias_mask[2] == 0);
  CHECK(net.layer(0).bias[2] == 0.0);
  CHECK_FALSE(net.layer(1).live(0, 2));
  CHECK(net.liveHiddenNeurons(0) == 4);
}

TEST_CASE("node step with a small rate removes one neuron per layer") {
  MaskedNetwork net = denseRandom(3, {2, 7, 9, 6, 1});
  pruneNodesStep(net, 0.01);
  CHECK(net.liveHiddenNeurons(0) == 6);
  CHECK(net.liveHiddenNeurons(1) == 8);
  CHECK(net.liveHiddenNeurons(2) == 5);
}

TEST_CASE("node step refuses to empty a layer") {
  MaskedNetwork net = denseRandom(4, {2, 1, 3, 1});
  try {
    pruneNodesStep(net, 0.5);
    FAIL("expected layer collapse");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::LayerCollapse));
  }
}

TEST_CASE("node pruning live counts follow the ceiling rule") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    MaskedNetwork net = denseRandom(10 + s, {3, 12, 8, 2});
    const double rate = 0.15 + 0.1 * static_cast<double>(s);
    const std::size_t a = net.liveHiddenNeurons(0), b = net.liveHiddenNeurons(1);
    pruneNodesStep(net, rate);
    CHECK(net.liveHiddenNeurons(0) == a - static_cast<std::size_t>(std::ceil(rate * a - 1e-9)));
    CHECK(net.liveHiddenNeurons(1) == b - static_cast<std::size_t>(std::ceil(rate * b - 1e-9)));
  }
}

TEST_CASE("cleaning folds a dead neuron into the downstream bias") {
  MaskedNetwork net({1, 2, 1});
  net.layer(0).w(1, 0) = 1.0;
  net.layer(0).maskWeight(0, 0);
  net.layer(0).bias[0] = 2.0;
  net.layer(1).weights = {0.5, 1.0};
  net.layer(1).bias[0] = 1.0;
  const auto rep = cleanDeadNeurons(net);
  CHECK(rep.folded == 1);
  CHECK(net.layer(1).bias[0] == doctest::Approx(2.0));
  CHECK_FALSE(net.hiddenNeuronLive(0, 0));
  CHECK(net.layer(0).bias_mask[0] == 0);
  CHECK(net.hiddenNeuronLive(0, 1));
}

TEST_CASE("cleaning a negative-bias dead neuron leaves biases alone") {
  MaskedNetwork net({1, 2, 1});
  net.layer(0).w(1, 0) = 1.0;
  net.layer(0).maskWeight(0, 0);
  net.layer(0).bias[0] = -3.0;
  net.layer(1).weights = {0.5, 1.0};
  net.layer(1).bias[0] = 1.0;
  cleanDeadNeurons(net);
  CHECK(net.layer(1).bias[0] == 1.0);
  CHECK_FALSE(net.hiddenNeuronLive(0, 0));
}

TEST_CASE("cleaning cascades and preserves the function") {
  oracle::Rng rng(31);
  for (int t = 0; t < 30; ++t) {
    MaskedNetwork net = oracle::randomNetwork(rng, {2, 6, 6, 5, 2}, 1.0, 0.8, 0.45);
    const MaskedNetwork before = net;
    const auto rep = cleanDeadNeurons(net);
    CHECK_NOTHROW(net.validate());
    CHECK(masksMonotone(before, net));
    CHECK(cleanDeadNeurons(net).total() == 0);
    for (std::size_t j = 0; j < net.numHiddenLayers(); ++j) {
      for (std::size_t i = 0; i < net.layer(j).out_width; ++i) {
        if (!net.hiddenNeuronLive(j, i)) continue;
        bool in = false, out = false;
        for (std::size_t k = 0; k < net.layer(j).in_width; ++k) in = in || net.layer(j).live(i, k);
        for (std::size_t r = 0; r < net.layer(j + 1).out_width; ++r) out = out || net.layer(j + 1).live(r, i);
        CHECK(in);
        CHECK(out);
      }
    }
    const Box box = Box::uniform(2, -2, 2);
    for (int s = 0; s < 100; ++s) {
      const auto x = oracle::randomPoint(rng, box);
      const auto a = oracle::forward(before, x);
      const auto b = oracle::forward(net, x);
      for (std::size_t o = 0; o < a.size(); ++o) CHECK(std::fabs(a[o] - b[o]) <= 1e-12);
    }
    (void)rep;
  }
}

TEST_CASE("iterative weight pruning hits the target sparsity") {
  const Dataset train = makePeaksDataset(200, Box::uniform(2, -3, 3), 1);
  const Dataset val = makePeaksDataset(50, Box::uniform(2, -3, 3), 2);
  MaskedNetwork net({2, 5, 5, 1});
  xavierInitialize(net, 7);
  const MaskedNetwork start = net;
  PruneConfig pc;
  pc.final_sparsity = 0.8;
  pc.fine_tune = true;
  pc.fine_tune_cfg.epochs = 3;
  TrainConfig tc;
  tc.epochs = 3;
  const auto res = iterativePrune(net, train, val, pc, tc);
  CHECK(res.iterations.size() == 6);
  CHECK(weightSparsity(net) >= 0.8 - 1.0 / 40.0);
  CHECK(masksMonotone(start, net));
  for (std::size_t i = 1; i < res.iterations.size(); ++i) {
    CHECK(res.iterations[i].sparsity >= res.iterations[i - 1].sparsity);
  }
  CHECK(res.iterations.back().sparsity == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(res.fine_tune.history.size() >= 1);
}

TEST_CASE("iterative node pruning leaves four nodes per layer") {
  const Dataset train = makePeaksDataset(100, Box::uniform(2, -3, 3), 3);
  MaskedNetwork net({2, 10, 10, 1});
  xavierInitialize(net, 9);
  PruneConfig pc;
  pc.method = PruneMethod::Node;
  pc.final_sparsity = 0.6;
  pc.retrain = false;
  const auto res = iterativePrune(net, train, train, pc, TrainConfig{});
  CHECK(res.iterations.back().sparsity == doctest::Approx(0.6));
  CHECK(net.liveHiddenNeurons(0) == 4);
  CHECK(net.liveHiddenNeurons(1) == 4);
}

TEST_CASE("method parsing and config validation") {
  CHECK((parsePruneMethod("weight") == PruneMethod::Weight));
  CHECK((parsePruneMethod("node") == PruneMethod::Node));
  CHECK(std::string(toString(PruneMethod::Node)) == "node");
  CHECK_THROWS_AS(parsePruneMethod("magnitude"), Error);
  PruneConfig pc;
  pc.final_sparsity = 0.0;
  CHECK_THROWS_AS(pc.validate(), Error);
  pc.final_sparsity = 0.5;
  pc.relative_rate = 1.0;
  CHECK_THROWS_AS(pc.validate(), Error);
}
