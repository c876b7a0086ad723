#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "prunemip/bounds.hpp"
#include "prunemip/error.hpp"

using namespace prunemip;

TEST_CASE("single neuron bounds match corner enumeration") {
  MaskedNetwork net({2, 1, 1});
  net.layer(0).weights = {1.0, -2.0};
  net.layer(0).bias = {0.5};
  net.layer(1).weights = {1.0};
  const Box box = Box::uniform(2, 0, 1);
  const auto t = propagateIA(net, box);
  CHECK(t.layers[0].lower[0] == doctest::Approx(-1.5));
  CHECK(t.layers[0].upper[0] == doctest::Approx(1.5));
  CHECK(t.layers[0].act_lower[0] == 0.0);
  CHECK(t.layers[0].act_upper[0] == doctest::Approx(1.5));
  CHECK(t.layers[0].preWidth(0) == doctest::Approx(3.0));
  CHECK(t.layers[1].is_output);
  CHECK(t.layers[1].lower[0] == 0.0);
  CHECK(t.layers[1].upper[0] == doctest::Approx(1.5));

  double lo = 1e300, hi = -1e300;
  for (double a : {0.0, 1.0}) {
    for (double b : {0.0, 1.0}) {
      const double p = a - 2.0 * b + 0.5;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  }
  CHECK(t.layers[0].lower[0] == lo);
  CHECK(t.layers[0].upper[0] == hi);
  CHECK(widthIdentityResidual(net, t) < 1e-12);
}

TEST_CASE("a fully masked neuron is constant") {
  MaskedNetwork net({2, 2, 1});
  net.layer(0).maskWeight(0, 0);
  net.layer(0).maskWeight(0, 1);
  net.layer(0).bias[0] = 0.7;
  const auto t = propagateIA(net, Box::uniform(2, -3, 3));
  CHECK(t.layers[0].lower[0] == 0.7);
  CHECK(t.layers[0].upper[0] == 0.7);
  CHECK(t.layers[0].preWidth(0) == 0.0);
}

TEST_CASE("bounds agree with an independent interval oracle") {
  oracle::Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    const MaskedNetwork net = oracle::randomNetwork(rng, {3, 6, 5, 2}, 1.0, 0.5, 0.3);
    const Box box = oracle::randomBox(rng, 3);
    const auto got = propagateIA(net, box);
    const auto want = oracle::intervalBounds(net, box);
    for (std::size_t j = 0; j < want.size(); ++j) {
      for (std::size_t i = 0; i < want[j].size(); ++i) {
        CHECK(got.layers[j].lower[i] == doctest::Approx(want[j][i].lo).epsilon(1e-12));
        CHECK(got.layers[j].upper[i] == doctest::Approx(want[j][i].hi).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("bounds are sound on sampled inputs") {
  oracle::Rng rng(6);
  const MaskedNetwork net = oracle::randomNetwork(rng, {2, 8, 8, 8, 1}, 1.0, 0.5, 0.2);
  const Box box = Box::uniform(2, -3, 3);
  const auto t = propagateIA(net, box);
  std::size_t bad = 0;
  for (int s = 0; s < 10000; ++s) {
    const auto pre = oracle::preactivations(net, oracle::randomPoint(rng, box));
    for (std::size_t j = 0; j < pre.size(); ++j) {
      for (std::size_t i = 0; i < pre[j].size(); ++i) {
        if (pre[j][i] < t.layers[j].lower[i] || pre[j][i] > t.layers[j].upper[i]) ++bad;
      }
    }
  }
  CHECK(bad == 0);
}

TEST_CASE("relu is nonexpansive and the width identity holds") {
  oracle::Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const MaskedNetwork net = oracle::randomNetwork(rng, {2, 7, 7, 7, 3}, 1.0, 0.5, 0.3);
    const auto tab = propagateIA(net, oracle::randomBox(rng, 2));
    for (const auto& l : tab.layers) {
      for (std::size_t i = 0; i < l.size(); ++i) {
        CHECK(l.lower[i] <= l.upper[i]);
        CHECK(l.actWidth(i) <= l.preWidth(i));
      }
    }
    CHECK(widthIdentityResidual(net, tab) < 1e-9);
  }
}

TEST_CASE("a point box has zero widths everywhere") {
  oracle::Rng rng(8);
  const MaskedNetwork net = oracle::randomNetwork(rng, {2, 4, 4, 1});
  const auto t = propagateIA(net, Box{{0.3, -0.2}, {0.3, -0.2}});
  for (const auto& l : t.layers) {
    for (std::size_t i = 0; i < l.size(); ++i) {
      CHECK(l.preWidth(i) == 0.0);
      CHECK(l.actWidth(i) == 0.0);
    }
  }
}

TEST_CASE("propagation input errors") {
  MaskedNetwork net({2, 2, 1});
  CHECK_THROWS_AS(propagateIA(net, Box::uniform(3, 0, 1)), Error);
  try {
    propagateIA(net, Box{{0.0, 1.0}, {1.0, 0.0}});
    FAIL("expected invalid domain");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::InvalidDomain));
  }
  net.layer(0).weights[0] = std::numeric_limits<double>::infinity();
  try {
    propagateIA(net, Box::uniform(2, 0, 1));
    FAIL("expected invalid network");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::InvalidNetwork));
  }
}

TEST_CASE("an empty prune leaves widths identical") {
  oracle::Rng rng(9);
  const MaskedNetwork net = oracle::randomNetwork(rng, {2, 5, 5, 1});
  const auto rep = checkMonotoneTightening(net, net, Box::uniform(2, -1, 1));
  CHECK(rep.monotone);
  CHECK(rep.violations == 0);
  for (double v : rep.max_tightening) CHECK(v == 0.0);
}

TEST_CASE("a changed surviving weight is not a pure prune") {
  oracle::Rng rng(10);
  const MaskedNetwork net = oracle::randomNetwork(rng, {2, 3, 1});
  MaskedNetwork other = net;
  other.layer(0).weights[0] += 0.1;
  try {
    checkMonotoneTightening(net, other, Box::uniform(2, -1, 1));
    FAIL("expected not-pure-pruning");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::NotPurePruning));
  }
  MaskedNetwork unmasked = net;
  unmasked.layer(0).maskWeight(0, 0);
  CHECK_THROWS_AS(checkMonotoneTightening(unmasked, net, Box::uniform(2, -1, 1)), Error);
}

TEST_CASE("pruning weights whose source interval contains zero never widens bounds") {
  oracle::Rng rng(11);
  const Box box = Box::uniform(2, -1, 1);
  for (int t = 0; t < 200; ++t) {
    const MaskedNetwork net = oracle::randomNetwork(rng, {2, 6, 6, 1}, 1.0, 0.5, 0.1);
    const auto tab = propagateIA(net, box);
    MaskedNetwork pruned = net;
    for (std::size_t j = 0; j < net.numLayers(); ++j) {
      const auto& lo = tab.sourceLower(j);
      const auto& hi = tab.sourceUpper(j);
      auto& l = pruned.layer(j);
      for (std::size_t r = 0; r < l.out_width; ++r) {
        for (std::size_t c = 0; c < l.in_width; ++c) {
          if (l.live(r, c) && lo[c] <= 0.0 && hi[c] >= 0.0 && rng.coin(0.3)) l.maskWeight(r, c);
        }
      }
    }
    const auto rep = checkMonotoneTightening(net, pruned, box);
    CHECK(rep.monotone);
  }
}

TEST_CASE("pruning a term whose source interval excludes zero can widen downstream bounds") {
  MaskedNetwork net({1, 2, 1, 1});
  net.layer(0).weights = {1.0, 0.5};
  net.layer(0).bias = {0.0, 1.0};
  net.layer(1).weights = {1.0, -1.0};
  net.layer(2).weights = {1.0};
  const Box box = Box::uniform(1, 0, 1);
  const auto before = propagateIA(net, box);
  CHECK(before.layers[1].actWidth(0) == 0.0);
  MaskedNetwork pruned = net;
  pruned.layer(1).maskWeight(0, 1);
  const auto rep = checkMonotoneTightening(net, pruned, box);
  CHECK_FALSE(rep.monotone);
  CHECK(rep.max_pre_violation[2] == doctest::Approx(1.0));
}

TEST_CASE("hidden weight prune on an all-ones 2-2-1 strictly tightens the output") {
  MaskedNetwork net({2, 2, 1});
  net.layer(0).weights = {1.0, 1.0, 1.0, 1.0};
  net.layer(1).weights = {1.0, 1.0};
  const auto v = checkStrictTightening(net, Box::uniform(2, 0, 1), WeightRef{0, 0, 1}, 0);
  CHECK(v.conditions_held);
  CHECK(v.strict_decrease_observed);
  CHECK(v.width_before == doctest::Approx(4.0));
  CHECK(v.width_after == doctest::Approx(3.0));
  CHECK(v.delta == doctest::Approx(1.0));
}

TEST_CASE("constant source fails the upstream range condition") {
  MaskedNetwork net({2, 2, 2, 1});
  for (auto& l : net.layers()) std::fill(l.weights.begin(), l.weights.end(), 1.0);
  net.layer(0).maskWeight(0, 0);
  net.layer(0).maskWeight(0, 1);
  net.layer(0).bias[0] = 1.0;
  const auto v = checkStrictTightening(net, Box::uniform(2, 0, 1), WeightRef{1, 0, 0}, 0);
  CHECK_FALSE(v.conditions[1]);
  CHECK_FALSE(v.conditions_held);
  CHECK_FALSE(v.strict_decrease_observed);
}

TEST_CASE("an always-off neuron on the only path fails the degenerate relu condition") {
  MaskedNetwork net({1, 1, 1, 1});
  net.layer(0).weights = {1.0};
  net.layer(1).weights = {1.0};
  net.layer(1).bias = {-5.0};
  net.layer(2).weights = {1.0};
  const auto v = checkStrictTightening(net, Box::uniform(1, 0, 1), WeightRef{0, 0, 0}, 0);
  CHECK(v.conditions[0]);
  CHECK(v.conditions[1]);
  CHECK(v.conditions[2]);
  CHECK_FALSE(v.conditions[3]);
  CHECK_FALSE(v.conditions_held);
}

TEST_CASE("a zero weight is a trivial prune") {
  MaskedNetwork net({1, 1, 1});
  net.layer(1).weights = {1.0};
  const auto v = checkStrictTightening(net, Box::uniform(1, 0, 1), WeightRef{0, 0, 0}, 0);
  CHECK_FALSE(v.conditions[0]);
  CHECK_FALSE(v.conditions_held);
}

TEST_CASE("width summary") {
  MaskedNetwork net({2, 1, 1});
  net.layer(0).weights = {1.0, -2.0};
  net.layer(0).bias = {0.5};
  net.layer(1).weights = {1.0};
  const auto s = widthSummary(propagateIA(net, Box::uniform(2, 0, 1)));
  CHECK(s.hidden.mean == doctest::Approx(3.0));
  CHECK(s.hidden.median == doctest::Approx(3.0));
  CHECK(s.hidden.max == doctest::Approx(3.0));
  CHECK(s.hidden.count == 1);
  REQUIRE(s.layer.size() == 2);
  CHECK(s.layer[1].mean == doctest::Approx(1.5));

  MaskedNetwork flat({2, 3, 1});
  const auto z = widthSummary(propagateIA(flat, Box::uniform(2, -1, 1)));
  CHECK(z.hidden.max == 0.0);
  CHECK(z.layer[1].max == 0.0);

  const auto dir = std::filesystem::temp_directory_path();
  writeBoundsCsv(propagateIA(net, Box::uniform(2, 0, 1)), dir / "pm_bounds.csv");
  writeWidthSummaryCsv(s, dir / "pm_widths.csv");
  std::ifstream in(dir / "pm_bounds.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("layer") == 0);
}
