#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vrdie/layoutgcn/gcn.hpp"
#include "vrdie/nn/gradcheck.hpp"

using namespace vrdie;
using namespace vrdie::gcn;
using nn::Tensor;

namespace {

using oracle::random_graph;

Tensor run_forward(const Gcn& g, const Neighborhoods& nb, const Tensor& x) {
  nn::Tape t(false);
  return g.forward(t, with_self(nb), t.constant(x)).value();
}

}  // namespace

TEST(NodeInit, ConcatenatesFontEmbedding) {
  nn::Tape t(false);
  FontEmbedding table(16, 1);
  auto cls = t.constant(Tensor(2, 4, 0.5));
  auto h = node_init(cls, {0, 3}, t.param(table.table()));
  EXPECT_EQ(h.value().cols(), 12u);
  EXPECT_NE(h.value()(0, 5), h.value()(1, 5));
  EXPECT_EQ(h.value()(0, 2), 0.5);
  Tensor zero(17, 8);
  auto z = node_init(cls, {0, 16}, t.constant(zero));
  for (std::size_t c = 4; c < 12; ++c) EXPECT_EQ(z.value()(1, c), 0.0);
  EXPECT_THROW(node_init(cls, {0, 17}, t.param(table.table())), std::out_of_range);
  EXPECT_THROW(node_init(cls, {0}, t.param(table.table())), nn::ShapeError);
}

TEST(GcnLayer, HandComputedCases) {
  GcnLayer layer;
  layer.w.push_back(nn::Parameter("w", Tensor(1, 1, 1.0)));
  layer.b = nn::Parameter("b", Tensor(1, 1, 0.0));
  nn::Tape t(false);
  // self-only neighbourhood
  auto one = gcn_layer(t, with_self({{{}}}), t.constant(Tensor(1, 1, -0.7)), layer, false);
  EXPECT_DOUBLE_EQ(one.value()[0], std::expm1(-0.7));
  Neighborhoods edge{{{1}, {0}}};
  auto h = t.constant(Tensor(2, 1, {1.0, 3.0}));
  auto no_skip = gcn_layer(t, with_self(edge), h, layer, false);
  EXPECT_EQ(no_skip.value(), Tensor(2, 1, {2.0, 2.0}));
  auto skip = gcn_layer(t, with_self(edge), h, layer, true);
  EXPECT_EQ(skip.value(), Tensor(2, 1, {3.0, 5.0}));
}

TEST(GcnLayer, EmptyGraphRejected) {
  GcnLayer layer;
  layer.w.push_back(nn::Parameter("w", Tensor(1, 1, 1.0)));
  layer.b = nn::Parameter("b", Tensor(1, 1, 0.0));
  nn::Tape t(false);
  EXPECT_THROW(gcn_layer(t, {{}}, t.constant(Tensor(0, 1)), layer, false), nn::ShapeError);
}

TEST(GcnForward, SingleLayerEqualsOneApplication) {
  nn::Rng rng(3);
  GcnConfig cfg{5, 4, 1, 2, true};
  Gcn g(cfg, 9);
  auto rg = random_graph(rng, 5, 2);
  Tensor x = testutil::random_tensor(rg.n, 5, rng);
  nn::Tape t(false);
  auto layer = gcn_layer(t, with_self(rg.lists), t.constant(x), g.layers()[0], false);
  EXPECT_EQ(run_forward(g, rg.lists, x), layer.value());
}

TEST(GcnForward, MatchesReferenceOn200Graphs) {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    nn::Rng rng(seed);
    const std::size_t types = 1 + rng.below(2);
    auto rg = random_graph(rng, 6, types);
    GcnConfig cfg{3 + rng.below(4), 2 + rng.below(4), 1 + rng.below(3), types, rng.bernoulli(0.7)};
    Gcn g(cfg, seed + 100);
    Tensor x = testutil::random_tensor(rg.n, cfg.in_dim, rng);
    Tensor got = run_forward(g, rg.lists, x);
    ASSERT_EQ(got.rows(), rg.n);
    const auto h = oracle::reference_forward(g, rg.lists, x);
    for (std::size_t i = 0; i < rg.n; ++i)
      for (std::size_t c = 0; c < cfg.hidden_dim; ++c) worst = std::max(worst, std::abs(got(i, c) - h[i][c]));
  }
  EXPECT_LT(worst, 1e-10);
}

// With one edge type the multi-type average is the plain single-type layer:
// mean over N(i) of the projected features, plus bias, through elu.
TEST(GcnForward, SingleTypeBitEqualsPlainLayer) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    nn::Rng rng(seed);
    auto rg = random_graph(rng, 6, 1);
    const std::size_t in = 2 + rng.below(4), out = 2 + rng.below(4);
    GcnConfig cfg{in, out, 1, 1, false};
    Gcn g(cfg, seed);
    Tensor x = testutil::random_tensor(rg.n, in, rng);
    Tensor got = run_forward(g, rg.lists, x);
    const Tensor& W = g.layers()[0].w[0].value;
    const Tensor& b = g.layers()[0].b.value;
    Tensor proj = nn::matmul(x, W);
    for (std::size_t i = 0; i < rg.n; ++i) {
      std::vector<std::size_t> nb = rg.lists[0][i];
      nb.push_back(i);
      std::sort(nb.begin(), nb.end());
      for (std::size_t c = 0; c < out; ++c) {
        double acc = 0;
        for (std::size_t j : nb) acc += proj(j, c);
        const double v = acc / static_cast<double>(nb.size()) + b(0, c);
        const double expect = v > 0 ? v : std::expm1(v);
        ASSERT_EQ(got(i, c), expect) << "seed " << seed;
      }
    }
  }
}

TEST(GcnForward, PermutationEquivariance) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    nn::Rng rng(seed);
    auto rg = random_graph(rng, 6, 2);
    GcnConfig cfg{4, 3, 2, 2, true};
    Gcn g(cfg, seed);
    Tensor x = testutil::random_tensor(rg.n, 4, rng);
    std::vector<std::size_t> perm(rg.n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);  // node i becomes perm[i]
    Tensor px(rg.n, 4);
    Neighborhoods pl(2, std::vector<std::vector<std::size_t>>(rg.n));
    for (std::size_t i = 0; i < rg.n; ++i) {
      for (std::size_t c = 0; c < 4; ++c) px(perm[i], c) = x(i, c);
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t j : rg.lists[t][i]) pl[t][perm[i]].push_back(perm[j]);
    }
    Tensor a = run_forward(g, rg.lists, x), b = run_forward(g, pl, px);
    for (std::size_t i = 0; i < rg.n; ++i)
      for (std::size_t c = 0; c < 3; ++c) ASSERT_NEAR(a(i, c), b(perm[i], c), 1e-12) << "seed " << seed;
  }
}

TEST(GcnForward, IsolatedNodeIgnoresOthers) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    nn::Rng rng(seed);
    auto rg = random_graph(rng, 6, 2);
    const std::size_t iso = rg.n;  // extra node without edges
    for (auto& per_type : rg.lists) per_type.emplace_back();
    GcnConfig cfg{3, 3, 2, 2, true};
    Gcn g(cfg, seed);
    Tensor x = testutil::random_tensor(rg.n + 1, 3, rng);
    Tensor y = x;
    for (std::size_t i = 0; i < iso; ++i)
      for (std::size_t c = 0; c < 3; ++c) y(i, c) += rng.normal();
    Tensor a = run_forward(g, rg.lists, x), b = run_forward(g, rg.lists, y);
    for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(a(iso, c), b(iso, c));
  }
}

TEST(GcnForward, GradientCheck) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    nn::Rng rng(seed);
    auto rg = random_graph(rng, 5, 2);
    GcnConfig cfg{4, 3, 2, 2, true};
    Gcn g(cfg, seed);
    nn::Parameter x("x", testutil::random_tensor(rg.n, 4, rng));
    Tensor r = testutil::random_tensor(rg.n, 3, rng);
    auto params = nn::parameters_of(g);
    params.push_back(&x);
    auto nb = with_self(rg.lists);
    auto rep = nn::grad_check(
        [&](nn::Tape& t) { return nn::sum(nn::mul(g.forward(t, nb, t.param(x)), t.constant(r))); }, params);
    ASSERT_TRUE(rep.passed) << rep.summary();
  }
}
