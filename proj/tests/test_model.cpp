#include "coreguide/datagen.hpp"
#include "coreguide/error.hpp"
#include "coreguide/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>

using namespace coreguide;

namespace {

ModelConfig small_cfg(int d = 2, int layers = 2, int hidden = 4) {
  ModelConfig c;
  c.d = d;
  c.layers = layers;
  c.hidden = hidden;
  return c;
}

Matrix rows4() {
  Matrix h(4, 2);
  h << 1, 2, 3, 4, 5, 6, 7, 8;
  return h;
}

// Independent cross-entropy oracle.
double bce_sum(const std::vector<double>& p, const std::vector<std::uint8_t>& y) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    s += y[i] ? -std::log(p[i]) : -std::log(1 - p[i]);
  return s;
}

Cnf rename(const Cnf& c, const std::vector<std::uint32_t>& perm) {
  Cnf out = c;
  for (auto& cl : out.clauses)
    for (Lit& l : cl.lits)
      l.var = perm[l.var - 1];
  return out;
}

} // namespace

TEST(ModelConfig, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  for (auto edit : std::vector<void (*)(ModelConfig&)>{
           [](ModelConfig& m) { m.d = 0; }, [](ModelConfig& m) { m.layers = 0; },
           [](ModelConfig& m) { m.hidden = 0; }, [](ModelConfig& m) { m.alpha = 1.0; },
           [](ModelConfig& m) { m.alpha = 0.0; }, [](ModelConfig& m) { m.gamma = -1; },
           [](ModelConfig& m) { m.lr = -1e-3; }}) {
    ModelConfig bad;
    edit(bad);
    EXPECT_THROW(bad.validate(), Error);
  }
}

TEST(InitParams, DeterministicShapesZeroBias) {
  ModelConfig c = small_cfg(2, 3, 4);
  ModelParams a = init_params(c, 9), b = init_params(c, 9), other = init_params(c, 10);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == other);
  EXPECT_EQ(a.hidden.weight.rows(), 8);
  EXPECT_EQ(a.hidden.weight.cols(), 4);
  EXPECT_EQ(a.init.weight.rows(), 2);
  EXPECT_EQ(a.init.weight.cols(), 4);
  ASSERT_EQ(a.conv.size(), 3u);
  EXPECT_EQ(a.conv[0].weight.rows(), 8);
  EXPECT_EQ(a.conv[0].weight.cols(), 4);
  EXPECT_EQ(a.output.weight.rows(), 4);
  EXPECT_EQ(a.output.weight.cols(), 2);
  a.for_each([](const std::string& name, const Matrix& m) {
    if (name.ends_with(".bias"))
      EXPECT_TRUE((m.array() == 0.0).all()) << name;
  });
  // Xavier bound per tensor.
  const double bound = std::sqrt(6.0 / (8 + 4));
  EXPECT_LE(a.hidden.weight.cwiseAbs().maxCoeff(), bound);
  c.shared_weights = true;
  EXPECT_EQ(init_params(c, 1).conv.size(), 1u);
}

TEST(Embed, HandSetWeights) {
  ModelConfig c = small_cfg(2, 1, 2);
  ModelParams p = init_params(c, 1);
  p.init.weight.setZero();
  p.init.weight(0, 0) = 1;
  p.init.weight(1, 1) = 1;
  Matrix h = embed_nodes(p, {{2, -1}, {0, 1}, {2, -1}});
  EXPECT_EQ(h.row(0), (Eigen::RowVectorXd(4) << 2, -1, 0, 0).finished());
  EXPECT_EQ(h.row(0), h.row(2));
  p.init.weight.setZero();
  EXPECT_TRUE((embed_nodes(p, {{5, 1}, {3, -1}}).array() == 0).all());
}

TEST(Flip, Examples) {
  Matrix f = flip(rows4());
  Matrix expect(4, 2);
  expect << 5, 6, 7, 8, 1, 2, 3, 4;
  EXPECT_EQ(f, expect);
  EXPECT_EQ(flip(f), rows4());
  Matrix two(2, 1);
  two << 1, 2;
  EXPECT_EQ(flip(two), (Matrix(2, 1) << 2, 1).finished());
  try {
    flip(Matrix::Zero(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OddNodeCount);
  }
}

TEST(Flip, LiteralBlocksKeepTrailingRows) {
  Matrix h(5, 1);
  h << 1, 2, 3, 4, 9;
  EXPECT_EQ(flip_literals(h, 2), (Matrix(5, 1) << 3, 4, 1, 2, 9).finished());
}

TEST(Wgcn, ZeroWeightsGiveZero) {
  ModelConfig c = small_cfg(2, 1, 2);
  ModelParams p = init_params(c, 3);
  p.conv[0].weight.setZero();
  GraphInput g = encode_graph(Cnf::from_ints(2, {{1, 2}, {-1, 2}}));
  Matrix h0 = embed_nodes(p, g.features);
  EXPECT_TRUE((wgcn_forward(p, c, g.adjacency, h0).array() == 0).all());
}

TEST(Wgcn, HandComputedTwoNodeIteration) {
  ModelConfig c = small_cfg(1, 1, 1);
  ModelParams p = init_params(c, 1);
  // (x1 ∨ ¬x1): one edge, A' = [[0, .5], [.5, 0]], features (1, +1), (1, -1).
  GraphInput g = encode_graph(Cnf::from_ints(1, {{1, -1}}));
  p.init.weight = Matrix::Identity(2, 2);
  p.init.bias.setZero();
  Matrix h0 = embed_nodes(p, g.features);
  p.conv[0].weight.resize(4, 2);
  p.conv[0].weight << 1, 0, 0, 1, 0, 1, 1, 0;
  p.conv[0].bias.resize(1, 2);
  p.conv[0].bias << 0.1, -2;
  Matrix h1 = wgcn_forward(p, c, g.adjacency, h0);
  // Row 0 input (.5, -.5, 1, -1); row 1 input (.5, .5, 1, 1).
  EXPECT_NEAR(h1(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(h1(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(h1(1, 0), 1.6, 1e-15);
  EXPECT_NEAR(h1(1, 1), 0.0, 1e-15);
}

TEST(Wgcn, OutputsNonNegative) {
  Rng rng(2);
  ModelConfig c = small_cfg(3, 3, 4);
  ModelParams p = init_params(c, 4);
  for (int i = 0; i < 20; ++i) {
    GraphInput g = encode_graph(gen_random_ksat(10, 30, 3, rng));
    Matrix h = wgcn_forward(p, c, g.adjacency, embed_nodes(p, g.features));
    EXPECT_GE(h.minCoeff(), 0.0);
  }
}

TEST(Wgcn, DimensionMismatchThrows) {
  ModelConfig c = small_cfg(2, 1, 2);
  ModelParams p = init_params(c, 1);
  GraphInput g = encode_graph(Cnf::from_ints(2, {{1, 2}}));
  EXPECT_THROW(wgcn_forward(p, c, g.adjacency, Matrix::Zero(6, 4)), Error);
  EXPECT_THROW(wgcn_forward(p, c, g.adjacency, Matrix::Zero(4, 3)), Error);
}

TEST(Head, SoftmaxProperties) {
  EXPECT_DOUBLE_EQ(core_probability(std::log(3.0), 0.0), 0.75);
  for (double z : {-50.0, -1.0, 0.0, 3.0, 700.0})
    EXPECT_DOUBLE_EQ(core_probability(z, z), 0.5);
  EXPECT_NEAR(core_probability(2.0, -1.0), core_probability(12.0, 9.0), 1e-15);
  const double p = core_probability(0.3, -0.2), q = core_probability(-0.2, 0.3);
  EXPECT_NEAR(p + q, 1.0, 1e-16);
}

TEST(Head, ZeroOutputLayerGivesHalf) {
  ModelConfig c = small_cfg(2, 2, 3);
  ModelParams p = init_params(c, 5);
  p.output.weight.setZero();
  Prediction pr = predict(p, c, Cnf::from_ints(3, {{1, 2}, {-2, 3}, {1, -3}}));
  ASSERT_EQ(pr.probs.size(), 3u);
  for (double x : pr.probs)
    EXPECT_EQ(x, 0.5);
}

TEST(Head, PairingChoosesPartnerRow) {
  ModelConfig c = small_cfg(1, 1, 1);
  ModelParams p = init_params(c, 1);
  // Hidden unit reads only the partner half of the concatenation.
  p.hidden.weight.setZero();
  p.hidden.weight(2, 0) = 1;
  p.hidden.bias.setZero();
  p.output.weight.setZero();
  p.output.weight(0, 0) = 1;
  p.output.bias.setZero();
  Matrix h(4, 2); // n = 2, rows x1 x2 ¬x1 ¬x2
  h << 0, 0, 0, 0, 1, 0, 2, 0;
  Matrix half = head_logits(p, c, h, 2);
  EXPECT_EQ(half(0, 0), 1.0); // x1 pairs with ¬x1 (row 2)
  EXPECT_EQ(half(1, 0), 2.0);
  c.pairing = Pairing::Mirror;
  Matrix mirror = head_logits(p, c, h, 2);
  EXPECT_EQ(mirror(0, 0), 2.0); // x1 pairs with row N-1
  EXPECT_EQ(mirror(1, 0), 1.0);
}

TEST(Loss, FocalHandValue) {
  auto r = focal_loss({0.9}, {1}, 0.25, 2.0);
  EXPECT_NEAR(r.loss, -0.25 * 0.01 * std::log(0.9), 1e-18);
  EXPECT_NEAR(r.loss, 2.634e-4, 1e-7);
  EXPECT_LT(focal_loss({1.0 - 1e-9}, {1}, 0.25, 2.0).loss, 1e-12);
}

TEST(Loss, FocalReducesToHalfCrossEntropy) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> p(1 + it % 20);
    std::vector<std::uint8_t> y(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = u(rng);
      y[i] = rng() & 1;
    }
    EXPECT_NEAR(focal_loss(p, y, 0.5, 0.0).loss, 0.5 * bce_sum(p, y), 1e-12);
    EXPECT_NEAR(cross_entropy_loss(p, y).loss, bce_sum(p, y), 1e-12);
  }
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  ModelConfig cfg;
  for (LossKind k : {LossKind::Focal, LossKind::CrossEntropy, LossKind::Kl}) {
    cfg.loss = k;
    for (int it = 0; it < 20; ++it) {
      std::vector<double> p(5);
      std::vector<std::uint8_t> y(5);
      for (int i = 0; i < 5; ++i) {
        p[i] = u(rng);
        y[i] = rng() & 1;
      }
      LossResult r = compute_loss(cfg, p, y);
      for (int i = 0; i < 5; ++i) {
        auto up = p, down = p;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double fd =
            (compute_loss(cfg, up, y).loss - compute_loss(cfg, down, y).loss) / 2e-6;
        EXPECT_NEAR(r.grad[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(Loss, ClampZeroesGradient) {
  auto r = cross_entropy_loss({0.0, 1.0}, {1, 0});
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_EQ(r.grad[0], 0.0);
  EXPECT_EQ(r.grad[1], 0.0);
}

TEST(Loss, KlDiffersFromCrossEntropyOnlyBySmoothing) {
  std::vector<double> p{0.3, 0.8};
  std::vector<std::uint8_t> y{1, 0};
  EXPECT_NE(kl_loss(p, y, 0.1).loss, cross_entropy_loss(p, y).loss);
  EXPECT_NEAR(kl_loss(p, y, 0.0).loss, cross_entropy_loss(p, y).loss, 1e-12);
  EXPECT_GE(kl_loss({0.95}, {1}, 0.1).loss, 0.0);
}

TEST(Loss, LengthMismatchThrows) {
  EXPECT_THROW(focal_loss({0.5, 0.5}, {1}, 0.25, 2), Error);
}

TEST(Predict, DeterministicAndSized) {
  ModelConfig c = small_cfg();
  ModelParams p = init_params(c, 2);
  Cnf cnf = Cnf::from_ints(4, {{1, 2, -3}, {-1, 4}, {2, 3, 4}});
  Prediction a = predict(p, c, cnf), b = predict(p, c, cnf);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_EQ(a.probs.size(), 4u);
  for (double x : a.probs) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_GE(a.elapsed_ms, 0.0);
}

TEST(Predict, EdgelessFallsBackToUniform) {
  ModelConfig c = small_cfg();
  Prediction p = predict(init_params(c, 1), c, Cnf::from_ints(2, {{1}, {-2}}));
  EXPECT_TRUE(p.uniform_fallback);
  EXPECT_EQ(p.probs, std::vector<double>(2, 0.5));
}

TEST(Predict, RenamingVariablesPermutesProbabilities) {
  Rng rng(21);
  // Mirror pairing ties a variable to a position-dependent partner row, so
  // only the half pairing is equivariant under renaming.
  for (GraphKind kind : {GraphKind::Wlig, GraphKind::Lcg}) {
      ModelConfig c = small_cfg(3, 2, 5);
      c.graph.kind = kind;
      ModelParams p = init_params(c, 7);
      p.for_each([&](const std::string&, Matrix& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i)
          m.data()[i] += std::uniform_real_distribution<double>(-0.1, 0.1)(rng);
      });
      for (int it = 0; it < 10; ++it) {
        Cnf cnf = gen_random_ksat(12, 40, 3, rng);
        std::vector<std::uint32_t> perm(12);
        std::iota(perm.begin(), perm.end(), 1u);
        std::shuffle(perm.begin(), perm.end(), rng);
        Prediction a = predict(p, c, cnf);
        Prediction b = predict(p, c, rename(cnf, perm));
        for (std::uint32_t v = 0; v < 12; ++v)
          EXPECT_NEAR(a.probs[v], b.probs[perm[v] - 1], 1e-9);
      }
    }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ModelConfig c = small_cfg(2, 2, 3);
  c.loss = LossKind::Kl;
  c.pairing = Pairing::Mirror;
  c.graph.kind = GraphKind::Lcg;
  ModelParams p = init_params(c, 12);
  p.hidden.bias(0, 1) = -0.0;
  p.output.bias(0, 0) = 1.0 / 3.0;
  const std::string bytes = serialize_checkpoint(p, c);
  Checkpoint ck = deserialize_checkpoint(bytes);
  EXPECT_TRUE(ck.params == p);
  EXPECT_EQ(ck.config, c);
  EXPECT_EQ(serialize_checkpoint(ck.params, ck.config), bytes);
}

TEST(Checkpoint, ByteLayout) {
  ModelConfig c = small_cfg(1, 1, 1);
  ModelParams p = init_params(c, 1);
  const std::string b = serialize_checkpoint(p, c);
  ASSERT_EQ(b.substr(0, 4), "IBNW");
  std::uint32_t version, len;
  std::memcpy(&version, b.data() + 4, 4);
  std::memcpy(&len, b.data() + 8, 4);
  EXPECT_EQ(version, 1u);
  std::size_t pos = 12 + len;
  EXPECT_EQ(b[12], '{');
  std::uint16_t name_len;
  std::memcpy(&name_len, b.data() + pos, 2);
  EXPECT_EQ(b.substr(pos + 2, name_len), "init.weight");
  pos += 2 + name_len;
  EXPECT_EQ(static_cast<int>(b[pos]), 2);
  std::uint32_t r, k;
  std::memcpy(&r, b.data() + pos + 1, 4);
  std::memcpy(&k, b.data() + pos + 5, 4);
  EXPECT_EQ(r, 2u);
  EXPECT_EQ(k, 2u);
  double first;
  std::memcpy(&first, b.data() + pos + 9, 8);
  EXPECT_EQ(first, p.init.weight(0, 0));
  // Four 2x2/1x2/... tensors follow; total size is fixed by the shapes.
  std::size_t payload = 0;
  p.for_each([&](const std::string& name, const Matrix& m) {
    payload += 2 + name.size() + 1 + (name.ends_with(".bias") ? 4 : 8) + 8 * m.size();
  });
  EXPECT_EQ(b.size(), 12 + len + payload);
}

TEST(Checkpoint, Errors) {
  ModelConfig c = small_cfg(2, 1, 2);
  ModelParams p = init_params(c, 1);
  const std::string good = serialize_checkpoint(p, c);
  auto code_of = [](const std::string& bytes) {
    try {
      deserialize_checkpoint(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of(bad_magic), Errc::BadMagic);
  std::string bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(code_of(bad_version), Errc::VersionMismatch);
  EXPECT_EQ(code_of(good.substr(0, good.size() - 3)), Errc::TruncatedTensor);
  ModelConfig wider = c;
  wider.d = 3;
  EXPECT_EQ(code_of(serialize_checkpoint(p, wider)), Errc::ShapeMismatch);
}
