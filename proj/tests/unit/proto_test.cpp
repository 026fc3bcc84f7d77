#include <gtest/gtest.h>

#include "support.hpp"

using namespace protofsl;
using testing_support::Gen;

namespace {

Matrix<double> random_matrix(Gen& gen, Eigen::Index rows, Eigen::Index cols) {
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gen.normal();
  return m;
}

EmbeddingBatch<double> labelled(Matrix<double> v, std::vector<std::size_t> labels) { return {std::move(v), std::move(labels)}; }

// Class-major labels: k repeated `per` times for k < n.
std::vector<std::size_t> class_major(std::size_t n, std::size_t per) {
  std::vector<std::size_t> l;
  for (std::size_t k = 0; k < n; ++k) l.insert(l.end(), per, k);
  return l;
}

// Episode of placeholder ids; the images are supplied directly.
Episode synthetic_episode(std::size_t n_way, std::size_t k_shot, std::size_t n_query) {
  Episode ep;
  for (std::size_t k = 0; k < n_way; ++k) ep.classes.push_back(kAllClasses[k]);
  for (std::size_t k = 0; k < n_way; ++k)
    for (std::size_t i = 0; i < k_shot; ++i) ep.support.push_back({"s" + std::to_string(k) + "-" + std::to_string(i), k});
  for (std::size_t k = 0; k < n_way; ++k)
    for (std::size_t i = 0; i < n_query; ++i) ep.query.push_back({"q" + std::to_string(k) + "-" + std::to_string(i), k});
  return ep;
}

template <typename T>
Tensor<T> random_images(std::size_t n, std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<T> x({n, 3, side, side});
  for (auto& v : x.values()) v = static_cast<T>(rng.normal());
  return x;
}

}  // namespace

// compute_prototypes

TEST(Prototypes, SingleShotEqualsTheVector) {
  Gen gen(1);
  const auto v = random_matrix(gen, 4, 5);
  const auto p = compute_prototypes(labelled(v, {0, 1, 2, 3}), 4);
  EXPECT_TRUE(p.prototypes.isApprox(v, 0.0));
}

TEST(Prototypes, Midpoint) {
  Matrix<double> v(2, 2);
  v << 0, 0, 2, 2;
  const auto p = compute_prototypes(labelled(v, {0, 0}), 1);
  EXPECT_DOUBLE_EQ(p.prototypes(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.prototypes(0, 1), 1.0);
}

TEST(Prototypes, MatchesPerClassAccumulationOracle) {
  Gen gen(2);
  const auto v = random_matrix(gen, 60, 8);
  auto labels = class_major(6, 10);
  gen.rng().shuffle(labels);
  const auto p = compute_prototypes(labelled(v, labels), 6);
  for (std::size_t k = 0; k < 6; ++k) {
    for (Eigen::Index j = 0; j < 8; ++j) {
      double s = 0;
      int n = 0;
      for (std::size_t i = 0; i < 60; ++i)
        if (labels[i] == k) s += v(static_cast<Eigen::Index>(i), j), ++n;
      EXPECT_NEAR(p.prototypes(static_cast<Eigen::Index>(k), j), s / n, 1e-6);
    }
  }
}

TEST(Prototypes, MissingClassAndBadLabelsAreErrors) {
  Gen gen(3);
  EXPECT_THROW(compute_prototypes(labelled(random_matrix(gen, 3, 2), {0, 0, 2}), 3), ValidationError);
  EXPECT_THROW(compute_prototypes(labelled(random_matrix(gen, 3, 2), {0, 1, 5}), 3), ValidationError);
  EXPECT_THROW(compute_prototypes(labelled(random_matrix(gen, 3, 2), {0, 1}), 2), ValidationError);
  Matrix<double> bad = random_matrix(gen, 2, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(compute_prototypes(labelled(bad, {0, 1}), 2), NumericError);
}

TEST(Prototypes, CommuteWithAffineMaps) {
  Gen gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(gen.size(2, 6)), k = static_cast<Eigen::Index>(gen.size(1, 5)),
               d = static_cast<Eigen::Index>(gen.size(1, 12));
    const auto v = random_matrix(gen, n * k, d);
    const auto labels = class_major(static_cast<std::size_t>(n), static_cast<std::size_t>(k));
    const double a = gen.real(-3, 3);
    Eigen::RowVectorXd b(d);
    for (Eigen::Index j = 0; j < d; ++j) b(j) = gen.normal();
    const Matrix<double> w = (a * v).rowwise() + b;
    const auto p = compute_prototypes(labelled(v, labels), static_cast<std::size_t>(n));
    const auto q = compute_prototypes(labelled(w, labels), static_cast<std::size_t>(n));
    const Matrix<double> expect = (a * p.prototypes).rowwise() + b;
    EXPECT_LT((q.prototypes - expect).cwiseAbs().maxCoeff(), 1e-6);
  }
}

// classify_queries

TEST(Classify, ZeroDistanceDominates) {
  Matrix<double> protos(3, 2);
  protos << 0, 0, 1, 1, -2, 3;
  Matrix<double> q(1, 2);
  q << 1, 1;
  const auto r = classify_queries(labelled(q, {}), PrototypeSet<double>{protos, {}});
  EXPECT_EQ(r.predictions[0], 1u);
  Eigen::Index arg;
  r.probabilities.row(0).maxCoeff(&arg);
  EXPECT_EQ(arg, 1);
  EXPECT_DOUBLE_EQ(r.logits(0, 1), 0.0);
}

TEST(Classify, EquidistantGivesUniformRow) {
  Matrix<double> protos(4, 2);
  protos << 1, 0, 0, 1, -1, 0, 0, -1;
  Matrix<double> q = Matrix<double>::Zero(1, 2);
  const auto r = classify_queries(labelled(q, {}), PrototypeSet<double>{protos, {}});
  for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(r.probabilities(0, k), 0.25, 1e-12);
  EXPECT_EQ(r.predictions[0], 0u);  // tie goes to the lowest index
}

TEST(Classify, ScalarSoftmaxOracle) {
  Matrix<double> protos(2, 1);
  protos << 1, 2;  // squared distances 1 and 4 from the origin
  const auto r = classify_queries(labelled(Matrix<double>::Zero(1, 1), {}), PrototypeSet<double>{protos, {}});
  EXPECT_NEAR(r.probabilities(0, 0), 0.9526, 1e-4);
  EXPECT_NEAR(r.probabilities(0, 1), 0.0474, 1e-4);
  const double e1 = std::exp(-1.0), e4 = std::exp(-4.0);
  EXPECT_NEAR(r.probabilities(0, 0), e1 / (e1 + e4), 1e-12);
}

TEST(Classify, DuplicatePrototypesBreakTiesLow) {
  Gen gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix<double> protos = random_matrix(gen, 5, 3);
    const auto j = static_cast<Eigen::Index>(gen.size(0, 3));
    protos.row(4) = protos.row(j);
    const Matrix<double> q = protos.row(j);
    const auto r = classify_queries(labelled(q, {}), PrototypeSet<double>{protos, {}});
    EXPECT_EQ(r.predictions[0], static_cast<std::size_t>(j));
  }
}

TEST(Classify, DimensionMismatchIsAnError) {
  Gen gen(6);
  EXPECT_THROW(classify_queries(labelled(random_matrix(gen, 2, 3), {}), PrototypeSet<double>{random_matrix(gen, 2, 4), {}}),
               ValidationError);
}

TEST(Classify, TranslationInvarianceAndSoftmaxRows) {
  Gen gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(gen.size(2, 6)), d = static_cast<Eigen::Index>(gen.size(1, 16)),
               b = static_cast<Eigen::Index>(gen.size(1, 10));
    const auto protos = random_matrix(gen, n, d);
    const auto q = random_matrix(gen, b, d);
    Eigen::RowVectorXd t(d);
    for (Eigen::Index j = 0; j < d; ++j) t(j) = gen.real(-5, 5);
    const auto r = classify_queries(labelled(q, {}), PrototypeSet<double>{protos, {}});
    const auto s = classify_queries(labelled((q.rowwise() + t).eval(), {}),
                                    PrototypeSet<double>{(protos.rowwise() + t).eval(), {}});
    EXPECT_EQ(r.predictions, s.predictions);
    for (Eigen::Index i = 0; i < b; ++i) {
      EXPECT_NEAR(r.probabilities.row(i).sum(), 1.0, 1e-6);
      for (Eigen::Index k = 0; k < n; ++k) {
        EXPECT_GE(r.probabilities(i, k), 0.0);
        EXPECT_LE(r.probabilities(i, k), 1.0);
        EXPECT_NEAR(r.probabilities(i, k), s.probabilities(i, k), 1e-6);
        EXPECT_NEAR(r.logits(i, k) - r.logits(i, 0), s.logits(i, k) - s.logits(i, 0), 1e-6);
      }
    }
  }
}

// episode_loss

TEST(EpisodeLoss, UniformLogitsGiveLogOfWays) {
  const Matrix<double> logits = Matrix<double>::Constant(7, 6, -3.5);
  EXPECT_NEAR(episode_loss(logits, {0, 1, 2, 3, 4, 5, 0}), 1.791759, 1e-6);
  EXPECT_NEAR(episode_loss(logits, {2, 2, 2, 2, 2, 2, 2}), std::log(6.0), 1e-12);
}

TEST(EpisodeLoss, SaturatesToZero) {
  Matrix<double> logits = Matrix<double>::Zero(3, 4);
  logits(0, 1) = logits(1, 3) = logits(2, 0) = 1000.0;
  EXPECT_NEAR(episode_loss(logits, {1, 3, 0}), 0.0, 1e-6);
}

TEST(EpisodeLoss, MatchesLogSumExpOracleAndGradient) {
  Gen gen(8);
  const auto logits = random_matrix(gen, 4, 3);
  const std::vector<std::size_t> labels{2, 0, 1, 1};
  auto oracle = [&](const Matrix<double>& l) {
    double total = 0;
    for (Eigen::Index b = 0; b < 4; ++b) {
      double z = 0;
      for (Eigen::Index k = 0; k < 3; ++k) z += std::exp(l(b, k));
      total += std::log(z) - l(b, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)]));
    }
    return total / 4;
  };
  const auto lg = episode_loss_with_grad(logits, labels);
  EXPECT_NEAR(lg.loss, oracle(logits), 1e-9);
  auto m = logits;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double fd = testing_support::central_difference(m.data(), static_cast<std::size_t>(i), 1e-6,
                                                          [&] { return oracle(m); });
    EXPECT_NEAR(lg.d_logits.data()[i], fd, 1e-8);
  }
}

TEST(EpisodeLoss, NonFiniteLogitsAreErrors) {
  Matrix<double> logits = Matrix<double>::Zero(2, 2);
  logits(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(episode_loss(logits, {0, 1}), NumericError);
  EXPECT_THROW(episode_loss(Matrix<double>(Matrix<double>::Zero(2, 2)), {0, 2}), ValidationError);
}

TEST(PrototypeBackward, MatchesFiniteDifferencesOfTheLoss) {
  Gen gen(9);
  const auto labels_s = class_major(3, 2), labels_q = class_major(3, 2);
  auto s = random_matrix(gen, 6, 4), q = random_matrix(gen, 6, 4);
  auto loss = [&] {
    const auto p = compute_prototypes(labelled(s, labels_s), 3);
    return episode_loss(classify_queries(labelled(q, labels_q), p).logits, labels_q);
  };
  const auto p = compute_prototypes(labelled(s, labels_s), 3);
  const auto c = classify_queries(labelled(q, labels_q), p);
  const auto g = prototype_backward(labelled(s, labels_s), labelled(q, labels_q), p,
                                    episode_loss_with_grad(c.logits, labels_q).d_logits);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(g.d_support.data()[i], testing_support::central_difference(s.data(), static_cast<std::size_t>(i), 1e-6, loss),
                1e-7);
    EXPECT_NEAR(g.d_query.data()[i], testing_support::central_difference(q.data(), static_cast<std::size_t>(i), 1e-6, loss),
                1e-7);
  }
}

// End to end through the tiny encoder

TEST(TinyEncoderGradients, Float64ElementwiseCheck) {
  auto enc = Encoder<double>::create(Backbone::tiny_test_cnn, 3);
  const auto ep = synthetic_episode(3, 2, 1);
  auto x = random_images<double>(9, 16, 4);
  episode_gradients(enc, x, ep);
  auto loss = [&] { return episode_loss_train_mode(enc, x, ep); };
  std::size_t checked = 0;
  enc.network().visit("", nn::ParamVisitor<double>([&](const std::string& name, nn::Parameter<double>& p) {
                        if (!p.trainable) return;
                        for (std::size_t i = 0; i < p.value.size(); ++i, ++checked) {
                          // Richardson-extrapolated central difference: O(h^4) truncation
                          const double d1 = testing_support::central_difference(p.value.data(), i, 1e-4, loss);
                          const double d2 = testing_support::central_difference(p.value.data(), i, 2e-4, loss);
                          const double fd = (4 * d1 - d2) / 3;
                          EXPECT_LT(testing_support::rel_error(p.grad[i], fd, 1e-5), 1e-6)
                              << name << "[" << i << "] " << p.grad[i] << " vs " << fd;
                        }
                      }));
  EXPECT_EQ(checked, 3920u);
}

TEST(Embed, ShapesAndEvalModeDeterminism) {
  const auto enc = Encoder<float>::create(Backbone::tiny_test_cnn, 1);
  auto x = random_images<float>(1, 32, 2);
  const auto one = embed(enc, x);
  EXPECT_EQ(one.vectors.rows(), 1);
  EXPECT_EQ(one.vectors.cols(), 16);
  Tensor<float> dup({3, 3, 32, 32});
  for (std::size_t n = 0; n < 3; ++n) std::copy(x.data(), x.data() + x.size(), dup.data() + n * x.size());
  const auto three = embed(enc, dup);
  EXPECT_EQ(three.vectors.row(0), three.vectors.row(1));
  EXPECT_EQ(three.vectors.row(0), three.vectors.row(2));
  // No batch coupling in eval mode; GEMM blocking may differ by a few ulps.
  EXPECT_TRUE(three.vectors.row(0).isApprox(one.vectors.row(0), 1e-6f));
}

class TinyPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    manifest_ = new DatasetManifest(testing_support::synthetic_manifest(1.0, 10, 60, 3, 6, 32));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    manifest_ = nullptr;
  }
  static DatasetManifest* manifest_;
};
DatasetManifest* TinyPipeline::manifest_ = nullptr;

TEST_F(TinyPipeline, EvaluateNeverMutatesAndIsPure) {
  const PatchSource source(*manifest_);
  const auto enc = Encoder<float>::create(Backbone::tiny_test_cnn, 5);
  const auto before = enc.parameter_hash();
  const EpisodeStream stream(test_pool(*manifest_, 1), EpisodeSpec{6, 3, 3, 0}, 4);
  std::vector<Episode> doubled;
  for (std::size_t i = 0; i < 4; ++i) doubled.push_back(stream[i]);
  for (std::size_t i = 0; i < 4; ++i) doubled.push_back(stream[i]);
  const auto m = evaluate(enc, doubled, source);
  EXPECT_EQ(enc.parameter_hash(), before);
  ASSERT_EQ(m.size(), 8u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(m[i].accuracy, m[i + 4].accuracy);
    EXPECT_EQ(m[i].confusion, m[i + 4].confusion);
    EXPECT_NEAR(m[i].recall_macro, m[i].accuracy, 1e-9);  // balanced queries
  }
}

TEST_F(TinyPipeline, OneIterationTakesExactlyOneStep) {
  const PatchSource source(*manifest_);
  const auto data = apply_budget(*manifest_, 1.0, 2);
  auto state = TrainState<float>::start(Encoder<float>::create(Backbone::tiny_test_cnn, 5), 1e-4, 1);
  const auto before = state.encoder.parameter_hash();
  state = train_episodic(std::move(state), episode_stream(data, EpisodeSpec{6, 5, 5, 0}, 1), source, 1);
  EXPECT_EQ(state.step, 1u);
  EXPECT_EQ(state.optimizer.steps(), 1u);
  EXPECT_EQ(state.loss_history.size(), 1u);
  EXPECT_NE(state.encoder.parameter_hash(), before);
  // The step budget is enforced.
  EXPECT_THROW(train_episodic(std::move(state), episode_stream(data, EpisodeSpec{6, 5, 5, 0}, 1), source, 1),
               ValidationError);
}

TEST_F(TinyPipeline, LossTrendsDownOnSeparableData) {
  const PatchSource source(*manifest_);
  const auto data = apply_budget(*manifest_, 1.0, 2);
  auto state = TrainState<float>::start(Encoder<float>::create(Backbone::tiny_test_cnn, 6), 1e-4, 200);
  state = train_episodic(std::move(state), episode_stream(data, EpisodeSpec{6, 5, 5, 1}, 200), source, 200);
  ASSERT_EQ(state.loss_history.size(), 200u);
  const auto& h = state.loss_history;
  const double first = std::accumulate(h.begin(), h.begin() + 20, 0.0) / 20;
  const double last = std::accumulate(h.end() - 20, h.end(), 0.0) / 20;
  EXPECT_LT(last, first);
}

TEST_F(TinyPipeline, NonFiniteParametersAbortTraining) {
  const PatchSource source(*manifest_);
  const auto data = apply_budget(*manifest_, 1.0, 2);
  auto enc = Encoder<float>::create(Backbone::tiny_test_cnn, 5);
  enc.network().visit("", nn::ParamVisitor<float>([](const std::string& n, nn::Parameter<float>& p) {
                        if (n == "block3.bn.bias") p.value[0] = std::numeric_limits<float>::quiet_NaN();
                      }));
  auto state = TrainState<float>::start(std::move(enc), 1e-4, 5);
  EXPECT_THROW(train_episodic(std::move(state), episode_stream(data, EpisodeSpec{6, 2, 2, 0}, 5), source, 5),
               NumericError);
}
