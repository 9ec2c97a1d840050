#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <cstring>
#include <fstream>

#include "grad_check.hpp"
#include "model_fixtures.hpp"
#include "pjx/checkpoint.hpp"
#include "pjx/errors.hpp"
#include "pjx/eval/emd.hpp"
#include "pjx/model.hpp"
#include "pjx/ops.hpp"
#include "pjx/training.hpp"

namespace pjx {
namespace {

using fixtures::random_features;
using fixtures::tiny_config;

// Features whose every location carries the same vector.
SpatialFeatures constant_features(const ModelConfig& c, Rng& rng) {
  SpatialFeatures f{c.feature_channels, c.grid_rows, c.grid_cols, {}, FeatureSource::kSynthetic};
  f.values.resize(c.feature_channels * c.locations());
  for (std::size_t ch = 0; ch < c.feature_channels; ++ch) {
    const double v = rng.normal();
    for (std::size_t l = 0; l < c.locations(); ++l) f.values[ch * c.locations() + l] = v;
  }
  return f;
}

double row_sum(const Tensor& t, std::size_t row) {
  double s = 0.0;
  for (std::size_t c = 0; c < t.cols(); ++c) s += t.at(row, c);
  return s;
}

TEST(EncodeQuestion, ActivityModeIsOnes) {
  auto c = tiny_config();
  c.activity_mode = true;
  PjxModel model(c, 1);
  const auto q = model.answer_path().encode_question({{}, {4, 5, 6}});
  ASSERT_EQ(q.shape(), (Shape{2, c.question_hidden}));
  for (double v : q.values()) EXPECT_EQ(v, 1.0);
}

TEST(EncodeQuestion, DeterministicAndUnknownIdsReadAsUnk) {
  PjxModel model(tiny_config(), 3);
  const auto& path = model.answer_path();
  const auto a = path.encode_question({{4, 5, 6}});
  const auto b = path.encode_question({{4, 5, 6}});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.at(i), b.at(i));
  const auto oov = path.encode_question({{4, 99, 6}});
  const auto unk = path.encode_question({{4, kUnkId, 6}});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(oov.at(i), unk.at(i));
  EXPECT_THROW(path.encode_question({{}}), InputError);
}

TEST(EncodeQuestion, BatchingMatchesSingleSequences) {
  PjxModel model(tiny_config(), 4);
  const auto& path = model.answer_path();
  const auto batch = path.encode_question({{4, 5, 6, 7}, {8, 9}});
  const auto first = path.encode_question({{4, 5, 6, 7}});
  const auto second = path.encode_question({{8, 9}});
  for (std::size_t c = 0; c < batch.cols(); ++c) {
    EXPECT_NEAR(batch.at(0, c), first.at(0, c), 1e-15);
    EXPECT_NEAR(batch.at(1, c), second.at(0, c), 1e-15);
  }
}

TEST(EncodeQuestion, GoldenVector) {
  PjxModel model(tiny_config(), 2024);
  const auto q = model.answer_path().encode_question({{4, 7, 5, 9, 6}});
  // Captured from a build whose gradients and gate equations were verified.
  const std::vector<double> golden{-0.000595456580106384,  -9.027004853973331e-05, 0.00079023426753842957,
                                   -0.0017765037914262661, 0.00014224460467712576, -2.6239894276001952e-05,
                                   -0.00066668956632459284, -2.8492434359851849e-05};
  ASSERT_EQ(q.size(), golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) EXPECT_NEAR(q.at(i), golden[i], 1e-15) << "element " << i;
}

TEST(PoolMultimodal, OnesQuestionAndIdentityEmbedding) {
  auto c = tiny_config();
  PjxModel model(c, 5);
  auto& w = model.params().get("answer.w1.weight");
  auto& b = model.params().get("answer.w1.bias");
  for (std::size_t i = 0; i < w.size(); ++i) w.mutable_values()[i] = (i / c.question_hidden == i % c.question_hidden);
  for (auto& v : b.mutable_values()) v = 0.0;
  Rng rng(6);
  const auto f = random_features(c, rng);
  const auto batch = make_batch({&f}, {{4}});
  const auto pooled = model.answer_path().pool_multimodal(batch.features, Tensor::full({1, c.question_hidden}, 1.0),
                                                          ForwardContext::eval());
  const auto expected = l2_normalize(signed_sqrt(batch.features));
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(pooled.normalized.at(i), expected.at(i), 1e-15);
}

TEST(PoolMultimodal, ZeroFeaturesGiveZeroOutput) {
  auto c = tiny_config();
  PjxModel model(c, 7);
  for (auto& v : model.params().get("answer.w1.bias").mutable_values()) v = 0.0;
  SpatialFeatures f{c.feature_channels, c.grid_rows, c.grid_cols,
                    std::vector<double>(c.feature_channels * c.locations(), 0.0), FeatureSource::kSynthetic};
  const auto batch = make_batch({&f}, {{4, 5}});
  const auto& path = model.answer_path();
  const auto pooled = path.pool_multimodal(batch.features, path.encode_question(batch.questions), ForwardContext::eval());
  for (double v : pooled.normalized.values()) EXPECT_EQ(v, 0.0);
}

TEST(PoolMultimodal, RejectsMismatchedShapes) {
  auto c = tiny_config();
  PjxModel model(c, 8);
  const auto& path = model.answer_path();
  EXPECT_THROW(path.pool_multimodal(Tensor::zeros({16, 7}), Tensor::zeros({1, 8}), ForwardContext::eval()),
               DimensionError);
  EXPECT_THROW(path.pool_multimodal(Tensor::zeros({16, 8}), Tensor::zeros({2, 8}), ForwardContext::eval()),
               DimensionError);
}

TEST(PoolMultimodal, Gradient) {
  auto c = tiny_config();
  PjxModel model(c, 9);
  Rng rng(10);
  const auto f1 = random_features(c, rng), f2 = random_features(c, rng);
  const auto batch = make_batch({&f1, &f2}, {{4, 5, 6}, {7, 8}});
  const auto& path = model.answer_path();
  auto& params = model.params();
  auto loss = [&] {
    const auto pooled = path.pool_multimodal(batch.features, path.encode_question(batch.questions), ForwardContext::eval());
    return sum(ewise_mul(pooled.normalized, Tensor::full(pooled.normalized.shape(), 0.37)));
  };
  const auto r = gradcheck::check_gradients(loss, {{"w1", params.get("answer.w1.weight")},
                                                   {"b1", params.get("answer.w1.bias")},
                                                   {"emb", params.get("answer.question_embedding")},
                                                   {"enc1", params.get("answer.encoder1.w_input")}});
  EXPECT_LT(r.max_rel_err, 1e-3) << r.worst;
}

TEST(AnswerAttention, IdenticalLocationsGiveUniformMap) {
  auto c = tiny_config();
  PjxModel model(c, 11);
  Rng rng(12);
  const auto f = constant_features(c, rng);
  const auto r = model.forward(make_batch({&f}, {{4, 5}}), {1}, ForwardContext::eval());
  for (double v : r.answer_attention.values()) EXPECT_NEAR(v, 1.0 / 16.0, 1e-15);
  for (double v : r.explain_attention.values()) EXPECT_NEAR(v, 1.0 / 16.0, 1e-15);
}

TEST(Attention, NormalizedAndShiftInvariant) {
  auto c = tiny_config();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PjxModel model(c, seed);
    Rng rng(seed + 100);
    const auto f1 = random_features(c, rng), f2 = random_features(c, rng);
    const auto batch = make_batch({&f1, &f2}, {{4, 5}, {6}});
    const auto before = model.forward(batch, {0, 3}, ForwardContext::eval());
    for (std::size_t b = 0; b < 2; ++b) {
      EXPECT_NEAR(row_sum(before.answer_attention, b), 1.0, 1e-9);
      EXPECT_NEAR(row_sum(before.explain_attention, b), 1.0, 1e-9);
    }
    for (double v : before.answer_attention.values()) EXPECT_GE(v, 0.0);
    for (double v : before.explain_attention.values()) EXPECT_GE(v, 0.0);
    // Shifting the final logit bias moves every location's logit equally.
    model.params().get("answer.w3.bias").mutable_values()[0] += 7.5;
    model.params().get("explain.w9.bias").mutable_values()[0] -= 3.25;
    const auto after = model.forward(batch, {0, 3}, ForwardContext::eval());
    for (std::size_t i = 0; i < before.answer_attention.size(); ++i) {
      EXPECT_NEAR(before.answer_attention.at(i), after.answer_attention.at(i), 1e-9);
      EXPECT_NEAR(before.explain_attention.at(i), after.explain_attention.at(i), 1e-9);
    }
  }
}

TEST(PredictAnswer, OneHotAttentionSelectsOneLocation) {
  auto c = tiny_config();
  c.grid_rows = c.grid_cols = 2;
  PjxModel model(c, 13);
  Rng rng(14);
  const auto f = random_features(c, rng);
  const auto batch = make_batch({&f}, {{4, 5}});
  const auto& path = model.answer_path();
  const auto q = path.encode_question(batch.questions);
  const auto pooled = path.pool_multimodal(batch.features, q, ForwardContext::eval());
  const auto& w4 = model.params().get("answer.w4.weight");
  const auto& b4 = model.params().get("answer.w4.bias");
  for (std::size_t loc = 0; loc < 4; ++loc) {
    std::vector<double> att(4, 0.0);
    att[loc] = 1.0;
    const auto probs = path.predict_answer(pooled.embedded, q, Tensor::from({1, 4}, att));
    // The same computation on a grid reduced to the selected location.
    std::vector<double> attended(c.question_hidden);
    for (std::size_t h = 0; h < attended.size(); ++h) attended[h] = pooled.embedded.at(loc, h) * q.at(0, h);
    const auto expected =
        softmax(add(matmul(Tensor::from({1, attended.size()}, attended), w4), b4), 1);
    for (std::size_t y = 0; y < c.answer_count; ++y) EXPECT_EQ(probs.at(0, y), expected.at(0, y));
    EXPECT_NEAR(row_sum(probs, 0), 1.0, 1e-12);
  }
}

TEST(AnswerDistribution, ArgmaxTiesAndMonotoneInvariance) {
  EXPECT_EQ(make_answer_distribution({0.25, 0.375, 0.375}).best, 1u);
  const std::vector<double> p{0.1, 0.5, 0.15, 0.25};
  std::vector<double> transformed;
  for (double v : p) transformed.push_back(std::exp(3.0 * v) - 1.0);
  EXPECT_EQ(argmax_index(p), argmax_index(transformed));
}

TEST(EmbedAnswer, ZeroWeightsGiveBias) {
  auto c = tiny_config();
  PjxModel model(c, 15);
  for (const auto* name : {"explain.w5.weight", "explain.w6.weight"})
    for (auto& v : model.params().get(name).mutable_values()) v = 0.0;
  const auto& b6 = model.params().get("explain.w6.bias");
  const auto& path = model.explain_path();
  const auto e = path.embed_answer(path.one_hot_answers({0, 3}));
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t d = 0; d < c.answer_embed; ++d) EXPECT_EQ(e.at(b, d), b6.at(0, d));
}

TEST(EmbedAnswer, DeterministicAndValidated) {
  PjxModel model(tiny_config(), 16);
  const auto& path = model.explain_path();
  const auto e = path.embed_answer(path.one_hot_answers({2, 2}));
  for (std::size_t d = 0; d < e.cols(); ++d) EXPECT_EQ(e.at(0, d), e.at(1, d));
  EXPECT_THROW(path.embed_answer(Tensor::zeros({1, 4})), ContractError);
  EXPECT_THROW(path.one_hot_answers({4}), InputError);
}

TEST(EmbedAnswer, Gradient) {
  PjxModel model(tiny_config(), 17);
  const auto& path = model.explain_path();
  auto& p = model.params();
  const auto answers = path.one_hot_answers({1, 3, 0});
  auto loss = [&] {
    const auto e = path.embed_answer(answers);
    return sum(ewise_mul(e, e));
  };
  const auto r = gradcheck::check_gradients(loss, {{"w5", p.get("explain.w5.weight")},
                                                   {"b5", p.get("explain.w5.bias")},
                                                   {"w6", p.get("explain.w6.weight")},
                                                   {"b6", p.get("explain.w6.bias")}});
  EXPECT_LT(r.max_rel_err, 1e-4) << r.worst;
}

TEST(FuseFeatures, AnyZeroFactorGivesZero) {
  auto c = tiny_config();
  PjxModel model(c, 18);
  Rng rng(19);
  const auto f = random_features(c, rng);
  const auto batch = make_batch({&f}, {{4}});
  const auto& path = model.explain_path();
  const auto att = Tensor::full({1, 16}, 1.0 / 16.0);
  const auto q = model.answer_path().encode_question(batch.questions);
  const auto fused = path.fuse_features(batch.features, att, q, Tensor::zeros({1, c.answer_embed}));
  for (double v : fused.values()) EXPECT_EQ(v, 0.0);

  for (const auto* name : {"explain.w11.weight", "explain.w11.bias"})
    for (auto& v : model.params().get(name).mutable_values()) v = 0.0;
  const auto fused2 = path.fuse_features(batch.features, att, q, Tensor::full({1, c.answer_embed}, 1.0));
  for (double v : fused2.values()) EXPECT_EQ(v, 0.0);
}

TEST(FuseFeatures, OneHotAttentionUsesOneLocation) {
  auto c = tiny_config();
  PjxModel model(c, 20);
  Rng rng(21);
  const auto f = random_features(c, rng);
  const auto batch = make_batch({&f}, {{4}});
  const auto& path = model.explain_path();
  const auto ones_q = Tensor::full({1, c.question_hidden}, 1.0);
  const auto ones_e = Tensor::full({1, c.answer_embed}, 1.0);
  for (auto& v : model.params().get("explain.w11.weight").mutable_values()) v = 0.0;
  for (auto& v : model.params().get("explain.w11.bias").mutable_values()) v = 1.0;
  const std::size_t loc = 9;
  std::vector<double> att(16, 0.0);
  att[loc] = 1.0;
  const auto fused = path.fuse_features(batch.features, Tensor::from({1, 16}, att), ones_q, ones_e);
  const auto& w10 = model.params().get("explain.w10.weight");
  const auto& b10 = model.params().get("explain.w10.bias");
  std::vector<double> row(c.feature_channels);
  for (std::size_t ch = 0; ch < row.size(); ++ch) row[ch] = batch.features.at(loc, ch);
  const auto expected = add(matmul(Tensor::from({1, row.size()}, row), w10), b10);
  for (std::size_t d = 0; d < c.answer_embed; ++d) EXPECT_EQ(fused.at(0, d), expected.at(0, d));
}

TEST(FuseFeatures, Gradient) {
  const auto g = fixtures::find_gradient_case();
  ASSERT_TRUE(g.has_value());
  auto& p = g->model->params();
  auto loss = [&] {
    const auto r = g->model->forward(g->batch, g->labels, ForwardContext::eval());
    return sum(ewise_mul(r.fused, Tensor::full(r.fused.shape(), 0.5)));
  };
  const auto r = gradcheck::check_gradients(loss, {{"w7", p.get("explain.w7.weight")},
                                                   {"w9", p.get("explain.w9.weight")},
                                                   {"w10", p.get("explain.w10.weight")},
                                                   {"b11", p.get("explain.w11.bias")},
                                                   {"w5", p.get("explain.w5.weight")}});
  EXPECT_LT(r.max_rel_err, 1e-3) << r.worst;
}

Tensor fused_for(const PjxModel& model, const SpatialFeatures& f, std::size_t answer) {
  return model.forward(make_batch({&f}, {{4, 5}}), {answer}, ForwardContext::eval()).fused;
}

TEST(Decode, GreedyIsDeterministicAndBounded) {
  auto c = tiny_config();
  PjxModel model(c, 24);
  Rng rng(25);
  const auto f = random_features(c, rng);
  const auto fused = fused_for(model, f, 1);
  const auto& path = model.explain_path();
  const auto a = path.decode(fused, {DecodeMode::kGreedy, 1, 7});
  const auto b = path.decode(fused, {DecodeMode::kGreedy, 1, 7});
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.logprob, b.logprob);
  EXPECT_LE(a.step_logprobs.size(), 7u);
  EXPECT_EQ(a.step_logprobs.size(), a.tokens.size() + (a.terminated_by_eos ? 1 : 0));
  double total = 0.0;
  for (double s : a.step_logprobs) total += s;
  EXPECT_NEAR(total, a.logprob, 1e-12);
  EXPECT_THROW(path.decode(fused, {DecodeMode::kBeam, 0, 7}), ParameterError);
  EXPECT_THROW(path.decode(fused, {DecodeMode::kGreedy, 1, 0}), ParameterError);
}

TEST(Decode, BeamOfOneEqualsGreedy) {
  auto c = tiny_config();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PjxModel model(c, seed);
    Rng rng(seed + 7);
    const auto fused = fused_for(model, random_features(c, rng), seed % 4);
    const auto greedy = model.explain_path().decode(fused, {DecodeMode::kGreedy, 1, 12});
    const auto beam = model.explain_path().decode(fused, {DecodeMode::kBeam, 1, 12});
    EXPECT_EQ(greedy.tokens, beam.tokens);
    EXPECT_NEAR(greedy.logprob, beam.logprob, 1e-12);
  }
}

TEST(Decode, BeamOfThreeNeverScoresBelowGreedy) {
  auto c = tiny_config();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    PjxModel model(c, 1000 + seed);
    Rng rng(seed);
    const auto fused = fused_for(model, random_features(c, rng), seed % 4);
    const auto greedy = model.explain_path().decode(fused, {DecodeMode::kGreedy, 1, 12});
    const auto beam = model.explain_path().decode(fused, {DecodeMode::kBeam, 3, 12});
    EXPECT_GE(beam.logprob, greedy.logprob - 1e-12) << "model seed " << 1000 + seed;
    EXPECT_LE(beam.step_logprobs.size(), 12u);
  }
}

TEST(Explain, ComposesTheSubOperations) {
  auto c = tiny_config();
  PjxModel model(c, 26);
  Rng rng(27);
  const auto f = random_features(c, rng);
  const TokenSequence question{4, 5, 6};
  const auto out = model.explain(f, question);
  validate_attention(out.answer_attention, 1e-9);
  validate_attention(out.explanation.attention, 1e-9);

  const auto fwd = model.forward_answer(make_batch({&f}, {question}), ForwardContext::eval());
  const auto best = argmax_index({fwd.answer_probs.values().begin(), fwd.answer_probs.values().end()});
  EXPECT_EQ(out.answer.best, best);
  const auto full = model.forward(make_batch({&f}, {question}), {best}, ForwardContext::eval());
  const auto decoded = model.explain_path().decode(full.fused, {});
  EXPECT_EQ(out.explanation.tokens, decoded.tokens);
  EXPECT_EQ(out.explanation.logprob, decoded.logprob);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(out.answer_attention.cells[i], full.answer_attention.at(i));
    EXPECT_EQ(out.explanation.attention.cells[i], full.explain_attention.at(i));
  }
  const double d = emd(out.answer_attention, out.explanation.attention);
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_GE(d, 0.0);

  // Forcing the answer only changes the explanation side.
  const auto forced = model.explain(f, question, {}, (best + 1) % 4);
  EXPECT_EQ(forced.answer.probs, out.answer.probs);
  EXPECT_THROW(model.explain(random_features(tiny_config(), rng), {}), InputError);
}

TEST(Explain, PathsUseDisjointParameters) {
  auto c = tiny_config();
  PjxModel model(c, 28);
  Rng rng(29);
  const auto f = random_features(c, rng);
  const auto before = model.explain(f, {4, 5});
  std::size_t answer_params = 0, explain_params = 0;
  for (auto& [name, t] : model.params()) {
    if (PjxModel::is_answer_parameter(name)) {
      ++answer_params;
      continue;
    }
    ASSERT_EQ(name.rfind("explain.", 0), 0u) << name;
    ++explain_params;
    for (auto& v : t.mutable_values()) v += rng.uniform(-0.5, 0.5);
  }
  EXPECT_GT(answer_params, 0u);
  EXPECT_GT(explain_params, 0u);
  const auto after = model.explain(f, {4, 5});
  EXPECT_EQ(before.answer.probs, after.answer.probs);
  EXPECT_EQ(before.answer_attention.cells, after.answer_attention.cells);
}

TEST(Explain, RejectsFeaturesOfTheWrongShape) {
  PjxModel model(tiny_config(), 30);
  auto c = tiny_config();
  c.feature_channels = 5;
  Rng rng(31);
  EXPECT_THROW(model.explain(random_features(c, rng), {4}), DimensionError);
}

TEST(FullModel, EveryParameterGradientMatchesFiniteDifferences) {
  // Central differences are only a valid oracle where the loss is smooth
  // across the stencil, so the case keeps every kink of signed sqrt and ReLU
  // well away from the evaluation point.
  const auto g = fixtures::find_gradient_case();
  ASSERT_TRUE(g.has_value());
  auto& params = g->model->params();
  std::vector<std::pair<std::string, Tensor>> wrt(params.begin(), params.end());
  const auto r = gradcheck::check_gradients(
      [&] { return fixtures::full_loss(*g->model, g->batch, g->labels, g->words); }, wrt);
  EXPECT_EQ(r.checked, params.value_count());
  EXPECT_LT(r.max_rel_err, 1e-3) << r.worst;
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("pjx_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  PjxModel a(tiny_config(), 34);
  const auto path = dir_ / "a.pjxt";
  save_checkpoint(path, a.params());
  PjxModel b(tiny_config(), 35);
  load_checkpoint(path, b.params());
  for (const auto& [name, t] : a.params()) {
    const auto& u = b.params().get(name);
    ASSERT_EQ(t.size(), u.size());
    EXPECT_EQ(std::memcmp(t.values().data(), u.values().data(), t.size() * sizeof(double)), 0) << name;
  }
  EXPECT_EQ(encode_checkpoint(a.params()), encode_checkpoint(b.params()));
}

TEST_F(CheckpointTest, RejectsCorruptOrMismatchedFiles) {
  PjxModel a(tiny_config(), 36);
  auto bytes = encode_checkpoint(a.params());
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PJXT");

  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_checkpoint(bad_version), CheckpointError);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated), CheckpointError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), CheckpointError);

  auto other = tiny_config();
  other.decoder_hidden = 6;
  PjxModel b(other, 37);
  EXPECT_THROW(assign_parameters(decode_checkpoint(bytes), b.params()), CheckpointError);
  EXPECT_THROW(load_checkpoint(dir_ / "missing.pjxt", b.params()), CheckpointError);
}

}  // namespace
}  // namespace pjx
