#include <gtest/gtest.h>

#include <set>

#include "pjx/data/dataset.hpp"
#include "pjx/data/io.hpp"
#include "pjx/data/records.hpp"
#include "pjx/data/synthetic.hpp"
#include "pjx/data/vocab.hpp"
#include "pjx/errors.hpp"
#include "pjx/ops.hpp"
#include "pjx/training.hpp"
#include "temp_dir.hpp"

namespace pjx {
namespace {

using testutil::slurp;
using testutil::spit;
using testutil::TempDirTest;

TEST(Tokenize, Definition) {
  EXPECT_EQ(tokenize("He is Skiing."), (std::vector<std::string>{"he", "is", "skiing"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("  \t\n").empty());
  EXPECT_EQ(tokenize("Wait, what?!  OK"), (std::vector<std::string>{"wait", "what", "ok"}));
  EXPECT_EQ(tokenize("3.5 ... x"), (std::vector<std::string>{"3.5", "x"}));
}

TEST(Tokenize, Idempotent) {
  for (const char* s : {"He is Skiing.", "A dog, a CAT!", "  spaced   out  ", "end?", "mid.dle dots."}) {
    const auto once = tokenize(s);
    EXPECT_EQ(tokenize(join_tokens(once)), once) << s;
  }
}

TEST(Vocabulary, ReservedIdsAndThreshold) {
  const auto v = build_vocab({{"a", "a", "b"}}, 2);
  EXPECT_EQ(v.token(kPadId), "<pad>");
  EXPECT_EQ(v.token(kBosId), "<bos>");
  EXPECT_EQ(v.token(kEosId), "<eos>");
  EXPECT_EQ(v.token(kUnkId), "<unk>");
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
  EXPECT_EQ(v.id("b"), kUnkId);
  EXPECT_EQ(v.frequencies().at("b"), 1u);
  EXPECT_THROW(build_vocab({{"a"}}, 0), ParameterError);
}

TEST(Vocabulary, FrequencyThenLexicographicOrder) {
  const std::vector<std::vector<std::string>> corpus{{"z", "y", "y", "x"}, {"x", "w", "z"}};
  const auto v = build_vocab(corpus, 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<bos>", "<eos>", "<unk>", "x", "y", "z", "w"}));
  EXPECT_EQ(build_vocab(corpus, 1).tokens(), v.tokens());
  const Vocabulary restored(v.tokens());
  for (const auto& t : v.tokens()) EXPECT_EQ(restored.id(t), v.id(t));
}

TEST(Vocabulary, EncodeDecodeRoundTrip) {
  const auto v = build_vocab({tokenize("there is a red cat in the top left")}, 1);
  const auto s = tokenize("a red cat in the top left");
  EXPECT_EQ(v.decode(v.encode(s)), s);
  const auto ids = v.encode({"red", "unseen"});
  EXPECT_EQ(ids[1], kUnkId);
  EXPECT_EQ(v.decode({kBosId, ids[0], kEosId, kPadId}), (std::vector<std::string>{"red"}));
  EXPECT_EQ(v.token(v.size()), "<unk>");
  EXPECT_EQ(v.decode({kUnkId}), (std::vector<std::string>{"<unk>"}));
}

TEST(LabelSet, OrderCapAndLookup) {
  const auto labels = LabelSet::build({"dog", "cat", "dog", "ant", "cat", "dog", "bee"}, 3);
  EXPECT_EQ(labels.labels(), (std::vector<std::string>{"dog", "cat", "ant"}));
  EXPECT_EQ(labels.index("cat"), 1u);
  EXPECT_FALSE(labels.contains("bee"));
  EXPECT_THROW(labels.index("bee"), InputError);
}

class RecordsTest : public TempDirTest {};

TEST_F(RecordsTest, EmptyFileGivesNoRecords) {
  spit(dir_ / "empty.jsonl", "");
  EXPECT_TRUE(load_jsonl(dir_ / "empty.jsonl", true).empty());
  spit(dir_ / "blank.jsonl", "\n\n");
  EXPECT_TRUE(load_jsonl(dir_ / "blank.jsonl", true).empty());
}

TEST_F(RecordsTest, MissingAnswerNamesFieldAndLine) {
  spit(dir_ / "bad.jsonl",
       R"({"id":"a","features_path":"f","question":["q"],"answer":"x","explanations":["e"]})"
       "\n"
       R"({"id":"b","features_path":"f","question":["q"],"explanations":["e"]})"
       "\n");
  try {
    load_jsonl(dir_ / "bad.jsonl", true);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "answer");
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST_F(RecordsTest, ValidationRules) {
  auto bad = [&](const std::string& line, const std::string& field, bool train = true) {
    spit(dir_ / "x.jsonl", line + "\n");
    try {
      load_jsonl(dir_ / "x.jsonl", train);
      ADD_FAILURE() << "accepted: " << line;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.field(), field) << line;
    }
  };
  bad(R"({"id":"a","features_path":"f","question":[],"answer":"","explanations":["e"]})", "answer");
  bad(R"({"id":"a","features_path":"f","question":[],"answer":"x","explanations":[]})", "explanations");
  bad(R"({"id":"a","features_path":"f","question":"q","answer":"x","explanations":["e"]})", "question");
  bad(R"({"id":"a","features_path":"f","question":[],"answer":"x","explanations":["e"],"att_gt_path":3})",
      "att_gt_path");
  bad(R"(["not","an","object"])", "<record>");
  bad(R"({"id":"a",)", "<json>");
  spit(dir_ / "ok.jsonl", R"({"id":"a","features_path":"f","question":[],"answer":"x","explanations":[]})" "\n");
  EXPECT_EQ(load_jsonl(dir_ / "ok.jsonl", false).size(), 1u);
  EXPECT_THROW(load_jsonl(dir_ / "missing.jsonl", true), IoError);
}

TEST_F(RecordsTest, LoadSaveLoadRoundTrip) {
  spit(dir_ / "in.jsonl",
       R"({ "id": "a", "features_path": "features/a.pjxf", "question": ["what", "is", "this"],)"
       R"( "answer": "cat", "explanations": ["there is a cat", "a cat sits"], "att_gt_path": "masks/a.pgm" })"
       "\n\n"
       R"({"id":"b","features_path":"features/b.pjxf","question":[],"answer":"run","explanations":["legs move"]})"
       "\n");
  const auto first = load_jsonl(dir_ / "in.jsonl", true);
  ASSERT_EQ(first.size(), 2u);
  save_jsonl(dir_ / "out.jsonl", first);
  const auto second = load_jsonl(dir_ / "out.jsonl", true);
  EXPECT_EQ(first, second);
  save_jsonl(dir_ / "out2.jsonl", second);
  EXPECT_EQ(slurp(dir_ / "out.jsonl"), slurp(dir_ / "out2.jsonl"));
  EXPECT_FALSE(second[1].att_gt_path.has_value());
}

class IoTest : public TempDirTest {};

TEST_F(IoTest, FeatureFileRoundTrip) {
  SpatialFeatures f{3, 2, 4, {}, FeatureSource::kIngested};
  Rng rng(1);
  for (std::size_t i = 0; i < 24; ++i) f.values.push_back(rng.normal());
  write_features(dir_ / "f.pjxf", f);
  const auto bytes = slurp(dir_ / "f.pjxf");
  EXPECT_EQ(bytes.substr(0, 4), "PJXF");
  EXPECT_EQ(bytes.size(), 4u + 3 * 8 + 24 * 8);
  const auto g = read_features(dir_ / "f.pjxf");
  EXPECT_EQ(g.channels, 3u);
  EXPECT_EQ(g.rows, 2u);
  EXPECT_EQ(g.cols, 4u);
  EXPECT_EQ(g.values, f.values);
  // Channel-major: value (c, n, m) sits at (c * N + n) * M + m.
  EXPECT_EQ(g.at(2, 1, 3), f.values[(2 * 2 + 1) * 4 + 3]);

  spit(dir_ / "short.pjxf", bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(read_features(dir_ / "short.pjxf"), IoError);
  spit(dir_ / "magic.pjxf", "NOPE" + bytes.substr(4));
  EXPECT_THROW(read_features(dir_ / "magic.pjxf"), IoError);
  EXPECT_THROW(read_features(dir_ / "none.pjxf"), IoError);
}

TEST_F(IoTest, PgmFormats) {
  spit(dir_ / "a.pgm", "P2\n# comment\n3 2\n# another\n10\n0 5 10\n10 5 0\n");
  const auto a = read_pgm(dir_ / "a.pgm");
  EXPECT_EQ(a.width, 3u);
  EXPECT_EQ(a.height, 2u);
  EXPECT_EQ(a.maxval, 10);
  EXPECT_EQ(a.at(1, 0), 10);

  std::string p5 = "P5 2 2 255\n";
  p5 += std::string{'\x00', '\x7f', '\xff', '\x01'};
  spit(dir_ / "b.pgm", p5);
  const auto b = read_pgm(dir_ / "b.pgm");
  EXPECT_EQ(b.pixels, (std::vector<int>{0, 127, 255, 1}));

  std::string p5w = "P5\n2 1\n65535\n";
  p5w += std::string{'\x01', '\x02', '\xff', '\xff'};
  spit(dir_ / "c.pgm", p5w);
  EXPECT_EQ(read_pgm(dir_ / "c.pgm").pixels, (std::vector<int>{258, 65535}));

  write_pgm(dir_ / "d.pgm", a);
  const auto d = read_pgm(dir_ / "d.pgm");
  EXPECT_EQ(d.pixels, a.pixels);
  EXPECT_EQ(d.maxval, a.maxval);

  spit(dir_ / "bad.pgm", "P2\n2 2\n10\n1 2 3\n");
  EXPECT_THROW(read_pgm(dir_ / "bad.pgm"), IoError);
  spit(dir_ / "range.pgm", "P2\n1 1\n10\n11\n");
  EXPECT_THROW(read_pgm(dir_ / "range.pgm"), IoError);
  EXPECT_THROW(read_pgm(dir_ / "missing.pgm"), IoError);
}

TEST(AreaResample, CheckerboardHandAverage) {
  // 3-pixel checker squares: every 2x2 output block straddles squares
  // differently, so the averages are not all equal.
  std::vector<double> mask(28 * 28);
  for (std::size_t r = 0; r < 28; ++r)
    for (std::size_t c = 0; c < 28; ++c) mask[r * 28 + c] = ((r / 3 + c / 3) % 2 == 0) ? 1.0 : 0.0;
  const auto out = area_resample(mask, 28, 28, 14, 14);
  ASSERT_EQ(out.size(), 196u);
  for (std::size_t r = 0; r < 14; ++r) {
    for (std::size_t c = 0; c < 14; ++c) {
      const double hand = (mask[(2 * r) * 28 + 2 * c] + mask[(2 * r) * 28 + 2 * c + 1] +
                           mask[(2 * r + 1) * 28 + 2 * c] + mask[(2 * r + 1) * 28 + 2 * c + 1]) /
                          4.0;
      EXPECT_NEAR(out[r * 14 + c], hand, 1e-15) << r << "," << c;
    }
  }
  // Single-pixel checkerboard averages to one half everywhere.
  std::vector<double> fine(28 * 28);
  for (std::size_t i = 0; i < fine.size(); ++i) fine[i] = ((i / 28 + i % 28) % 2 == 0) ? 1.0 : 0.0;
  for (double v : area_resample(fine, 28, 28, 14, 14)) EXPECT_NEAR(v, 0.5, 1e-15);
}

TEST(AreaResample, FractionalOverlap) {
  // Three columns into two: the middle column is split evenly.
  const auto out = area_resample({3, 6, 9}, 1, 3, 1, 2);
  EXPECT_NEAR(out[0], (3 + 0.5 * 6) / 1.5, 1e-12);
  EXPECT_NEAR(out[1], (0.5 * 6 + 9) / 1.5, 1e-12);
  const auto up = area_resample({1, 2, 3, 4}, 2, 2, 4, 4);
  EXPECT_EQ(up[0], 1.0);
  EXPECT_EQ(up[15], 4.0);
}

GrayImage mask_from(std::size_t h, std::size_t w, const std::vector<int>& px) { return {w, h, 255, px}; }

TEST(AttentionFromMask, FullSingleAndEmpty) {
  const auto full = attention_from_mask(mask_from(8, 8, std::vector<int>(64, 255)), 4, 4);
  for (double v : full.cells) EXPECT_NEAR(v, 1.0 / 16.0, 1e-15);
  const auto empty = attention_from_mask(mask_from(8, 8, std::vector<int>(64, 0)), 4, 4);
  for (double v : empty.cells) EXPECT_NEAR(v, 1.0 / 16.0, 1e-15);

  std::vector<bool> one(16, false);
  one[6] = true;
  const auto hot = attention_from_mask(cell_mask(4, 4, one, 8), 4, 4);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(hot.cells[i], i == 6 ? 1.0 : 0.0);
}

TEST(AttentionFromMask, ThresholdAtHalfPeak) {
  // Column sums after resampling to 1x4: 1.0, 0.5, 0.49, 0 relative to peak.
  const auto m = mask_from(1, 4, {200, 100, 98, 0});
  const auto a = attention_from_mask(m, 1, 4);
  EXPECT_NEAR(a.cells[0], 0.5, 1e-15);
  EXPECT_NEAR(a.cells[1], 0.5, 1e-15);
  EXPECT_EQ(a.cells[2], 0.0);
  EXPECT_EQ(a.cells[3], 0.0);
  validate_attention(a);
}

TEST(Heatmap, PeakAt255) {
  AttentionMap m{2, 2, {0.1, 0.4, 0.2, 0.3}};
  const auto img = attention_heatmap(m, 3);
  EXPECT_EQ(img.width, 6u);
  EXPECT_EQ(img.height, 6u);
  EXPECT_EQ(*std::max_element(img.pixels.begin(), img.pixels.end()), 255);
  EXPECT_EQ(img.at(0, 5), 255);
  EXPECT_EQ(img.at(0, 0), 64);
}

SynthConfig small_synth(std::size_t train = 60) {
  SynthConfig c;
  c.train = train;
  c.val = 20;
  c.test = 20;
  return c;
}

TEST(Synthetic, ConfigValidation) {
  SynthConfig c;
  EXPECT_NO_THROW(c.validate());
  auto expect_bad = [](SynthConfig bad, const std::string& key) {
    try {
      bad.validate();
      ADD_FAILURE() << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key);
    }
  };
  auto c1 = c;
  c1.rows = 1;
  expect_bad(c1, "rows");
  auto c2 = c;
  c2.channels = 10;
  expect_bad(c2, "channels");
  auto c3 = c;
  c3.objects_per_image = 5;
  expect_bad(c3, "objects_per_image");
  auto c4 = c;
  c4.noise = 0.3;
  expect_bad(c4, "noise");
  auto c5 = c;
  c5.mask_scale = 0;
  expect_bad(c5, "mask_scale");

  nlohmann::json j = c;
  EXPECT_EQ(j.at("task"), "vqa");
  const auto back = j.get<SynthConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Synthetic, DeterministicAndSeedSensitive) {
  const auto a = generate_synthetic(small_synth(), 9);
  const auto b = generate_synthetic(small_synth(), 9);
  const auto c = generate_synthetic(small_synth(), 10);
  ASSERT_EQ(a.train.size(), 60u);
  bool differs = false;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].record, b.train[i].record);
    EXPECT_EQ(a.train[i].features.values, b.train[i].features.values);
    differs = differs || a.train[i].features.values != c.train[i].features.values;
  }
  EXPECT_TRUE(differs);
}

class SyntheticFiles : public TempDirTest {};

TEST_F(SyntheticFiles, SameSeedSameBytes) {
  write_synthetic(generate_synthetic(small_synth(), 4), dir_ / "a");
  write_synthetic(generate_synthetic(small_synth(), 4), dir_ / "b");
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_ / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir_ / "a");
    EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "b" / rel)) << rel;
    ++files;
  }
  // 3 splits + synth.json + one feature file and one mask per example.
  EXPECT_EQ(files, 4u + 2u * 100u);
}

TEST_F(SyntheticFiles, LoadsBackWithOneHotMasks) {
  const auto ds = generate_synthetic(small_synth(), 5);
  write_synthetic(ds, dir_);
  const auto train = load_dataset(dir_, "train");
  const auto vocabs = build_vocabularies(train);
  const auto test = load_encoded(dir_, "test", vocabs);
  ASSERT_EQ(test.size(), ds.test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    ASSERT_TRUE(test[i].attention_gt.has_value());
    const auto& gt = *test[i].attention_gt;
    EXPECT_EQ(gt.rows, 4u);
    for (std::size_t cell = 0; cell < 16; ++cell) {
      EXPECT_EQ(gt.cells[cell], cell == ds.test[i].evidence_cell ? 1.0 : 0.0);
    }
    EXPECT_EQ(test[i].features.values, ds.test[i].features.values);
    EXPECT_TRUE(test[i].label.has_value());
    EXPECT_EQ(vocabs.answers.label(*test[i].label), ds.test[i].record.answer);
    EXPECT_EQ(test[i].references.front(), tokenize(ds.test[i].record.explanations.front()));
  }
  EXPECT_LE(vocabs.answers.size(), 16u);
}

TEST_F(SyntheticFiles, VocabulariesSurviveJson) {
  write_synthetic(generate_synthetic(small_synth(), 6), dir_);
  const auto v = build_vocabularies(load_dataset(dir_, "train"));
  const auto back = vocabularies_from_json(vocabularies_to_json(v));
  EXPECT_EQ(back.question.tokens(), v.question.tokens());
  EXPECT_EQ(back.explanation.tokens(), v.explanation.tokens());
  EXPECT_EQ(back.answers.labels(), v.answers.labels());
}

TEST(Synthetic, ValidatorAcceptsTenThousandExamples) {
  SynthConfig c;
  c.train = 10000;
  c.val = 0;
  c.test = 0;
  const auto ds = generate_synthetic(c, 11);
  std::set<std::string> ids;
  for (const auto& ex : ds.train) {
    EXPECT_NO_THROW(validate_synthetic(ex, c)) << ex.record.id;
    ids.insert(ex.record.id);
  }
  EXPECT_EQ(ids.size(), 10000u);

  SynthConfig act = c;
  act.task = SynthTask::kActivityAmbiguous;
  act.train = 2000;
  for (const auto& ex : generate_synthetic(act, 12).train) EXPECT_NO_THROW(validate_synthetic(ex, act));
}

TEST(Synthetic, ValidatorRejectsInconsistentRecords) {
  auto c = small_synth();
  const auto ds = generate_synthetic(c, 13);
  auto wrong_answer = ds.train[0];
  wrong_answer.record.answer = wrong_answer.record.answer == "cat" ? "dog" : "cat";
  if (wrong_answer.record.question.front() == "where") wrong_answer.record.answer = "nowhere";
  EXPECT_THROW(validate_synthetic(wrong_answer, c), InputError);
  auto wrong_mask = ds.train[1];
  wrong_mask.mask_cells.assign(16, false);
  EXPECT_THROW(validate_synthetic(wrong_mask, c), InputError);
  auto wrong_text = ds.train[2];
  wrong_text.record.explanations = {"there is nothing"};
  EXPECT_THROW(validate_synthetic(wrong_text, c), InputError);
}

TEST(Synthetic, SplitsAreDisjoint) {
  const auto ds = generate_synthetic(small_synth(), 14);
  std::set<std::string> ids;
  for (const auto* split : {&ds.train, &ds.val, &ds.test})
    for (const auto& ex : *split) EXPECT_TRUE(ids.insert(ex.record.id).second) << ex.record.id;
  EXPECT_EQ(ids.size(), 100u);
}

// Softmax regression on the evidence cell's feature vector; returns held-out
// accuracy in percent.
double linear_probe(const std::vector<const SynthExample*>& train, const std::vector<const SynthExample*>& test) {
  std::vector<std::string> answers;
  for (const auto* ex : train) answers.push_back(ex->record.answer);
  const auto labels = LabelSet::build(answers, 100);
  const std::size_t C = train.front()->features.channels;
  auto design = [&](const std::vector<const SynthExample*>& xs) {
    std::vector<double> v;
    for (const auto* ex : xs) {
      const auto lm = ex->features.location_major();
      v.insert(v.end(), lm.begin() + static_cast<std::ptrdiff_t>(ex->evidence_cell * C),
               lm.begin() + static_cast<std::ptrdiff_t>((ex->evidence_cell + 1) * C));
    }
    return Tensor::from({xs.size(), C}, std::move(v));
  };
  const auto X = design(train);
  std::vector<std::size_t> y;
  for (const auto* ex : train) y.push_back(labels.index(ex->record.answer));
  ParameterSet params;
  Rng rng(3);
  const auto probe = make_linear(params, "probe", C, labels.size(), rng);
  Adam adam(0.05);
  for (int step = 0; step < 300; ++step) {
    params.zero_grad();
    backward(neg_log_prob(softmax(probe(X), 1), y));
    adam.step(params, [](const std::string&) { return true; });
  }
  const auto scores = probe(design(test));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::vector<double> row(scores.values().begin() + static_cast<std::ptrdiff_t>(i * labels.size()),
                            scores.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * labels.size()));
    hits += labels.label(argmax_index(row)) == test[i]->record.answer ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(test.size());
}

TEST(Synthetic, LinearProbeOnEvidenceCellIsPerfect) {
  SynthConfig c;
  c.train = 1000;
  const auto ds = generate_synthetic(c, 15);
  for (const std::string kind : {"what", "where"}) {
    std::vector<const SynthExample*> train, test;
    for (const auto& ex : ds.train)
      if (ex.record.question.front() == kind) train.push_back(&ex);
    for (const auto& ex : ds.test)
      if (ex.record.question.front() == kind) test.push_back(&ex);
    ASSERT_GT(test.size(), 50u);
    EXPECT_EQ(linear_probe(train, test), 100.0) << kind;
  }
}

}  // namespace
}  // namespace pjx
