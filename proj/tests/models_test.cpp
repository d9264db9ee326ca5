#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "gravamen/error.hpp"
#include "gravamen/models/baselines.hpp"
#include "gravamen/models/checkpoint.hpp"
#include "gravamen/models/model.hpp"
#include "gravamen/models/trainer.hpp"
#include "gravamen/numcore/grad_check.hpp"
#include "support.hpp"

using namespace gravamen;
using namespace gravamen::models;
using num::Tensor;

namespace {

ModelSpec toy_spec(ModelKind kind, lingfeat::FeatureMode mode = lingfeat::FeatureMode::None) {
  ModelSpec s;
  s.kind = kind;
  s.feature_mode = mode;
  s.hidden = 16;
  s.embed_dim = 16;
  s.heads = 2;
  s.ffn_dim = 32;
  s.projection_dim = 8;
  s.max_len = 8;
  return s;
}

std::vector<Example> random_examples(std::size_t n, std::size_t vocab, std::size_t max_len, std::size_t feat_dim,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Example> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& ex = out[i];
    ex.id = "d" + std::to_string(i);
    ex.length = 1 + rng() % max_len;
    ex.ids.assign(max_len, corpus::kPadId);
    for (std::size_t t = 0; t < ex.length; ++t) ex.ids[t] = 4 + static_cast<int>(rng() % (vocab - 4));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t f = 0; f < feat_dim; ++f) ex.features.push_back(u(rng));
    ex.label = static_cast<int>(rng() % 4);
    ex.severity = static_cast<int>(rng() % 5);
    ex.binary = ex.severity == 4 ? 1 : 0;
  }
  return out;
}

// Four classes, each signalled by its own keyword at a random position among filler words.
std::vector<Example> keyword_corpus(std::size_t n, std::size_t max_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Example> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& ex = out[i];
    ex.id = "k" + std::to_string(i);
    ex.label = static_cast<int>(i % 4);
    ex.length = 3 + rng() % (max_len - 2);
    ex.ids.assign(max_len, corpus::kPadId);
    for (std::size_t t = 0; t < ex.length; ++t) ex.ids[t] = 8 + static_cast<int>(rng() % 12);
    ex.ids[rng() % ex.length] = 4 + ex.label;
  }
  return out;
}

double accuracy(const Model& model, std::span<const Example> data) {
  const auto probs = predict_proba(model, data);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& p = probs[i];
    hit += static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) == data[i].label;
  }
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace

TEST(ModelSpec, Invariants) {
  ModelSpec s;
  s.kind = ModelKind::MTransformer;
  EXPECT_THROW(s.validate(), ConfigError);
  s.feature_mode = lingfeat::FeatureMode::Emo;
  EXPECT_NO_THROW(s.validate());
  s.dropout = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.dropout = 0.2;
  s.gate_scale = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  TrainConfig c;
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_model_kind("roberta"), ConfigError);
}

TEST(Majority, PredictsMostFrequentWithTieRule) {
  const std::vector<int> abb = {0, 0, 1};
  EXPECT_EQ(majority_predict(abb, 4), std::vector<int>(4, 0));
  const std::vector<int> tie = {3, 1};
  EXPECT_EQ(majority_predict(tie, 2), std::vector<int>(2, 1));
  EXPECT_THROW(majority_predict(std::span<const int>{}, 2), DataError);
}

TEST(LrBow, ZeroWeightsGiveUniformProbabilities) {
  LrBow m(10, 4);
  for (double p : m.predict_proba({{5, 2.0}})) EXPECT_DOUBLE_EQ(p, 0.25);
  EXPECT_THROW(LrBow(0, 4), DataError);
}

TEST(LrBow, SeparableToyReachesFullAccuracyWithMonotoneLoss) {
  std::vector<BagOfWords> docs;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const int y = i % 2;
    docs.push_back({{4 + y, 1.0}, {6 + i % 3, 1.0}});
    labels.push_back(y);
  }
  const auto m = LrBow::train(docs, labels, 10, 2, 1e-3);
  for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_EQ(m.predict(docs[i]), labels[i]);
  const auto& h = m.loss_history();
  ASSERT_GT(h.size(), 2u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);

  const auto strong = LrBow::train(docs, labels, 10, 2, 1e6);
  for (double p : strong.predict_proba(docs[0])) EXPECT_NEAR(p, 0.5, 1e-4);
}

TEST(Attention, IdenticalStatesGiveUniformWeights) {
  num::ParamStore store;
  num::Rng rng(3);
  const auto att = AdditiveAttention::create(store, "att", 4, rng);
  num::Tape tape;
  std::vector<double> vals;
  for (int t = 0; t < 5; ++t) vals.insert(vals.end(), {0.3, -1.2, 0.7, 2.0});
  const std::vector<std::size_t> lengths = {5};
  const auto r = att.apply(tape, store, tape.constant(Tensor({1, 5, 4}, vals)), lengths);
  for (double w : r.weights.value().data()) EXPECT_NEAR(w, 0.2, 1e-15);
  const double expected[] = {0.3, -1.2, 0.7, 2.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.context.value()[i], expected[i], 1e-14);
}

TEST(BiGruAtt, AttentionMassStaysOnRealTokens) {
  BiGruAttClassifier model(toy_spec(ModelKind::BiGruAtt), {30, 0}, 11);
  const auto data = random_examples(6, 30, 8, 0, 5);
  num::Tape tape;
  num::Rng rng(0);
  const auto batch = make_batch(data);
  const auto fwd = model.forward(tape, batch, false, rng);
  const Tensor& w = fwd.attention.at(0).value();
  for (std::size_t b = 0; b < batch.size; ++b) {
    double mass = 0.0;
    for (std::size_t t = 0; t < batch.seq_len; ++t) {
      const double a = w.at(b, t);
      if (t >= batch.lengths[b]) {
        EXPECT_EQ(a, 0.0);
      } else {
        mass += a;
      }
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
  }
}

TEST(BiGruAtt, SameSeedReplaysBitExactly) {
  const auto data = random_examples(3, 30, 3, 0, 8);
  auto logits = [&] {
    BiGruAttClassifier model(toy_spec(ModelKind::BiGruAtt), {30, 0}, 21);
    num::Tape tape;
    num::Rng rng(0);
    return model.forward(tape, make_batch(data), false, rng).logits.value();
  };
  EXPECT_EQ(logits(), logits());
}

TEST(BiGruAtt, PaddingDoesNotChangeResults) {
  BiGruAttClassifier model(toy_spec(ModelKind::BiGruAtt), {30, 0}, 4);
  auto data = random_examples(2, 30, 8, 0, 9);
  data[0].length = 2;
  data[1].length = 8;
  num::Rng rng(0);
  num::Tape t1, t2;
  const std::vector<std::size_t> first = {0};
  const auto alone = model.forward(t1, make_batch(data, first), false, rng).logits.value();
  const auto both = model.forward(t2, make_batch(data), false, rng).logits.value();
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(alone[k], both.at(0, k));
}

TEST(BiGruAtt, RejectsZeroLength) {
  BiGruAttClassifier model(toy_spec(ModelKind::BiGruAtt), {30, 0}, 4);
  auto data = random_examples(1, 30, 8, 0, 9);
  data[0].length = 0;
  EXPECT_THROW(make_batch(data), DataError);
}

TEST(Transformer, PadKeysGetZeroAttention) {
  TransformerClassifier model(toy_spec(ModelKind::Transformer), {30, 0}, 2);
  const auto data = random_examples(5, 30, 8, 0, 13);
  num::Tape tape;
  num::Rng rng(0);
  const auto batch = make_batch(data);
  const auto fwd = model.forward(tape, batch, false, rng);
  ASSERT_EQ(fwd.attention.size(), 2u);
  const std::size_t T = batch.seq_len + 1, H = 2;
  for (const auto& probs : fwd.attention) {
    const auto& p = probs.value();
    for (std::size_t b = 0; b < batch.size; ++b) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t i = 0; i < T; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < T; ++j) {
            const double a = p[((b * H + h) * T + i) * T + j];
            if (j > batch.lengths[b]) {
              EXPECT_EQ(a, 0.0);
            }
            row += a;
          }
          EXPECT_NEAR(row, 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(Transformer, RejectsSequencesBeyondPositionTable) {
  auto spec = toy_spec(ModelKind::Transformer);
  TransformerClassifier model(spec, {30, 0}, 2);
  auto data = random_examples(1, 30, 12, 0, 13);
  data[0].length = 12;
  num::Tape tape;
  num::Rng rng(0);
  EXPECT_THROW(model.forward(tape, make_batch(data), false, rng), std::invalid_argument);
}

TEST(ProjectFeatures, ZeroIdentityAndDirectProduct) {
  num::ParamStore store;
  num::Rng rng(1);
  auto proj = Linear::create(store, "p", 9, 12, rng);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> fv(2 * 9);
  for (auto& v : fv) v = u(rng);
  const Tensor feats({2, 9}, fv);

  {
    num::Tape tape;
    const auto out = project_features(tape, store, proj, tape.constant(feats)).value();
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t j = 0; j < 12; ++j) {
        double acc = store[proj.b][j];
        for (std::size_t i = 0; i < 9; ++i) acc += fv[r * 9 + i] * store[proj.w].at(i, j);
        EXPECT_NEAR(out.at(r, j), acc, 1e-14);
      }
    }
  }
  store[proj.w] = Tensor({9, 12}, 0.0);
  for (std::size_t i = 0; i < 9; ++i) store[proj.w].data()[i * 12 + i] = 1.0;
  {
    num::Tape tape;
    const auto out = project_features(tape, store, proj, tape.constant(feats)).value();
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(out.at(1, i), fv[9 + i]);
  }
  store[proj.w] = Tensor({9, 12}, 0.0);
  {
    num::Tape tape;
    for (double v : project_features(tape, store, proj, tape.constant(feats)).value().data()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(project_features(tape, store, proj, tape.constant(Tensor({2, 8}, 1.0))), std::invalid_argument);
  }
}

namespace {

struct GateFixture {
  ModelSpec spec;
  num::ParamStore store;
  ShiftingGateParams gate;
  LayerNormParams norm;

  explicit GateFixture(std::uint64_t seed, double weight_scale = 1.0) {
    spec.embed_dim = 4;
    spec.projection_dim = 3;
    num::Rng rng(seed);
    gate = ShiftingGateParams::create(store, "g", 4, 3, rng);
    norm = LayerNormParams::create(store, "n", 4);
    std::normal_distribution<double> nd(0.0, weight_scale);
    for (auto id : {gate.gate.w, gate.gate.b, gate.shift.w, gate.shift.b, norm.gamma, norm.beta}) {
      for (double& v : store[id].data()) v = nd(rng);
    }
  }
};

}  // namespace

TEST(ShiftingGate, MatchesStepByStepFormula) {
  GateFixture fx(7);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  std::vector<double> ev(2 * 3 * 4), pv(2 * 3);
  for (auto& v : ev) v = nd(rng);
  for (auto& v : pv) v = nd(rng);
  num::Tape tape;
  num::Rng drop(0);
  GateTrace trace;
  const auto out = shifting_gate(tape, fx.store, tape.constant(Tensor({2, 3, 4}, ev)),
                                 tape.constant(Tensor({2, 3}, pv)), fx.gate, fx.norm, fx.spec, false, drop, &trace)
                       .value();
  const auto& Wg = fx.store[fx.gate.gate.w];
  const auto& bg = fx.store[fx.gate.gate.b];
  const auto& Wh = fx.store[fx.gate.shift.w];
  const auto& bh = fx.store[fx.gate.shift.b];
  const auto& gamma = fx.store[fx.norm.gamma];
  const auto& beta = fx.store[fx.norm.beta];
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t t = 0; t < 3; ++t) {
      const double* e = &ev[(b * 3 + t) * 4];
      const double* p = &pv[b * 3];
      double h[4], en = 0, hn = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        double zg = bg[j], zh = bh[j];
        for (std::size_t i = 0; i < 4; ++i) zg += e[i] * Wg.at(i, j);
        for (std::size_t i = 0; i < 3; ++i) {
          zg += p[i] * Wg.at(4 + i, j);
          zh += p[i] * Wh.at(i, j);
        }
        const double g = 1.0 / (1.0 + std::exp(-zg));
        EXPECT_GT(g, 0.0);
        EXPECT_LT(g, 1.0);
        h[j] = g * zh;
        en += e[j] * e[j];
        hn += h[j] * h[j];
      }
      const double s = std::min(fx.spec.gate_scale * std::sqrt(en) / (std::sqrt(hn) + fx.spec.gate_eps), 1.0);
      double y[4], mu = 0, var = 0;
      for (std::size_t j = 0; j < 4; ++j) mu += (y[j] = e[j] + s * h[j]) / 4.0;
      for (std::size_t j = 0; j < 4; ++j) var += (y[j] - mu) * (y[j] - mu) / 4.0;
      for (std::size_t j = 0; j < 4; ++j) {
        const double expect = (y[j] - mu) / std::sqrt(var + fx.spec.layer_norm_eps) * gamma[j] + beta[j];
        EXPECT_NEAR(out[(b * 3 + t) * 4 + j], expect, 1e-12);
      }
    }
  }
}

TEST(ShiftingGate, ZeroDisplacementIsPlainLayerNorm) {
  GateFixture fx(8);
  fx.store[fx.gate.shift.b] = Tensor({4}, 0.0);
  std::vector<double> ev = {0.5, -1.0, 2.0, 0.1, 1.5, 1.5, -0.3, 0.0};
  num::Tape tape;
  num::Rng drop(0);
  const auto e = tape.constant(Tensor({1, 2, 4}, ev));
  const auto fused = shifting_gate(tape, fx.store, e, tape.constant(Tensor({1, 3}, 0.0)), fx.gate, fx.norm, fx.spec,
                                   false, drop);
  const auto plain = fx.norm.apply(tape, fx.store, e, fx.spec.layer_norm_eps);
  EXPECT_EQ(fused.value(), plain.value());
}

TEST(ShiftingGate, DisplacementNeverExceedsScaledEmbeddingNorm) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    GateFixture fx(100 + trial, trial % 2 ? 10.0 : 0.1);
    std::vector<double> ev(4 * 5 * 4), pv(4 * 3);
    for (auto& v : ev) v = nd(rng) * (trial % 3 ? 1.0 : 1e-3);
    for (auto& v : pv) v = nd(rng) * 5.0;
    num::Tape tape;
    num::Rng drop(0);
    GateTrace tr;
    const auto out = shifting_gate(tape, fx.store, tape.constant(Tensor({4, 5, 4}, ev)),
                                   tape.constant(Tensor({4, 3}, pv)), fx.gate, fx.norm, fx.spec, true, drop, &tr);
    EXPECT_TRUE(out.value().all_finite());
    // Large weights saturate the sigmoid to exactly 0 or 1 in double precision.
    for (double g : tr.gate.value().data()) {
      if (trial % 2) {
        EXPECT_TRUE(g >= 0.0 && g <= 1.0);
      } else {
        EXPECT_TRUE(g > 0.0 && g < 1.0);
      }
    }
    for (std::size_t pos = 0; pos < 20; ++pos) {
      double en = 0, shift = 0;
      const double s = tr.scale.value()[pos];
      for (std::size_t j = 0; j < 4; ++j) {
        en += ev[pos * 4 + j] * ev[pos * 4 + j];
        const double d = s * tr.displacement.value()[pos * 4 + j];
        shift += d * d;
      }
      EXPECT_LE(std::sqrt(shift), fx.spec.gate_scale * std::sqrt(en) + 1e-6);
    }
  }
}

TEST(MTransformer, ZeroFeaturesMatchPlainTransformer) {
  const auto mspec = toy_spec(ModelKind::MTransformer, lingfeat::FeatureMode::Emo);
  auto pspec = mspec;
  pspec.kind = ModelKind::Transformer;
  TransformerClassifier fused(mspec, {30, 9}, 17);
  TransformerClassifier plain(pspec, {30, 0}, 99);
  for (std::size_t i = 0; i < plain.params().size(); ++i) {
    plain.params().at(i) = fused.params()[fused.params().find(plain.params().name(i))];
  }
  auto data = random_examples(4, 30, 8, 9, 3);
  for (auto& ex : data) std::fill(ex.features.begin(), ex.features.end(), 0.0);
  num::Tape t1, t2;
  num::Rng rng(0);
  EXPECT_EQ(fused.forward(t1, make_batch(data), false, rng).logits.value(),
            plain.forward(t2, make_batch(data), false, rng).logits.value());
}

TEST(MTransformer, FeatureWidthContract) {
  using lingfeat::FeatureMode;
  for (auto [mode, dim] : {std::pair{FeatureMode::Emo, 9u}, {FeatureMode::Top, 200u}, {FeatureMode::EmoTop, 209u}}) {
    EXPECT_NO_THROW(TransformerClassifier(toy_spec(ModelKind::MTransformer, mode), {30, dim}, 1));
    EXPECT_THROW(TransformerClassifier(toy_spec(ModelKind::MTransformer, mode), {30, dim + 1}, 1), ConfigError);
  }
  EXPECT_THROW(TransformerClassifier(toy_spec(ModelKind::MTransformer), {30, 9}, 1), ConfigError);

  TransformerClassifier model(toy_spec(ModelKind::MTransformer, FeatureMode::Emo), {30, 9}, 1);
  const auto no_feats = random_examples(2, 30, 8, 0, 1);
  num::Tape tape;
  num::Rng rng(0);
  EXPECT_THROW(model.forward(tape, make_batch(no_feats), false, rng), DataError);
}

class ModelGradCheck : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ModelGradCheck, FullArchitectureBelowTolerance) {
  const auto kind = GetParam();
  const auto mode = kind == ModelKind::MTransformer ? lingfeat::FeatureMode::Emo : lingfeat::FeatureMode::None;
  const std::size_t fdim = lingfeat::feature_dim(mode);
  auto model = make_model(toy_spec(kind, mode), {20, fdim}, 31);
  const auto batch = make_batch(random_examples(3, 20, 8, fdim, 77));
  gravamen::testing::conditioned_point(model->params(), 1);
  num::Rng rng(0);
  const auto report = num::grad_check_report(
      [&](num::Tape& tape, const num::ParamStore& store) {
        return classification_loss(tape, *model, store, batch, false, rng).total;
      },
      model->params());
  EXPECT_LT(report.max_relative_error, 1e-4) << report.worst_param << "[" << report.worst_index
                                             << "] analytic " << report.analytic << " numeric " << report.numeric;
}

INSTANTIATE_TEST_SUITE_P(Kinds, ModelGradCheck,
                         ::testing::Values(ModelKind::BiGruAtt, ModelKind::Transformer, ModelKind::MTransformer),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(TrainModel, OneEpochKeepsEpochOneParameters) {
  const auto data = random_examples(40, 20, 6, 0, 1);
  BiGruAttClassifier model(toy_spec(ModelKind::BiGruAtt), {20, 0}, 3);
  const auto before = model.params().tensors();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  const std::span<const Example> all(data);
  const auto h = train_model(model, cfg, all.subspan(0, 30), all.subspan(30));
  ASSERT_EQ(h.epochs.size(), 1u);
  EXPECT_EQ(h.best_epoch, 1u);
  EXPECT_NE(model.params().tensors(), before);
}

TEST(TrainModel, HistoryContractAndDeterminism) {
  const auto data = random_examples(48, 20, 6, 0, 2);
  const std::span<const Example> all(data);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 8;
  cfg.seed = 12;
  auto run = [&] {
    TransformerClassifier model(toy_spec(ModelKind::Transformer), {20, 0}, 5);
    auto h = train_model(model, cfg, all.subspan(0, 36), all.subspan(36));
    return std::pair{h, model.params().tensors()};
  };
  const auto [h1, p1] = run();
  const auto [h2, p2] = run();
  ASSERT_EQ(h1.epochs.size(), 5u);
  std::size_t argmin = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(h1.epochs[i].epoch, i + 1);
    if (h1.epochs[i].val_loss < h1.epochs[argmin].val_loss) argmin = i;
    EXPECT_EQ(h1.epochs[i].train_loss, h2.epochs[i].train_loss);
    EXPECT_EQ(h1.epochs[i].val_loss, h2.epochs[i].val_loss);
  }
  EXPECT_EQ(h1.best_epoch, argmin + 1);
  EXPECT_EQ(h1.best_val_loss, h1.epochs[argmin].val_loss);
  EXPECT_EQ(p1, p2);
}

TEST(TrainModel, ReturnedParametersReproduceBestValidationLoss) {
  const auto data = random_examples(48, 20, 6, 0, 4);
  const std::span<const Example> all(data);
  BiGruAttClassifier model(toy_spec(ModelKind::BiGruAtt), {20, 0}, 5);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-2;
  const auto h = train_model(model, cfg, all.subspan(0, 36), all.subspan(36));
  double val = 0.0;
  evaluate_loss(model, model.params(), all.subspan(36), classification_loss, 64, &val);
  EXPECT_EQ(val, h.best_val_loss);
}

TEST(TrainModel, RejectsEmptySplitsAndReportsDivergence) {
  const auto data = random_examples(10, 20, 6, 0, 4);
  const std::span<const Example> all(data);
  BiGruAttClassifier model(toy_spec(ModelKind::BiGruAtt), {20, 0}, 5);
  TrainConfig cfg;
  EXPECT_THROW(train_model(model, cfg, all.subspan(0, 0), all), DataError);
  EXPECT_THROW(train_model(model, cfg, all, all.subspan(0, 0)), DataError);
  for (double& v : model.params()[model.params().find("head.b")].data()) v = 1e308;
  model.params()[model.params().find("head.b")].data()[0] = -1e308;
  try {
    train_model(model, cfg, all.subspan(0, 5), all.subspan(5));
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(TrainModel, SeparableKeywordCorpusIsLearned) {
  const auto data = keyword_corpus(160, 8, 3);
  const std::span<const Example> all(data);
  auto spec = toy_spec(ModelKind::BiGruAtt);
  BiGruAttClassifier model(spec, {20, 0}, 9);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 1e-2;
  train_model(model, cfg, all.subspan(0, 128), all.subspan(128));
  EXPECT_GE(accuracy(model, all.subspan(0, 128)), 0.95);
}

TEST(Checkpoint, RoundTripRestoresPredictions) {
  const auto spec = toy_spec(ModelKind::MTransformer, lingfeat::FeatureMode::Emo);
  TransformerClassifier model(spec, {20, 9}, 4);
  TrainHistory h;
  h.epochs.push_back({1, 0.5, 0.25, 0, 0, 0, 0});
  h.best_epoch = 1;
  h.best_val_loss = 0.25;
  const auto path = std::filesystem::temp_directory_path() / "gravamen_ckpt_test.json";
  write_checkpoint(path, model, {20, 9}, 0xdeadbeefcafef00dULL, h, {{"note", "x"}});
  const auto c = read_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(c.vocab_hash, 0xdeadbeefcafef00dULL);
  EXPECT_EQ(c.architecture, "m_transformer");
  EXPECT_EQ(c.history.best_val_loss, 0.25);
  TransformerClassifier restored(c.spec, c.shape, 999);
  load_params(restored, c);
  EXPECT_EQ(restored.params().tensors(), model.params().tensors());

  BiGruAttClassifier other(toy_spec(ModelKind::BiGruAtt), {20, 0}, 1);
  EXPECT_THROW(load_params(other, c), DataError);
  EXPECT_THROW(checkpoint_from_json({{"format", "other"}}), DataError);
}
