#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "prefrank/errors.hpp"
#include "prefrank/image.hpp"
#include "prefrank/prefmodel.hpp"
#include "prefrank/random.hpp"
#include "test_util.hpp"

using namespace prefrank;
using namespace prefrank::model;
using prefrank::testing::TempDir;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.image_size = 32;
  d.frozen_pool = 8;
  d.train_pool = 4;
  d.hidden = 6;
  return d;
}

ModelConfig small_config(std::uint64_t seed = 5, Emotion target = Emotion::Anger) {
  ModelConfig c;
  c.dims = small_dims();
  c.target = target;
  c.seed = seed;
  return c;
}

dataset::PreprocessedImage random_image(Rng& rng, int size = 32) {
  dataset::PreprocessedImage img{1, size, size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  for (auto& x : img.data) x = 2 * rng.uniform() - 1;
  return img;
}

std::vector<EncodedImage> random_encoded(const PreferenceModel& m, Rng& rng, std::size_t n) {
  std::vector<EncodedImage> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(m.encode(random_image(rng)));
  return out;
}

// Model whose trainable weights are scaled up so that finite differences see
// a non-trivial landscape.
PreferenceModel perturbed(const ModelConfig& cfg, Rng& rng) {
  auto m = PreferenceModel::initialize(cfg);
  for (auto block : m.parameters().blocks())
    for (double& v : block) v += 0.3 * rng.normal();
  return m;
}

double max_relative_fd_error(PreferenceModel m, std::span<const EncodedImage> images,
                             std::span<const PreferencePair> batch) {
  const auto g = gradients(m, images, batch);
  const auto analytic = g.trainable.blocks();
  auto params = m.parameters().blocks();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double orig = params[b][i];
      params[b][i] = orig + h;
      const double up = pair_loss(m, images, batch);
      params[b][i] = orig - h;
      const double down = pair_loss(m, images, batch);
      params[b][i] = orig;
      const double fd = (up - down) / (2 * h);
      const double err = std::abs(fd - analytic[b][i]) / std::max({std::abs(fd), std::abs(analytic[b][i]), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

ranking::Ranking ranking_of(std::vector<int> order) { return ranking::Ranking{std::move(order)}; }

}  // namespace

TEST(Score, UniformWhenHeadIsZero) {
  auto cfg = small_config();
  auto params = PreferenceModel::initialize(cfg).parameters();
  params.head_w.setZero();
  params.head_b.setZero();
  const auto m = PreferenceModel::from_parameters(cfg, params);
  Rng rng(1);
  const auto s = m.score(random_image(rng));
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(s(k), 1.0 / 7.0, 1e-15);
}

TEST(Score, BiasOnFirstChannel) {
  auto cfg = small_config();
  auto params = PreferenceModel::initialize(cfg).parameters();
  params.head_w.setZero();
  params.head_b.setZero();
  params.head_b(0) = 1.0;
  const auto m = PreferenceModel::from_parameters(cfg, params);
  Rng rng(2);
  const auto s = m.score(random_image(rng));
  EXPECT_NEAR(s(0), std::exp(1.0) / (std::exp(1.0) + 6.0), 1e-15);
  // e/(e+6) = 0.311795; the rounded figure 0.31170 is within 1e-4.
  EXPECT_NEAR(s(0), 0.31170, 1e-4);
}

TEST(Score, LogOddsResolvesSaturatedScores) {
  auto cfg = small_config();
  auto params = PreferenceModel::initialize(cfg).parameters();
  params.head_w.setZero();
  params.head_b.setZero();
  const auto t = static_cast<Eigen::Index>(channel(cfg.target));
  Rng rng(9);
  const auto img = random_image(rng);
  std::vector<double> odds;
  for (double bias : {40.0, 41.0}) {
    params.head_b(t) = bias;
    const auto m = PreferenceModel::from_parameters(cfg, params);
    const auto enc = m.encode(img);
    EXPECT_EQ(m.target_score(enc), 1.0);
    // Six other channels at logit 0: log(s / (1 - s)) = bias - log 6.
    EXPECT_NEAR(m.target_log_odds(enc), bias - std::log(6.0), 1e-12);
    odds.push_back(m.target_log_odds(enc));
  }
  EXPECT_LT(odds[0], odds[1]);
}

TEST(Score, IsADistribution) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto m = perturbed(small_config(static_cast<std::uint64_t>(t)), rng);
    const auto s = m.score(random_image(rng));
    EXPECT_NEAR(s.sum(), 1.0, 1e-9);
    for (int k = 0; k < 7; ++k) {
      EXPECT_GT(s(k), 0.0);
      EXPECT_LT(s(k), 1.0);
    }
  }
}

TEST(Score, ShapeMismatchThrows) {
  const auto m = PreferenceModel::initialize(small_config());
  Rng rng(4);
  EXPECT_THROW(m.score(random_image(rng, 16)), InvalidInput);
  auto img = random_image(rng);
  img.channels = 3;
  EXPECT_THROW(m.score(img), InvalidInput);
}

TEST(Score, BiasShiftKeepsArgmax) {
  Rng rng(5);
  auto cfg = small_config();
  const auto m = perturbed(cfg, rng);
  std::vector<dataset::PreprocessedImage> cands;
  for (int i = 0; i < 30; ++i) cands.push_back(random_image(rng));
  auto argmax = [&](const PreferenceModel& model) {
    std::size_t best = 0;
    double bv = -1;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const double v = model.score(cands[i])(channel(cfg.target));
      if (v > bv) bv = v, best = i;
    }
    return best;
  };
  auto shifted = m.parameters();
  shifted.head_b.array() += 3.7;
  EXPECT_EQ(argmax(m), argmax(PreferenceModel::from_parameters(cfg, shifted)));
}

TEST(PairProbability, Examples) {
  Rng rng(6);
  const auto m = perturbed(small_config(), rng);
  const auto a = random_image(rng), b = random_image(rng);
  EXPECT_DOUBLE_EQ(m.pair_probability(a, a), 0.5);
  EXPECT_NEAR(m.pair_probability(a, b) + m.pair_probability(b, a), 1.0, 1e-15);
  const auto ea = m.encode(a), eb = m.encode(b);
  const double diff = m.target_score(ea) - m.target_score(eb);
  EXPECT_NEAR(m.pair_probability(ea, eb), 1.0 / (1.0 + std::exp(-diff)), 1e-15);
  EXPECT_NEAR(1.0 / (1.0 + std::exp(-1.0)), 0.731059, 1e-6);
}

TEST(PairProbability, SiameseSwapFlipsLoss) {
  Rng rng(7);
  const auto m = perturbed(small_config(), rng);
  const auto imgs = random_encoded(m, rng, 6);
  for (std::size_t i = 0; i + 1 < imgs.size(); ++i) {
    const PreferencePair p{i, i + 1, 1}, q{i + 1, i, 0};
    EXPECT_NEAR(m.pair_probability(imgs[i], imgs[i + 1]), 1.0 - m.pair_probability(imgs[i + 1], imgs[i]), 1e-15);
    EXPECT_NEAR(pair_loss(m, imgs, std::span(&p, 1)), pair_loss(m, imgs, std::span(&q, 1)), 1e-12);
  }
}

TEST(Bce, Examples) {
  EXPECT_NEAR(bce_loss(1, 0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(1, 1.0), -std::log(1 - kBceEpsilon), 1e-12);
  EXPECT_LT(bce_loss(1, 1.0), 1e-6);
  EXPECT_NEAR(bce_loss(0, 0.9), -std::log(0.1), 1e-12);
  EXPECT_NEAR(bce_loss(0, 0.9), 2.302585, 1e-6);
  EXPECT_TRUE(std::isfinite(bce_loss(1, 0.0)));
  const std::vector<int> y{1, 0};
  const std::vector<double> p{0.5, 0.9};
  EXPECT_NEAR(mean_bce(y, p), 0.5 * (std::log(2.0) - std::log(0.1)), 1e-12);
  EXPECT_THROW(mean_bce(std::vector<int>{}, std::vector<double>{}), NoData);
}

TEST(Gradients, MatchCentralDifferences) {
  Rng rng(8);
  for (int t = 0; t < 5; ++t) {
    auto cfg = small_config(static_cast<std::uint64_t>(t), kTargetEmotions[t % 6]);
    cfg.sigmoid_scale = t % 2 ? 1.0 : 4.0;
    const auto m = perturbed(cfg, rng);
    const auto imgs = random_encoded(m, rng, 8);
    std::vector<PreferencePair> batch;
    for (int k = 0; k < 4; ++k)
      batch.push_back({rng.below(8), rng.below(8), static_cast<int>(rng.below(2))});
    for (auto& p : batch)
      if (p.a == p.b) p.b = (p.a + 1) % 8;
    EXPECT_LT(max_relative_fd_error(m, imgs, batch), 1e-4) << "trial " << t;
  }
}

TEST(Gradients, FrozenStageIsZero) {
  Rng rng(9);
  const auto m = perturbed(small_config(), rng);
  const auto imgs = random_encoded(m, rng, 4);
  const std::vector<PreferencePair> batch{{0, 1, 1}, {2, 3, 0}};
  const auto g = gradients(m, imgs, batch);
  EXPECT_EQ(g.frozen.rows(), m.frozen_projection().rows());
  EXPECT_EQ(g.frozen.cols(), m.frozen_projection().cols());
  EXPECT_TRUE((g.frozen.array() == 0.0).all());
  EXPECT_THROW(gradients(m, imgs, std::vector<PreferencePair>{}), NoData);
}

TEST(Gradients, VanishAtPerfectPrediction) {
  // Identical images make y-hat exactly 0.5 for both orders, and two
  // contradictory labels on the same pair cancel.
  Rng rng(10);
  const auto m = perturbed(small_config(), rng);
  const auto one = m.encode(random_image(rng));
  const std::vector<EncodedImage> imgs{one, one};
  const std::vector<PreferencePair> batch{{0, 1, 1}, {0, 1, 0}};
  const auto g = gradients(m, imgs, batch);
  for (auto block : g.trainable.blocks())
    for (double v : block) ASSERT_NEAR(v, 0.0, 1e-15);

  // Saturated predictions that agree with their labels sit on the flat part
  // of the clamped loss.
  auto cfg = small_config();
  cfg.sigmoid_scale = 1e9;
  const auto sharp = PreferenceModel::from_parameters(cfg, m.parameters());
  const auto two = random_encoded(sharp, rng, 2);
  const int label = sharp.target_score(two[0]) > sharp.target_score(two[1]) ? 1 : 0;
  const std::vector<PreferencePair> agree{{0, 1, label}, {1, 0, 1 - label}};
  const auto gs = gradients(sharp, two, agree);
  for (auto block : gs.trainable.blocks())
    for (double v : block) ASSERT_EQ(v, 0.0);
}

TEST(Train, SeparablePairsReachFullAccuracy) {
  Rng rng(11);
  auto cfg = small_config(3);
  cfg.sigmoid_scale = 5.0;
  const auto init = PreferenceModel::initialize(cfg);
  const auto imgs = random_encoded(init, rng, 5);
  // Labels from a fixed linear functional of the inputs: separable by construction.
  std::vector<double> key;
  for (const auto& e : imgs) key.push_back(e.train_input.sum());
  std::vector<PreferencePair> pairs;
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) pairs.push_back({a, b, key[a] > key[b] ? 1 : 0});
  ASSERT_EQ(pairs.size(), 10u);
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 10;
  tc.learning_rate = 0.05;
  const auto r = train(init, imgs, pairs, tc);
  EXPECT_EQ(evaluate_accuracy(r.model, imgs, pairs), 1.0);
  EXPECT_EQ(r.best_epoch, -1);
  EXPECT_EQ(r.train_loss.size(), 200u);
}

TEST(Train, ContradictoryPairConvergesToHalf) {
  Rng rng(12);
  const auto init = perturbed(small_config(), rng);
  const auto imgs = random_encoded(init, rng, 2);
  const std::vector<PreferencePair> pairs{{0, 1, 1}, {0, 1, 0}};
  TrainConfig tc;
  tc.epochs = 400;
  tc.learning_rate = 0.05;
  const auto r = train(init, imgs, pairs, tc);
  EXPECT_NEAR(r.model.pair_probability(imgs[0], imgs[1]), 0.5, 1e-3);
  EXPECT_NEAR(r.train_loss.back(), std::log(2.0), 1e-5);
}

TEST(Train, FullBatchLossNonIncreasingForSmallStep) {
  Rng rng(13);
  const auto init = perturbed(small_config(), rng);
  const auto imgs = random_encoded(init, rng, 6);
  std::vector<PreferencePair> pairs;
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = a + 1; b < 6; ++b) pairs.push_back({a, b, static_cast<int>((a * 7 + b) % 2)});
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = static_cast<int>(pairs.size());
  tc.learning_rate = 1e-3;
  tc.momentum = 0.0;
  tc.weight_decay = 0.0;
  const auto r = train(init, imgs, pairs, tc);
  for (std::size_t i = 1; i < r.train_loss.size(); ++i) EXPECT_LE(r.train_loss[i], r.train_loss[i - 1] + 1e-15);
}

TEST(Train, DeterministicAndFrozenStageUntouched) {
  Rng rng(14);
  const auto init = PreferenceModel::initialize(small_config(9));
  const auto imgs = random_encoded(init, rng, 10);
  std::vector<PreferencePair> pairs;
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t b = a + 1; b < 10; ++b) pairs.push_back({a, b, static_cast<int>(rng.below(2))});
  TrainConfig tc;
  tc.epochs = 20;
  tc.seed = 77;
  const auto r1 = train(init, imgs, pairs, tc);
  const auto r2 = train(init, imgs, pairs, tc);
  const auto b1 = r1.model.parameters().blocks(), b2 = r2.model.parameters().blocks();
  for (std::size_t b = 0; b < b1.size(); ++b)
    for (std::size_t i = 0; i < b1[b].size(); ++i) ASSERT_EQ(b1[b][i], b2[b][i]);
  EXPECT_EQ(r1.model.frozen_checksum(), init.frozen_checksum());
  EXPECT_TRUE(r1.model.frozen_projection() == init.frozen_projection());
}

TEST(Train, EarlyStoppingReturnsBestValidationWeights) {
  Rng rng(15);
  const auto init = PreferenceModel::initialize(small_config(4));
  const auto imgs = random_encoded(init, rng, 12);
  std::vector<PreferencePair> tr, va;
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = a + 1; b < 12; ++b)
      (a < 8 && b < 8 ? tr : va).push_back({a, b, static_cast<int>(rng.below(2))});
  TrainConfig tc;
  tc.epochs = 60;
  tc.patience = 5;
  const auto r = train(init, imgs, tr, tc, va);
  ASSERT_GE(r.best_epoch, 0);
  const double best = *std::min_element(r.validation_loss.begin(), r.validation_loss.end());
  EXPECT_EQ(r.validation_loss[static_cast<std::size_t>(r.best_epoch)], best);
  EXPECT_NEAR(pair_loss(r.model, imgs, va), best, 1e-12);
  EXPECT_LE(static_cast<int>(r.validation_loss.size()), std::max(r.best_epoch + 1 + tc.patience, 1));
}

TEST(Train, RejectsEmptyAndInvalidConfig) {
  const auto init = PreferenceModel::initialize(small_config());
  Rng rng(16);
  const auto imgs = random_encoded(init, rng, 2);
  EXPECT_THROW(train(init, imgs, std::vector<PreferencePair>{}, {}), NoData);
  TrainConfig bad;
  bad.learning_rate = 0;
  EXPECT_THROW(train(init, imgs, std::vector<PreferencePair>{{0, 1, 1}}, bad), InvalidInput);
}

TEST(Accuracy, SelfConsistentFlippedAndChance) {
  Rng rng(17);
  const auto m = perturbed(small_config(), rng);
  const auto imgs = random_encoded(m, rng, 60);
  std::vector<PreferencePair> own, flipped, balanced;
  for (std::size_t a = 0; a < 60; ++a)
    for (std::size_t b = a + 1; b < 60; ++b) {
      const double p = m.pair_probability(imgs[a], imgs[b]);
      if (p == 0.5) continue;
      own.push_back({a, b, p > 0.5 ? 1 : 0});
      flipped.push_back({a, b, p > 0.5 ? 0 : 1});
      if (balanced.size() < 1000) balanced.push_back({a, b, static_cast<int>(rng.below(2))});
    }
  EXPECT_EQ(evaluate_accuracy(m, imgs, own), 1.0);
  EXPECT_EQ(evaluate_accuracy(m, imgs, flipped), 0.0);
  EXPECT_NEAR(evaluate_accuracy(m, imgs, balanced), 0.5, 0.1);
  const std::vector<PreferencePair> tie{{0, 0, 1}};
  EXPECT_EQ(evaluate_accuracy(m, imgs, tie), 0.0);
}

TEST(BuildLabels, Examples) {
  const auto pairs = dataset::enumerate_pairs(std::vector<int>{1, 2, 3});
  const auto single = build_labels(std::vector{ranking_of({3, 1, 2})}, pairs);
  ASSERT_EQ(single.labels.size(), 3u);
  for (const auto& l : single.labels) {
    const int want = (l.left_id == 3 || (l.left_id == 1 && l.right_id == 2)) ? 1 : 0;
    EXPECT_EQ(l.label, want) << l.left_id << "," << l.right_id;
  }
  EXPECT_EQ(single.provenance, "synthetic");

  const std::vector<ranking::Ranking> six(6, ranking_of({2, 3, 1}));
  const auto same = build_labels(six, pairs, "a,b");
  EXPECT_EQ(same.dropped_ties, 0u);
  EXPECT_EQ(same.provenance, "a,b");
  ASSERT_EQ(same.labels.size(), 3u);
  for (const auto& l : same.labels) EXPECT_EQ(l.votes_left + l.votes_right, 6);

  // a=1, b=2, c=3: [a>b>c], [a>c>b], [c>a>b]; pair (b,c) gets votes b,c,c.
  const std::vector<ranking::Ranking> three{ranking_of({1, 2, 3}), ranking_of({1, 3, 2}), ranking_of({3, 1, 2})};
  const auto maj = build_labels(three, dataset::enumerate_pairs(std::vector<int>{2, 3}));
  ASSERT_EQ(maj.labels.size(), 1u);
  EXPECT_EQ(maj.labels[0].votes_left, 1);
  EXPECT_EQ(maj.labels[0].votes_right, 2);
  EXPECT_EQ(maj.labels[0].label, 0);
}

TEST(BuildLabels, TiesDroppedAndMissingItemsAbstain) {
  const std::vector<ranking::Ranking> two{ranking_of({1, 2}), ranking_of({2, 1})};
  const auto tie = build_labels(two, dataset::enumerate_pairs(std::vector<int>{1, 2}));
  EXPECT_TRUE(tie.labels.empty());
  EXPECT_EQ(tie.dropped_ties, 1u);

  const std::vector<ranking::Ranking> partial{ranking_of({1, 2, 3}), ranking_of({2, 1})};
  const auto r = build_labels(partial, dataset::enumerate_pairs(std::vector<int>{1, 3}));
  EXPECT_EQ(r.abstentions, 1u);
  ASSERT_EQ(r.labels.size(), 1u);
  EXPECT_EQ(r.labels[0].label, 1);
  EXPECT_THROW(build_labels(std::vector<ranking::Ranking>{}, dataset::enumerate_pairs(std::vector<int>{1, 2})), NoData);
}

TEST(KFold, CountsAndDisjointness) {
  Rng rng(18);
  const auto cfg = small_config();
  const auto enc = PreferenceModel::initialize(cfg);
  std::map<int, EncodedImage> encoded;
  std::vector<int> order;
  for (int id = 0; id < 100; ++id) {
    encoded.emplace(id, enc.encode(random_image(rng)));
    order.push_back(id);
  }
  rng.shuffle(order);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 512;
  const auto rep = kfold_cv(encoded, std::vector{ranking_of(order)}, 5, cfg, tc);
  ASSERT_EQ(rep.folds.size(), 5u);
  std::set<int> all_val;
  double mean = 0;
  for (const auto& f : rep.folds) {
    EXPECT_EQ(f.validation_ids.size(), 20u);
    EXPECT_EQ(f.train_ids.size(), 80u);
    EXPECT_EQ(f.validation_pairs, 190u);
    EXPECT_EQ(f.train_pairs, 3160u);
    EXPECT_EQ(f.dropped_ties, 0u);
    for (int id : f.validation_ids) {
      EXPECT_TRUE(all_val.insert(id).second) << "id " << id << " validated twice";
      EXPECT_FALSE(std::binary_search(f.train_ids.begin(), f.train_ids.end(), id));
    }
    mean += f.accuracy / 5;
  }
  EXPECT_EQ(all_val.size(), 100u);
  EXPECT_NEAR(rep.mean_accuracy, mean, 1e-12);

  std::map<int, EncodedImage> few(encoded.begin(), std::next(encoded.begin(), 4));
  EXPECT_THROW(kfold_cv(few, std::vector{ranking_of(order)}, 5, cfg, tc), InvalidSplit);
  EXPECT_THROW(kfold_cv(encoded, std::vector{ranking_of(order)}, 1, cfg, tc), InvalidSplit);
}

TEST(Checkpoint, RoundTripAndTamper) {
  TempDir dir;
  Rng rng(19);
  auto cfg = small_config(12, Emotion::Surprise);
  cfg.sigmoid_scale = 2.5;
  const auto m = perturbed(cfg, rng);
  save_checkpoint(dir / "m.bin", m);
  const auto back = load_checkpoint(dir / "m.bin");
  EXPECT_EQ(back.target(), Emotion::Surprise);
  EXPECT_EQ(back.sigmoid_scale(), 2.5);
  EXPECT_EQ(back.config().seed, 12u);
  EXPECT_EQ(back.frozen_checksum(), m.frozen_checksum());
  const auto a = m.parameters().blocks(), b = back.parameters().blocks();
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i) ASSERT_EQ(a[k][i], b[k][i]);
  const auto img = random_image(rng);
  EXPECT_TRUE(m.score(img) == back.score(img));

  auto bytes = read_bytes(dir / "m.bin");
  write_bytes(dir / "trunc.bin", std::span(bytes).first(bytes.size() - 3));
  EXPECT_THROW(load_checkpoint(dir / "trunc.bin"), FormatError);
  bytes[0] ^= 0xff;
  write_bytes(dir / "magic.bin", bytes);
  EXPECT_THROW(load_checkpoint(dir / "magic.bin"), FormatError);

  // A checkpoint whose recorded checksum disagrees with the seed is refused.
  auto text = read_bytes(dir / "m.bin");
  std::string s(text.begin(), text.end());
  const auto pos = s.find(m.frozen_checksum());
  ASSERT_NE(pos, std::string::npos);
  s[pos] = s[pos] == '0' ? '1' : '0';
  write_bytes(dir / "sum.bin", std::vector<std::uint8_t>(s.begin(), s.end()));
  EXPECT_THROW(load_checkpoint(dir / "sum.bin"), FormatError);
}

TEST(Model, DimsValidated) {
  auto cfg = small_config();
  cfg.dims.train_dim = 40;
  EXPECT_THROW(PreferenceModel::initialize(cfg), InvalidInput);
  cfg = small_config();
  cfg.dims.train_pool = 5;
  EXPECT_THROW(PreferenceModel::initialize(cfg), InvalidInput);
  cfg = small_config();
  cfg.sigmoid_scale = 0;
  EXPECT_THROW(PreferenceModel::initialize(cfg), InvalidInput);
  const ModelDims def;
  EXPECT_EQ(def.feature_dim(), 512);
}

TEST(Model, FrozenProjectionDependsOnlyOnSeed) {
  EXPECT_EQ(PreferenceModel::initialize(small_config(1, Emotion::Anger)).frozen_checksum(),
            PreferenceModel::initialize(small_config(1, Emotion::Fear)).frozen_checksum());
  EXPECT_NE(PreferenceModel::initialize(small_config(1)).frozen_checksum(),
            PreferenceModel::initialize(small_config(2)).frozen_checksum());
}
