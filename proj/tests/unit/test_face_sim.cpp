#include <gtest/gtest.h>

#include <cmath>

#include "prefrank/dataset.hpp"
#include "prefrank/errors.hpp"
#include "prefrank/face_sim.hpp"
#include "prefrank/random.hpp"

using namespace prefrank;
using namespace prefrank::face;

namespace {

ActuatorVector random_vector(Rng& rng, std::size_t dof = kDefaultDof) {
  std::vector<double> v(dof);
  for (auto& x : v) x = rng.uniform();
  return ActuatorVector(v);
}

// Independent evaluation of the normalized RBF bump over the relevant dims.
double closed_form_latent(const FaceSimulator& sim, const ActuatorVector& v, Emotion e) {
  const auto& opt = sim.optimum(e);
  double d2 = 0.0, dmax = 0.0;
  for (auto i : sim.relevant(e)) {
    d2 += std::pow(v[i] - opt[i], 2);
    dmax += std::pow(std::max(opt[i], 1.0 - opt[i]), 2);
  }
  const double l2 = sim.config().bandwidth_fraction * dmax;
  const double floor = std::exp(-dmax / (2 * l2));
  return (std::exp(-d2 / (2 * l2)) - floor) / (1 - floor);
}

}  // namespace

TEST(ActuatorVector, ValidatesRange) {
  EXPECT_THROW(ActuatorVector({0.5, 1.2}), InvalidActuator);
  EXPECT_THROW(ActuatorVector({-0.1}), InvalidActuator);
  EXPECT_THROW(ActuatorVector({std::nan("")}), InvalidActuator);
  EXPECT_NO_THROW(ActuatorVector({0.0, 1.0}));
  EXPECT_EQ(ActuatorVector::neutral().size(), 35u);
}

TEST(Render, NeutralFaceIsDeterministicAndValid) {
  FaceSimulator sim;
  const auto v = ActuatorVector::neutral();
  const FaceImage a = sim.render(v);
  const FaceImage b = sim.render(v);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.width(), 224);
  EXPECT_EQ(a.height(), 224);
  for (double p : a.pixels()) {
    ASSERT_GE(p, 0.0);
    ASSERT_LE(p, 1.0);
  }
  EXPECT_DOUBLE_EQ(dataset::cosine_similarity(a.pixels(), b.pixels()), 1.0);
}

TEST(Render, MouthActuatorsOnlyChangeMouthRegion) {
  FaceSimulator sim;
  Rng rng(3);
  for (std::size_t idx = actuator::kFirstMouth; idx <= actuator::kLastMouth; ++idx) {
    for (int t = 0; t < 4; ++t) {
      auto base = random_vector(rng);
      std::vector<double> w(base.values().begin(), base.values().end());
      w[idx] = w[idx] < 0.5 ? w[idx] + 0.5 : w[idx] - 0.5;
      const FaceImage a = sim.render(base);
      const FaceImage b = sim.render(ActuatorVector(w));
      bool changed = false;
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
          if (a.at(x, y) == b.at(x, y)) continue;
          changed = true;
          ASSERT_TRUE(kMouthRegion.contains(x, y)) << "actuator " << idx << " changed (" << x << "," << y << ")";
        }
      EXPECT_TRUE(changed) << "actuator " << idx << " has no visible effect";
    }
  }
}

TEST(Render, EveryActuatorIsVisible) {
  FaceSimulator sim;
  for (std::size_t i = 0; i < kDefaultDof; ++i) {
    std::vector<double> lo(kDefaultDof, 0.5), hi(kDefaultDof, 0.5);
    lo[i] = 0.0;
    hi[i] = 1.0;
    EXPECT_NE(sim.render(ActuatorVector(lo)), sim.render(ActuatorVector(hi))) << "actuator " << i;
  }
}

TEST(Render, DimensionMismatchThrows) {
  FaceSimulator sim;
  EXPECT_THROW(sim.render(ActuatorVector::neutral(34)), InvalidActuator);
  EXPECT_THROW(sim.latent_intensity(ActuatorVector::neutral(36), Emotion::Anger), InvalidActuator);
}

TEST(Latent, OptimumIsOneAndAntipodeIsZero) {
  FaceSimulator sim;
  for (Emotion e : kTargetEmotions) {
    EXPECT_DOUBLE_EQ(sim.latent_intensity(sim.optimum(e), e), 1.0) << to_string(e);
    EXPECT_EQ(sim.latent_intensity(sim.antipode(e), e), 0.0) << to_string(e);
    EXPECT_FALSE(sim.relevant(e).empty());
  }
}

TEST(Latent, MatchesClosedFormAndInducesSameOrder) {
  FaceSimulator sim;
  Rng rng(8);
  for (Emotion e : kTargetEmotions) {
    for (int t = 0; t < 200; ++t) {
      const auto v1 = random_vector(rng), v2 = random_vector(rng);
      const double l1 = sim.latent_intensity(v1, e), l2 = sim.latent_intensity(v2, e);
      EXPECT_NEAR(l1, closed_form_latent(sim, v1, e), 1e-12);
      ASSERT_GE(l1, 0.0);
      ASSERT_LE(l1, 1.0);
      const double c1 = closed_form_latent(sim, v1, e), c2 = closed_form_latent(sim, v2, e);
      if (std::abs(c1 - c2) > 1e-12) EXPECT_EQ(l1 > l2, c1 > c2);
    }
  }
}

TEST(Latent, IgnoresIrrelevantActuators) {
  FaceSimulator sim;
  Rng rng(21);
  const auto v = random_vector(rng);
  std::vector<double> w(v.values().begin(), v.values().end());
  const auto rel = sim.relevant(Emotion::Happiness);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::find(rel.begin(), rel.end(), i) == rel.end()) w[i] = rng.uniform();
  EXPECT_EQ(sim.latent_intensity(v, Emotion::Happiness), sim.latent_intensity(ActuatorVector(w), Emotion::Happiness));
}

TEST(Latent, MonotoneAlongSegmentToOptimum) {
  FaceSimulator sim;
  for (Emotion e : kTargetEmotions) {
    const auto& opt = sim.optimum(e);
    const auto anti = sim.antipode(e);
    double prev = -1.0;
    for (int k = 0; k <= 50; ++k) {
      const double t = k / 50.0;
      std::vector<double> v(opt.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1 - t) * anti[i] + t * opt[i];
      const double l = sim.latent_intensity(ActuatorVector(v), e);
      EXPECT_GT(l, prev);
      prev = l;
    }
  }
}

TEST(FaceSim, SmallDofIsSupported) {
  FaceSimConfig cfg;
  cfg.dof = 10;
  FaceSimulator sim(cfg);
  const auto img = sim.render(ActuatorVector::neutral(10));
  EXPECT_EQ(img.width(), 224);
  EXPECT_DOUBLE_EQ(sim.latent_intensity(sim.optimum(Emotion::Surprise), Emotion::Surprise), 1.0);
}
