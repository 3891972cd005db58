#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "prefrank/bayesopt.hpp"
#include "prefrank/dataset.hpp"
#include "prefrank/face_sim.hpp"
#include "prefrank/image.hpp"
#include "prefrank/prefmodel.hpp"
#include "prefrank/random.hpp"
#include "prefrank/sobol.hpp"
#include "test_util.hpp"

using namespace prefrank;
using namespace prefrank::bo;
using prefrank::testing::TempDir;

namespace {

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }
double big_phi(double z) { return 0.5 * (1 + std::erf(z / std::numbers::sqrt2)); }

void expect_monotone_incumbent(const Trace& t) {
  double best = -1e300;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.rows[i].index, static_cast<int>(i));
    best = std::max(best, t.rows[i].objective);
    EXPECT_EQ(t.rows[i].incumbent, best);
    if (i) EXPECT_GE(t.rows[i].incumbent, t.rows[i - 1].incumbent);
  }
}

double spearman(std::vector<double> a, std::vector<double> b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1 - 6 * d2 / (n * (n * n - 1));
}

}  // namespace

TEST(ExpectedImprovement, ClosedFormCases) {
  EXPECT_EQ(expected_improvement(2.0, 0.0, 1.0), 1.0);
  EXPECT_EQ(expected_improvement(0.5, 0.0, 1.0), 0.0);
  // mu == best: EI = sigma * phi(0)
  EXPECT_NEAR(expected_improvement(1.0, 4.0, 1.0), 2.0 / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(expected_improvement(0.0, 1.0, 0.0), 0.398942, 1e-6);
  for (double mu : {-1.0, 0.3, 2.0})
    for (double s : {0.1, 1.0, 3.0}) {
      const double z = (mu - 0.5) / s;
      EXPECT_NEAR(expected_improvement(mu, s * s, 0.5), (mu - 0.5) * big_phi(z) + s * phi(z), 1e-12);
    }
}

TEST(ExpectedImprovement, NonNegativeOnGrid) {
  for (int i = -40; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) {
      const double v = expected_improvement(i * 0.25, j * j * 0.01, 0.0);
      EXPECT_GE(v, 0.0);
      EXPECT_TRUE(std::isfinite(v));
    }
  EXPECT_GE(expected_improvement(-50.0, 1e-4, 0.0), 0.0);
}

TEST(Propose, StaysInsideUnitBox) {
  Rng rng(1);
  Eigen::MatrixXd x(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = rng.uniform();
  Eigen::VectorXd y = x.col(0) + x.col(1);  // optimum at the box corner
  const auto gp = GPState::fit(x, y, KernelParams::isotropic(3, 0.5));
  for (std::uint64_t s = 0; s < 5; ++s) {
    ProposeOptions opt;
    opt.candidates = 256;
    opt.initial_step = 0.5;
    for (double v : propose(gp, s, opt)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Propose, FlatDataPicksMaxVarianceCandidate) {
  Eigen::MatrixXd x(3, 2);
  x << 0.5, 0.5, 0.4, 0.6, 0.6, 0.4;
  Eigen::VectorXd y = Eigen::VectorXd::Constant(3, 2.0);
  const auto gp = GPState::fit(x, y, KernelParams::isotropic(2, 0.3), 2.0);
  ProposeOptions opt;
  opt.candidates = 128;
  opt.refine_starts = 0;
  const auto p = propose(gp, 4, opt);
  // Rebuild the candidate set independently and find its max-variance point.
  SobolSequence sobol(2, 4);
  double best_var = -1;
  std::vector<double> want;
  for (int i = 0; i < 128; ++i) {
    const auto c = sobol.next();
    const double v = gp.posterior(c).second;
    if (v > best_var) best_var = v, want = c;
  }
  EXPECT_EQ(p, want);
}

TEST(Propose, MatchesGridArgmaxOn2D) {
  Eigen::MatrixXd x(5, 2);
  x << 0.1, 0.1, 0.9, 0.2, 0.3, 0.8, 0.5, 0.5, 0.7, 0.7;
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) y(i) = -std::pow(x(i, 0) - 0.6, 2) - std::pow(x(i, 1) - 0.6, 2);
  const auto gp = GPState::fit(x, y, KernelParams::isotropic(2, 0.3, 0.1, 1e-6));
  const double best = y.maxCoeff();
  double grid_best = 0;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const auto [m, v] = gp.posterior(std::vector<double>{i / 200.0, j / 200.0});
      grid_best = std::max(grid_best, expected_improvement(m, v, best));
    }
  const auto p = propose(gp, 11);
  const auto [m, v] = gp.posterior(p);
  EXPECT_GE(expected_improvement(m, v, best), 0.99 * grid_best);
}

TEST(Optimize, BudgetEqualToInitIsPureSobol) {
  auto f = [](std::span<const double> v) { return -std::pow(v[0] - 0.3, 2); };
  OptimizeOptions opt;
  opt.budget = 12;
  opt.init = 12;
  opt.seed = 5;
  const auto r = optimize(f, 1, opt);
  ASSERT_EQ(r.trace.rows.size(), 12u);
  SobolSequence sobol(1, derive_seed(5, 1));
  for (const auto& row : r.trace.rows) EXPECT_EQ(row.x, sobol.next());
  expect_monotone_incumbent(r.trace);
}

TEST(Optimize, FindsOneDimensionalQuadraticOptimum) {
  auto f = [](std::span<const double> v) { return -std::pow(v[0] - 0.37, 2); };
  OptimizeOptions opt;
  opt.budget = 40;
  opt.init = 5;
  opt.seed = 2;
  const auto r = optimize(f, 1, opt);
  ASSERT_EQ(r.trace.rows.size(), 40u);
  EXPECT_NEAR(r.best[0], 0.37, 0.05);
  EXPECT_EQ(r.best_value, r.trace.rows.back().incumbent);
  expect_monotone_incumbent(r.trace);
}

TEST(Optimize, DeterministicForSeed) {
  auto f = [](std::span<const double> v) { return std::sin(5 * v[0]) * std::cos(3 * v[1]); };
  OptimizeOptions opt;
  opt.budget = 25;
  opt.init = 6;
  opt.seed = 17;
  const auto a = optimize(f, 2, opt), b = optimize(f, 2, opt);
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    EXPECT_EQ(a.trace.rows[i].x, b.trace.rows[i].x);
    EXPECT_EQ(a.trace.rows[i].objective, b.trace.rows[i].objective);
  }
  opt.seed = 18;
  EXPECT_NE(optimize(f, 2, opt).trace.rows[0].x, a.trace.rows[0].x);
}

TEST(Optimize, NonFiniteObjectiveAbortsWithPartialTrace) {
  int calls = 0;
  auto f = [&](std::span<const double> v) { return ++calls == 8 ? std::nan("") : v[0]; };
  OptimizeOptions opt;
  opt.budget = 20;
  opt.init = 4;
  try {
    optimize(f, 2, opt);
    FAIL() << "expected AbortedRun";
  } catch (const AbortedRun& e) {
    EXPECT_EQ(e.trace.rows.size(), 7u);
    expect_monotone_incumbent(e.trace);
  }
}

TEST(Optimize, RejectsBadArguments) {
  auto f = [](std::span<const double>) { return 0.0; };
  OptimizeOptions opt;
  EXPECT_THROW(optimize(f, 0, opt), InvalidInput);
  opt.budget = 0;
  EXPECT_THROW(optimize(f, 2, opt), InvalidInput);
  EXPECT_THROW(random_search(f, 2, 0, 1), InvalidInput);
}

TEST(RandomSearch, TraceIsSobolAndMonotone) {
  auto f = [](std::span<const double> v) { return v[0] - v[1]; };
  const auto r = random_search(f, 2, 30, 8);
  ASSERT_EQ(r.trace.rows.size(), 30u);
  SobolSequence sobol(2, derive_seed(8, 3));
  for (const auto& row : r.trace.rows) EXPECT_EQ(row.x, sobol.next());
  expect_monotone_incumbent(r.trace);
}

TEST(TraceCsv, RoundTripIsExact) {
  TempDir dir;
  auto f = [](std::span<const double> v) { return std::exp(-v[0]) / 3.0 + v[2]; };
  const auto r = random_search(f, 3, 10, 1);
  write_trace_csv(dir / "t.csv", r.trace);
  const auto back = read_trace_csv(dir / "t.csv");
  ASSERT_EQ(back.rows.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(back.rows[i].index, r.trace.rows[i].index);
    EXPECT_EQ(back.rows[i].x, r.trace.rows[i].x);
    EXPECT_EQ(back.rows[i].objective, r.trace.rows[i].objective);
    EXPECT_EQ(back.rows[i].incumbent, r.trace.rows[i].incumbent);
  }
  write_bytes(dir / "bad.csv", std::vector<std::uint8_t>{'x', '\n'});
  EXPECT_THROW(read_trace_csv(dir / "bad.csv"), FormatError);
}

TEST(Objectives, LatentAndHapiBehave) {
  face::FaceSimulator sim;
  const auto latent = latent_objective(sim, Emotion::Happiness);
  const auto& opt = sim.optimum(Emotion::Happiness);
  EXPECT_DOUBLE_EQ(latent(opt.values()), 1.0);

  model::ModelConfig cfg;
  cfg.target = Emotion::Happiness;
  cfg.seed = 3;
  const auto m = model::PreferenceModel::initialize(cfg);
  const auto hapi = hapi_objective(m, sim);
  Rng rng(4);
  std::vector<double> v(face::kDefaultDof);
  for (auto& x : v) x = rng.uniform();
  const double a = hapi(v), b = hapi(v);
  EXPECT_EQ(a, b);
  // Log-odds of the softmax target score.
  const double s = m.score(dataset::preprocess(sim.render(face::ActuatorVector(v))))(
      static_cast<Eigen::Index>(channel(Emotion::Happiness)));
  EXPECT_NEAR(a, std::log(s / (1.0 - s)), 1e-9);
}

TEST(Objectives, TrainedModelTracksLatent) {
  // Train on latent-labelled pairs, then check the learned score correlates
  // with the latent on fresh faces.
  face::FaceSimulator sim;
  const Emotion e = Emotion::Surprise;
  model::ModelConfig cfg;
  cfg.target = e;
  cfg.seed = 1;
  const auto init = model::PreferenceModel::initialize(cfg);
  Rng rng(5);
  auto sample = [&] {
    std::vector<double> v(face::kDefaultDof);
    for (auto& x : v) x = rng.uniform();
    return v;
  };
  std::vector<model::EncodedImage> imgs;
  std::vector<double> lat;
  for (int i = 0; i < 40; ++i) {
    const auto v = sample();
    imgs.push_back(init.encode(dataset::preprocess(sim.render(face::ActuatorVector(v)))));
    lat.push_back(sim.latent_intensity(face::ActuatorVector(v), e));
  }
  std::vector<model::PreferencePair> pairs;
  for (std::size_t a = 0; a < imgs.size(); ++a)
    for (std::size_t b = a + 1; b < imgs.size(); ++b) pairs.push_back({a, b, lat[a] > lat[b] ? 1 : 0});
  model::TrainConfig tc;
  tc.epochs = 60;
  const auto trained = model::train(init, imgs, pairs, tc).model;
  const auto hapi = hapi_objective(trained, sim);
  std::vector<double> s, l;
  for (int i = 0; i < 40; ++i) {
    const auto v = sample();
    s.push_back(hapi(v));
    l.push_back(sim.latent_intensity(face::ActuatorVector(v), e));
  }
  EXPECT_GT(spearman(s, l), 0.5);
}
