#include <benchmark/benchmark.h>

#include <numeric>

#include "prefrank/bayesopt.hpp"
#include "prefrank/dataset.hpp"
#include "prefrank/face_sim.hpp"
#include "prefrank/prefmodel.hpp"
#include "prefrank/random.hpp"
#include "prefrank/ranking.hpp"

using namespace prefrank;

namespace {

face::ActuatorVector random_face(Rng& rng) {
  std::vector<double> v(face::kDefaultDof);
  for (auto& x : v) x = rng.uniform();
  return face::ActuatorVector(v);
}

void BM_Render(benchmark::State& state) {
  face::FaceSimulator sim;
  Rng rng(1);
  const auto v = random_face(rng);
  for (auto _ : state) benchmark::DoNotOptimize(sim.render(v));
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

void BM_Preprocess(benchmark::State& state) {
  face::FaceSimulator sim;
  Rng rng(2);
  const auto img = sim.render(random_face(rng));
  for (auto _ : state) benchmark::DoNotOptimize(dataset::preprocess(img));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMicrosecond);

void BM_KendallTau(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  ranking::Ranking a, b;
  a.order.resize(n);
  std::iota(a.order.begin(), a.order.end(), 0);
  b = a;
  rng.shuffle(b.order);
  for (auto _ : state) benchmark::DoNotOptimize(ranking::kendall_tau(a, b));
}
BENCHMARK(BM_KendallTau)->Arg(64)->Arg(1024)->Arg(16384);

void BM_MergeSortSession(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  for (auto _ : state) {
    ranking::SortSession s(ranking::SessionHeader{ids, Emotion::Anger, "bench", 1});
    while (auto q = s.pending()) s.submit({q->query_id, std::max(q->left_id, q->right_id)});
    benchmark::DoNotOptimize(s.result());
  }
}
BENCHMARK(BM_MergeSortSession)->Arg(100);

void BM_Propose(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  Rng rng(4);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(face::kDefaultDof));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  Eigen::VectorXd y = x.rowwise().sum();
  y = (y.array() - y.mean()) / 2.0;
  const auto gp = bo::GPState::fit(x, y, bo::KernelParams::isotropic(face::kDefaultDof, 1.0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(bo::propose(gp, seed++));
}
BENCHMARK(BM_Propose)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  face::FaceSimulator sim;
  Rng rng(5);
  model::ModelConfig cfg;
  const auto m = model::PreferenceModel::initialize(cfg);
  std::vector<model::EncodedImage> imgs;
  for (int i = 0; i < 64; ++i) imgs.push_back(m.encode(dataset::preprocess(sim.render(random_face(rng)))));
  std::vector<model::PreferencePair> batch;
  for (std::size_t k = 0; k < 32; ++k) batch.push_back({2 * k, 2 * k + 1, static_cast<int>(k % 2)});
  for (auto _ : state) benchmark::DoNotOptimize(model::gradients(m, imgs, batch));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
