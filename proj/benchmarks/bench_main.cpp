#include <maecho/echo.hpp>
#include <maecho/matching.hpp>
#include <maecho/nn.hpp>
#include <maecho/projection.hpp>
#include <maecho/qp.hpp>
#include <maecho/rng.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace maecho;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(gen);
  return m;
}

data::Dataset random_batch(std::size_t n, int dim, int classes) {
  data::Dataset ds;
  ds.images = gaussian(static_cast<Eigen::Index>(n), dim, 1).cwiseAbs().cwiseMin(1.0);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  ds.image_rows = 1;
  ds.image_cols = dim;
  ds.num_classes = classes;
  return ds;
}

const std::vector<int> kArch{784, 400, 200, 100, 10};

void BM_Forward(benchmark::State& state) {
  const auto params = nn::init_params(kArch, 1);
  const Matrix batch = gaussian(state.range(0), 784, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::logits(params, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(1000);

void BM_Backward(benchmark::State& state) {
  const auto params = nn::init_params(kArch, 1);
  const Matrix batch = gaussian(64, 784, 2);
  std::vector<int> labels(64);
  for (int i = 0; i < 64; ++i) labels[static_cast<std::size_t>(i)] = i % 10;
  for (auto _ : state) benchmark::DoNotOptimize(nn::backward(params, batch, labels));
}
BENCHMARK(BM_Backward);

void BM_ProjectorBatch(benchmark::State& state) {
  const Matrix x = gaussian(state.range(0), 401, 3);
  for (auto _ : state) benchmark::DoNotOptimize(proj::projector_batch(x, 1000.0));
}
BENCHMARK(BM_ProjectorBatch)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ProjectorRls(benchmark::State& state) {
  const Matrix x = gaussian(500, 401, 3);
  for (auto _ : state) benchmark::DoNotOptimize(proj::projector_rls(x, 1000.0));
}
BENCHMARK(BM_ProjectorRls)->Unit(benchmark::kMillisecond);

void BM_ProjectorRlsBlocked(benchmark::State& state) {
  const Matrix x = gaussian(500, 401, 3);
  for (auto _ : state) {
    proj::RlsProjector rls(401, 1000.0);
    rls.add_rows_blocked(x, state.range(0));
    benchmark::DoNotOptimize(rls.projector());
  }
}
BENCHMARK(BM_ProjectorRlsBlocked)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CaptureProjectors(benchmark::State& state) {
  const auto params = nn::init_params(kArch, 4);
  const auto ds = random_batch(2000, 784, 10);
  std::vector<std::size_t> shard(ds.size());
  for (std::size_t i = 0; i < shard.size(); ++i) shard[i] = i;
  for (auto _ : state) benchmark::DoNotOptimize(proj::capture_projectors(params, ds, shard));
}
BENCHMARK(BM_CaptureProjectors)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_EchoStep(benchmark::State& state) {
  const auto clients = static_cast<std::size_t>(state.range(0));
  std::vector<nn::MlpParams> locals;
  std::vector<proj::ProjectorSet> projectors;
  for (std::size_t i = 0; i < clients; ++i) {
    locals.push_back(nn::init_params(kArch, 10 + i));
    proj::ProjectorSet set;
    for (const auto& w : locals.back().layers) {
      const Matrix x = gaussian(300, w.cols(), 20 + i);
      set.layers.push_back(proj::projector_batch(x, 1000.0));
    }
    projectors.push_back(std::move(set));
  }
  auto st = echo::make_state(locals, projectors, {});
  const double box = 1.0 / static_cast<double>(clients);
  for (auto _ : state) {
    for (std::size_t l = 0; l < st.global.layers.size(); ++l) {
      benchmark::DoNotOptimize(echo::echo_step_layer(st, l, 1.0, box));
      for (std::size_t i = 0; i < clients; ++i) {
        st.anchors[i].layers[l] =
            echo::v_update(st.anchors[i].layers[l], st.global.layers[l], st.projectors[i].layers[l], 1.0, false);
      }
    }
  }
}
BENCHMARK(BM_EchoStep)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Hungarian(benchmark::State& state) {
  const Matrix cost = gaussian(state.range(0), state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(match::hungarian(cost));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNCubed);

void BM_DualQp(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix b = gaussian(n, 3, 6);
  const qp::DualProblem problem{b * b.transpose(), 0.7};
  for (auto _ : state) benchmark::DoNotOptimize(qp::solve_dual(problem));
}
BENCHMARK(BM_DualQp)->Arg(2)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
