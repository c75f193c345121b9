#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "elinspect/encoding.hpp"
#include "elinspect/features.hpp"
#include "elinspect/image.hpp"
#include "elinspect/rng.hpp"
#include "elinspect/svm.hpp"

namespace {

using namespace elinspect;

// Textured 300x300 cell stand-in (value noise + dark streaks), the same
// workload shape as a real EL cell.
GrayImage synthetic_cell(std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img = make_image(300, 300, 0.55f);
  for (auto& v : img.data) v += static_cast<float>(0.25 * (rng.uniform_real() - 0.5));
  for (int s = 0; s < 6; ++s) {
    int x = static_cast<int>(rng.uniform_index(280)) + 10;
    int y = static_cast<int>(rng.uniform_index(280)) + 10;
    for (int t = 0; t < 120 && x > 1 && x < 298 && y > 1 && y < 298; ++t) {
      img.at(x, y) *= 0.4f;
      x += static_cast<int>(rng.uniform_index(3)) - 1;
      y += static_cast<int>(rng.uniform_index(3)) - 1;
    }
  }
  for (auto& v : img.data) v = std::min(1.0f, std::max(0.0f, v));
  return img;
}

void BM_DenseSiftExtract(benchmark::State& state) {
  const GrayImage img = synthetic_cell(1);
  const auto strategy = SamplingStrategy::dense(DenseGridSpec{static_cast<int>(state.range(0)), 0.0});
  for (auto _ : state) {
    DescriptorSet set = extract(img, strategy, DescriptorKind::sift);
    benchmark::DoNotOptimize(set.descriptors.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_DenseSiftExtract)->Arg(15)->Arg(30)->Arg(60);

void BM_FastCorners(benchmark::State& state) {
  const GrayImage img = synthetic_cell(2);
  for (auto _ : state) {
    auto kps = detect_corners(img, 5);
    benchmark::DoNotOptimize(kps.data());
  }
}
BENCHMARK(BM_FastCorners);

void BM_HogDescriptor(benchmark::State& state) {
  const GrayImage img = resize(synthetic_cell(3), 256, 256);
  for (auto _ : state) {
    Eigen::VectorXf d = hog_descriptor(img);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(BM_HogDescriptor);

void BM_VladEncode(benchmark::State& state) {
  Rng rng(4);
  const int K = static_cast<int>(state.range(0));
  DescriptorSet set;
  set.descriptors = Eigen::MatrixXf::NullaryExpr(
      3600, 128, [&](Eigen::Index, Eigen::Index) { return static_cast<float>(rng.uniform_real()); });
  Eigen::MatrixXf pool = Eigen::MatrixXf::NullaryExpr(
      4096, 128, [&](Eigen::Index, Eigen::Index) { return static_cast<float>(rng.uniform_real()); });
  const auto books = fit_codebooks(pool, 5, K, MiniBatchKMeansParams{1024, 20}, 7);
  for (auto _ : state) {
    Eigen::VectorXd enc = pre_whitening_encoding(set, books, 0.5);
    benchmark::DoNotOptimize(enc.data());
  }
}
BENCHMARK(BM_VladEncode)->Arg(16)->Arg(32);

void BM_LinearSvmTrain(benchmark::State& state) {
  Rng rng(5);
  const Eigen::Index n = 1000, d = 512;
  Eigen::MatrixXd X = Eigen::MatrixXd::NullaryExpr(
      n, d, [&](Eigen::Index, Eigen::Index) { return rng.uniform_real() - 0.5; });
  std::vector<int> y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = X(i, 0) + 0.2 * (rng.uniform_real() - 0.5) > 0.0 ? 1 : -1;
  }
  const Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
  for (auto _ : state) {
    LinearSvmModel model = train_linear(X, y, weights, 1.0);
    benchmark::DoNotOptimize(model.w.data());
  }
}
BENCHMARK(BM_LinearSvmTrain);

}  // namespace

BENCHMARK_MAIN();
