#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "conservation.hpp"
#include "ftf/experiments.hpp"
#include "test_util.hpp"

namespace ftf {
namespace {

using testing::max_abs_diff;

TEST(Generators, FunctionValues) {
  EXPECT_DOUBLE_EQ(bisigmoid(0.5, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(bicubic(0.5, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(bicubic(0.0, 0.0), 1.0);
}

TEST(Generators, SampleLayout) {
  for (auto gen : {gen_bisigmoid, gen_bicubic, gen_linear}) {
    const auto s = gen(7);
    EXPECT_EQ(s.spec.dims, (std::vector<std::size_t>{7, 7}));
    ASSERT_EQ(s.values.size(), 49u);
    ASSERT_TRUE(s.truth);
    EXPECT_EQ(*s.truth, s.values);
  }
  const std::size_t d = 6;
  const auto b = gen_bicubic(d);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l)
      EXPECT_DOUBLE_EQ(b.values[k * d + l], bicubic(static_cast<double>(l) / d, static_cast<double>(k) / d));
  EXPECT_THROW(gen_bisigmoid(1), ConstructionError);
}

TEST(Generators, LinearSurface) {
  const std::size_t d = 9;
  const auto s = gen_linear(d);
  EXPECT_EQ(s.truth->front(), 0.0);
  EXPECT_DOUBLE_EQ(s.truth->back(), 2.0 * (d - 1) / d);
  EXPECT_LT(norm_inf(matvec(kronecker_trend_matrix(s.spec), *s.truth)), 1e-12);
}

TEST(Noise, ZeroVarianceKeepsTruth) {
  const auto s = gen_bisigmoid(5);
  EXPECT_EQ(add_noise(s, 0.0, 3).values, *s.truth);
  EXPECT_THROW(add_noise(s, -1.0, 3), ConstructionError);
}

TEST(Noise, DeterministicPerSeed) {
  const auto s = gen_bicubic(12);
  EXPECT_EQ(add_noise(s, 0.25, 99).values, add_noise(s, 0.25, 99).values);
  EXPECT_NE(add_noise(s, 0.25, 99).values, add_noise(s, 0.25, 100).values);
  EXPECT_EQ(*add_noise(s, 0.25, 99).truth, *s.truth);
}

TEST(Noise, FixedSequence) {
  NormalSampler a(2024), b(2024);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a(), b());
  NormalSampler u(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Noise, SampleVarianceMatches) {
  GridSignal zero{LatticeSpec(1000, 1000), Vector(1000000, 0.0), std::nullopt};
  const auto noisy = add_noise(zero, 0.25, 17);
  double mean = 0.0;
  for (double v : noisy.values) mean += v;
  mean /= 1e6;
  double var = 0.0;
  for (double v : noisy.values) var += (v - mean) * (v - mean);
  var /= 1e6 - 1;
  EXPECT_NEAR(var, 0.25, 0.0025);
  EXPECT_NEAR(mean, 0.0, 5e-3);
}

TEST(Chessboard, Blocks) {
  const auto s = gen_chessboard(8, 2);
  for (std::size_t c = 0; c < 8; ++c)
    for (std::size_t r = 0; r < 8; ++r) EXPECT_EQ(s.values[c * 8 + r], ((r / 4 + c / 4) % 2) ? 1.0 : 0.0);
  EXPECT_EQ(s.values[0], 0.0);
  EXPECT_EQ(s.values[4], 1.0);
  EXPECT_EQ(s.values[4 * 8], 1.0);
  EXPECT_EQ(s.values[4 * 8 + 4], 0.0);
  EXPECT_THROW(gen_chessboard(8, 3), ConstructionError);
  EXPECT_THROW(gen_chessboard(8, 0), ConstructionError);
}

TEST(CorruptLines, EmptyListsAreIdentity) {
  const auto s = gen_chessboard(16, 4);
  EXPECT_EQ(corrupt_lines(s, {}, {}, 1.0).values, s.values);
}

TEST(CorruptLines, OverwritesRowsAndColumns) {
  const auto s = gen_chessboard(64, 8);
  const std::size_t rows[] = {10, 30}, cols[] = {5};
  const auto c = corrupt_lines(s, rows, cols, 1.0);
  for (std::size_t col = 0; col < 64; ++col)
    for (std::size_t row = 0; row < 64; ++row) {
      const bool hit = row == 10 || row == 30 || col == 5;
      EXPECT_EQ(c.values[col * 64 + row], hit ? 1.0 : s.values[col * 64 + row]);
    }
  EXPECT_EQ(*c.truth, *s.truth);
  const std::size_t bad[] = {64};
  EXPECT_THROW(corrupt_lines(s, bad, {}, 1.0), ConstructionError);
  EXPECT_THROW(corrupt_lines(s, {}, bad, 1.0), ConstructionError);
}

TEST(Mse, Examples) {
  const Vector x{1, 2, 3};
  EXPECT_EQ(mse(x, x), 0.0);
  EXPECT_EQ(mse(Vector{0, 0}, Vector{1, 1}), 1.0);
  EXPECT_THROW(mse(Vector{0}, Vector{1, 1}), DimensionError);
}

TEST(Benchmark, OneRecordPerEstimator) {
  BenchmarkConfig cfg;
  cfg.sizes = {10};
  cfg.seeds = 1;
  const auto recs = benchmark(cfg);
  ASSERT_EQ(recs.size(), all_bench_estimators().size());
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& r : recs) {
    EXPECT_GT(r.wall_time_s, 0.0);
    EXPECT_GT(r.iterations, 0u);
    EXPECT_EQ(r.d, 10u);
    EXPECT_GE(r.lambda_f, 0.0);
    EXPECT_LE(r.lambda_f, 20.0);
    keys.insert({r.estimator, r.engine});
  }
  EXPECT_EQ(keys.size(), recs.size());
  BenchmarkConfig empty;
  EXPECT_THROW(benchmark(empty), ConstructionError);
}

TEST(Benchmark, ParallelRunsMatchSerialRuns) {
  BenchmarkConfig cfg;
  cfg.sizes = {6, 8};
  cfg.seeds = 3;
  cfg.threads = 1;
  const auto serial = benchmark(cfg);
  cfg.threads = 4;
  const auto parallel = benchmark(cfg);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].estimator, parallel[i].estimator);
    EXPECT_EQ(serial[i].engine, parallel[i].engine);
    EXPECT_EQ(serial[i].d, parallel[i].d);
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_EQ(serial[i].lambda_f, parallel[i].lambda_f);
    EXPECT_EQ(serial[i].iterations, parallel[i].iterations);
  }
}

TEST(Benchmark, SummaryAveragesPerKey) {
  const std::vector<BenchmarkRecord> recs = {{"FGTF", "dual", 10, 1, 0, 0, 1.0, 10},
                                             {"FGTF", "dual", 10, 2, 0, 0, 3.0, 20},
                                             {"FGTF", "admm-cg", 10, 1, 0, 0, 5.0, 7},
                                             {"FKTF", "dual", 12, 1, 0, 0, 2.0, 4}};
  const auto sum = summarize(recs);
  ASSERT_EQ(sum.size(), 3u);
  EXPECT_EQ(sum[0].engine, "admm-cg");
  EXPECT_EQ(sum[1].estimator, "FGTF");
  EXPECT_EQ(sum[1].engine, "dual");
  EXPECT_DOUBLE_EQ(sum[1].mean_wall_time_s, 2.0);
  EXPECT_DOUBLE_EQ(sum[1].mean_iterations, 15.0);
  EXPECT_EQ(sum[1].runs, 2u);
  EXPECT_EQ(sum[2].d, 12u);
}

TEST(Benchmark, WorkerCountFromEnvironment) {
  ::setenv("GTF_THREADS", "3", 1);
  EXPECT_EQ(worker_count_from_env(), 3u);
  ::setenv("GTF_THREADS", "zero", 1);
  EXPECT_EQ(worker_count_from_env(), 1u);
  ::setenv("GTF_THREADS", "-2", 1);
  EXPECT_EQ(worker_count_from_env(), 1u);
  ::unsetenv("GTF_THREADS");
  EXPECT_EQ(worker_count_from_env(), 1u);
}

TEST(TouchProfile, ScalesWithEdgeCount) {
  const auto small = admm_touch_profile(16, TrendKind::General);
  const auto large = admm_touch_profile(32, TrendKind::General);
  EXPECT_EQ(small.edges, 2u * 16 * 15);
  EXPECT_EQ(large.outer_iterations, 20u);
  const double ratio = large.touches_per_iteration / small.touches_per_iteration;
  const double edge_ratio = static_cast<double>(large.edges) / static_cast<double>(small.edges);
  EXPECT_NEAR(ratio / edge_ratio, 1.0, 0.15);
}

TEST(Experiments, DenoisedOutputsConserveSum) {
  const auto noisy = add_noise(gen_bisigmoid(12), 0.25, 8);
  const auto g = lattice_graph(noisy.spec);
  for (auto trend : {TrendKind::General, TrendKind::Kronecker}) {
    EstimatorRequest req{noisy.values, g, noisy.spec, 1.0, 0.0, 1.0, trend, {}};
    const auto r = fused_trend_filter(req);
    EXPECT_LE(testing::conservation_error(noisy.values, r.beta), testing::conservation_bound(noisy.values));
    EXPECT_LT(mse(r.beta, *noisy.truth), mse(noisy.values, *noisy.truth));
  }
}

}  // namespace
}  // namespace ftf
