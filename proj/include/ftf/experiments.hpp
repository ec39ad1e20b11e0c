#pragma once

// Synthetic grid signals with their corruption models, plus the timing benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "ftf/errors.hpp"
#include "ftf/estimators.hpp"
#include "ftf/graph.hpp"
#include "ftf/operators.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

// Values in column-major order over spec; truth is the noise-free signal when known.
struct GridSignal {
  LatticeSpec spec;
  Vector values;
  std::optional<Vector> truth;
};

// Standard normal variates from mt19937_64 via the Marsaglia polar method. Unlike
// std::normal_distribution the output sequence is fixed across standard libraries.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {

template <class F>
GridSignal sample_grid(std::size_t d, F&& f) {
  if (d < 2) throw ConstructionError("grid side must be >= 2");
  GridSignal s{LatticeSpec(d, d), Vector(d * d), std::nullopt};
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l)
      s.values[k * d + l] = f(static_cast<double>(l) / static_cast<double>(d),
                              static_cast<double>(k) / static_cast<double>(d));
  s.truth = s.values;
  return s;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

inline double bisigmoid(double x1, double x2) {
  return 0.5 * (detail::logistic(16.0 * x1 - 8.0) + detail::logistic(16.0 * x2 - 8.0));
}

inline double bicubic(double x1, double x2) {
  return 0.5 * (std::pow(2.0 * x1 - 1.0, 3) + std::pow(2.0 * x2 - 1.0, 3)) + 2.0;
}

// Samples at x_k = (k - 1) / d, k = 1..d along both axes.
inline GridSignal gen_bisigmoid(std::size_t d) { return detail::sample_grid(d, bisigmoid); }
inline GridSignal gen_bicubic(std::size_t d) { return detail::sample_grid(d, bicubic); }
inline GridSignal gen_linear(std::size_t d) {
  return detail::sample_grid(d, [](double a, double b) { return a + b; });
}

// values = truth + N(0, sigma2) draws; the input values are used when no truth is stored.
inline GridSignal add_noise(const GridSignal& s, double sigma2, std::uint64_t seed) {
  if (!(sigma2 >= 0.0)) throw ConstructionError("add_noise: variance must be >= 0");
  GridSignal out = s;
  const Vector& base = s.truth ? *s.truth : s.values;
  NormalSampler normal(seed);
  const double sd = std::sqrt(sigma2);
  for (std::size_t i = 0; i < base.size(); ++i) out.values[i] = base[i] + sd * normal();
  return out;
}

// d x d board of squares x squares blocks alternating 0/1, the top-left block 0.
inline GridSignal gen_chessboard(std::size_t d, std::size_t squares) {
  if (squares == 0 || d == 0 || d % squares != 0)
    throw ConstructionError("gen_chessboard: squares must divide d");
  const std::size_t block = d / squares;
  GridSignal s{LatticeSpec(d, d), Vector(d * d), std::nullopt};
  for (std::size_t col = 0; col < d; ++col)
    for (std::size_t row = 0; row < d; ++row)
      s.values[col * d + row] = static_cast<double>((row / block + col / block) % 2);
  s.truth = s.values;
  return s;
}

// Overwrites whole image rows (first axis index) and columns (second axis index) with fill.
inline GridSignal corrupt_lines(const GridSignal& s, std::span<const std::size_t> rows,
                                std::span<const std::size_t> cols, double fill) {
  if (s.spec.dims.size() != 2) throw ConstructionError("corrupt_lines: needs a 2-D lattice");
  const std::size_t n1 = s.spec.dims[0], n2 = s.spec.dims[1];
  GridSignal out = s;
  for (std::size_t r : rows) {
    if (r >= n1) throw ConstructionError("corrupt_lines: row out of range");
    for (std::size_t c = 0; c < n2; ++c) out.values[c * n1 + r] = fill;
  }
  for (std::size_t c : cols) {
    if (c >= n2) throw ConstructionError("corrupt_lines: column out of range");
    for (std::size_t r = 0; r < n1; ++r) out.values[c * n1 + r] = fill;
  }
  return out;
}

inline double mse(std::span<const double> a, std::span<const double> b) {
  detail::require_dims(a.size() == b.size(), "mse: length mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

// ---- benchmark -------------------------------------------------------------------------

enum class BenchSignal { Bisigmoid, Bicubic };

// One estimator/engine combination timed by the benchmark.
struct BenchEstimator {
  TrendKind trend = TrendKind::General;
  Engine engine = Engine::Dual;
  LinearBackend backend = LinearBackend::ConjugateGradient;

  std::string name() const { return trend == TrendKind::General ? "FGTF" : "FKTF"; }
  std::string engine_name() const {
    if (engine == Engine::Dual) return "dual";
    return backend == LinearBackend::ConjugateGradient ? "admm-cg" : "admm-chol";
  }
};

inline std::vector<BenchEstimator> all_bench_estimators() {
  std::vector<BenchEstimator> v;
  for (auto trend : {TrendKind::General, TrendKind::Kronecker}) {
    v.push_back({trend, Engine::Dual, LinearBackend::ConjugateGradient});
    v.push_back({trend, Engine::Admm, LinearBackend::ConjugateGradient});
    v.push_back({trend, Engine::Admm, LinearBackend::Factorization});
  }
  return v;
}

struct BenchmarkConfig {
  std::vector<std::size_t> sizes;
  std::vector<BenchEstimator> estimators = all_bench_estimators();
  std::size_t seeds = 10;
  double lambda_low = 0.0;
  double lambda_high = 20.0;
  BenchSignal signal = BenchSignal::Bisigmoid;
  double sigma2 = 0.25;
  double eps = 1e-3;
  std::uint64_t base_seed = 0;
  // 0 means: read GTF_THREADS, default 1.
  std::size_t threads = 0;
};

struct BenchmarkRecord {
  std::string estimator;
  std::string engine;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double lambda_f = 0.0;
  double lambda_t = 0.0;
  double wall_time_s = 0.0;
  std::size_t iterations = 0;
};

inline std::size_t worker_count_from_env() {
  if (const char* env = std::getenv("GTF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

// Dual tolerance matched to eps, scaled like the ADMM absolute criterion.
inline EstimatorOptions bench_options(const BenchEstimator& e, double eps) {
  EstimatorOptions opt;
  opt.engine = e.engine;
  opt.admm.eps_abs = eps;
  opt.admm.eps_rel = eps;
  opt.admm.backend = e.backend;
  opt.dual.tol = eps;
  return opt;
}

inline std::vector<BenchmarkRecord> benchmark(const BenchmarkConfig& cfg) {
  if (cfg.sizes.empty()) throw ConstructionError("benchmark: sizes must be nonempty");
  struct Job {
    std::size_t d;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t d : cfg.sizes)
    for (std::size_t s = 0; s < cfg.seeds; ++s) jobs.push_back({d, cfg.base_seed + s});

  auto run = [&cfg](Job job) {
    GridSignal truth = cfg.signal == BenchSignal::Bisigmoid ? gen_bisigmoid(job.d) : gen_bicubic(job.d);
    GridSignal noisy = add_noise(truth, cfg.sigma2, job.seed);
    NormalSampler draws(job.seed * 1000003u + job.d);
    const double lf = cfg.lambda_low + (cfg.lambda_high - cfg.lambda_low) * draws.uniform();
    const double lt = cfg.lambda_low + (cfg.lambda_high - cfg.lambda_low) * draws.uniform();
    const DiGraph g = lattice_graph(noisy.spec);
    std::vector<BenchmarkRecord> out;
    for (const auto& e : cfg.estimators) {
      EstimatorRequest req{noisy.values, g, noisy.spec, lf, 0.0, lt, e.trend, bench_options(e, cfg.eps)};
      const auto t0 = std::chrono::steady_clock::now();
      const SolveResult r = fused_trend_filter(req);
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      out.push_back({e.name(), e.engine_name(), job.d, job.seed, lf, lt,
                     std::max(dt.count(), 1e-9), r.iterations});
    }
    return out;
  };

  const std::size_t workers = std::max<std::size_t>(1, cfg.threads ? cfg.threads : worker_count_from_env());
  std::vector<std::vector<BenchmarkRecord>> per_job(jobs.size());
  for (std::size_t start = 0; start < jobs.size(); start += workers) {
    std::vector<std::future<std::vector<BenchmarkRecord>>> futs;
    const std::size_t stop = std::min(jobs.size(), start + workers);
    for (std::size_t j = start; j < stop; ++j)
      futs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, run, jobs[j]));
    for (std::size_t j = start; j < stop; ++j) per_job[j] = futs[j - start].get();
  }
  std::vector<BenchmarkRecord> records;
  for (auto& v : per_job) records.insert(records.end(), v.begin(), v.end());
  return records;
}

struct BenchmarkSummary {
  std::string estimator;
  std::string engine;
  std::size_t d;
  double mean_wall_time_s;
  double mean_iterations;
  std::size_t runs;
};

// Averages keyed by (estimator, engine, d), in key order.
inline std::vector<BenchmarkSummary> summarize(std::span<const BenchmarkRecord> records) {
  std::map<std::tuple<std::string, std::string, std::size_t>, BenchmarkSummary> acc;
  for (const auto& r : records) {
    auto& s = acc.try_emplace({r.estimator, r.engine, r.d}, BenchmarkSummary{r.estimator, r.engine, r.d, 0, 0, 0})
                  .first->second;
    s.mean_wall_time_s += r.wall_time_s;
    s.mean_iterations += static_cast<double>(r.iterations);
    ++s.runs;
  }
  std::vector<BenchmarkSummary> out;
  for (auto& [key, s] : acc) {
    s.mean_wall_time_s /= static_cast<double>(s.runs);
    s.mean_iterations /= static_cast<double>(s.runs);
    out.push_back(s);
  }
  return out;
}

// Nonzero touches per unit of iterative work (one ADMM outer step or one inner CG step)
// for the fused trend filter on a d x d lattice, ADMM with the CG backend.
struct TouchProfile {
  std::size_t d;
  std::size_t edges;
  std::uint64_t touches;
  std::size_t outer_iterations;
  std::size_t inner_iterations;
  double touches_per_iteration;
};

inline TouchProfile admm_touch_profile(std::size_t d, TrendKind trend, std::size_t outer_iterations = 20,
                                       std::uint64_t seed = 7) {
  GridSignal noisy = add_noise(gen_bisigmoid(d), 0.25, seed);
  const DiGraph g = lattice_graph(noisy.spec);
  EstimatorRequest req{noisy.values, g, noisy.spec, 0.5, 0.0, 0.5, trend, {}};
  req.options.engine = Engine::Admm;
  req.options.admm.max_iter = outer_iterations;
  req.options.admm.eps_abs = 1e-12;
  req.options.admm.eps_rel = 1e-12;
  const std::uint64_t before = nonzero_touches();
  const SolveResult r = fused_trend_filter(req);
  const std::uint64_t touches = nonzero_touches() - before;
  return {d,
          g.n_edges(),
          touches,
          r.iterations,
          r.inner_iterations,
          static_cast<double>(touches) / static_cast<double>(r.iterations + r.inner_iterations)};
}

}  // namespace ftf
