#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftf/ftf.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ftf;

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kNotConverged = 3 };

struct UsageError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct SolverFlags {
  std::string engine = "dual";
  std::string backend = "cg";
  double eps_abs = 1e-3;
  double eps_rel = 1e-3;
  double rho1 = 1.0;
  double rho2 = 1.0;
  std::size_t max_iter = 10000;
  double dual_tol = 1e-9;
};

struct FilterFlags {
  std::string input;
  std::string output;
  std::string graph;
  std::string lattice;
  double lambda_f = 0.0;
  double lambda_ni = 0.0;
  double lambda_t = 0.0;
  std::string trend = "general";
  std::uint64_t seed = 0;
  std::string trace;
  SolverFlags solver;
};

struct BenchFlags {
  std::vector<std::size_t> sizes{10, 20, 30};
  std::size_t seeds = 10;
  std::uint64_t seed = 1;
  double lambda_low = 0.0;
  double lambda_high = 20.0;
  double sigma2 = 0.25;
  std::string signal = "bisigmoid";
  double eps = 1e-3;
  std::size_t threads = 0;
  std::string output = "bench.csv";
  bool summary = false;
};

struct DemoFlags {
  std::string out_dir = "demo";
  std::size_t d = 64;
  std::size_t squares = 8;
  double sigma2 = 0.25;
  double lambda_f = 0.5;
  double lambda_t = 0.5;
  std::uint64_t seed = 1;
  SolverFlags solver;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--engine", f.engine, "Solver engine")->check(CLI::IsMember({"admm", "dual"}))->capture_default_str();
  cmd->add_option("--backend", f.backend, "ADMM beta-update backend")
      ->check(CLI::IsMember({"cg", "chol"}))
      ->capture_default_str();
  cmd->add_option("--eps-abs", f.eps_abs, "ADMM absolute tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--eps-rel", f.eps_rel, "ADMM relative tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--rho1", f.rho1, "ADMM penalty for the fusion block")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--rho2", f.rho2, "ADMM penalty for the trend block")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "Iteration cap")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--dual-tol", f.dual_tol, "Dual KKT tolerance")->check(CLI::PositiveNumber)->capture_default_str();
}

EstimatorOptions estimator_options(const SolverFlags& f) {
  EstimatorOptions opt;
  opt.engine = f.engine == "admm" ? Engine::Admm : Engine::Dual;
  opt.admm.backend = f.backend == "chol" ? LinearBackend::Factorization : LinearBackend::ConjugateGradient;
  opt.admm.eps_abs = f.eps_abs;
  opt.admm.eps_rel = f.eps_rel;
  opt.admm.rho1 = f.rho1;
  opt.admm.rho2 = f.rho2;
  opt.admm.max_iter = f.max_iter;
  opt.dual.tol = f.dual_tol;
  opt.dual.max_iter = f.max_iter;
  return opt;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || v == 0)
    throw UsageError("invalid " + what + ": '" + s + "'");
  return v;
}

LatticeSpec parse_lattice(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw UsageError("lattice must look like n1xn2: '" + s + "'");
  return LatticeSpec(parse_size(s.substr(0, x), "lattice side"), parse_size(s.substr(x + 1), "lattice side"));
}

struct GraphChoice {
  DiGraph graph;
  std::optional<LatticeSpec> lattice;
};

GraphChoice load_graph(const FilterFlags& f, std::size_t n, const std::optional<LatticeSpec>& image_lattice) {
  GraphChoice out;
  if (!f.lattice.empty()) out.lattice = parse_lattice(f.lattice);
  if (f.graph.empty()) {
    if (!out.lattice) out.lattice = image_lattice;
    out.graph = out.lattice ? lattice_graph(*out.lattice) : chain_graph(n);
  } else if (f.graph.rfind("chain:", 0) == 0) {
    out.graph = chain_graph(parse_size(f.graph.substr(6), "chain length"));
  } else if (f.graph.rfind("lattice:", 0) == 0) {
    const auto spec = parse_lattice(f.graph.substr(8));
    if (!out.lattice) out.lattice = spec;
    out.graph = lattice_graph(spec);
  } else {
    std::ifstream is(f.graph);
    if (!is) throw IoError("cannot open graph file '" + f.graph + "'");
    try {
      out.graph = read_edge_list(is);
    } catch (const ConstructionError& e) {
      throw IoError(f.graph + ": " + e.what());
    }
  }
  if (out.graph.n_vertices() != n)
    throw UsageError("graph has " + std::to_string(out.graph.n_vertices()) + " vertices but the signal has " +
                     std::to_string(n) + " values");
  if (out.lattice && out.lattice->size() != n) throw UsageError("lattice size does not match the signal length");
  return out;
}

bool is_pgm_path(const std::string& path) {
  auto ext = fs::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".pgm";
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open input '" + path + "'");
  return is;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open output '" + path + "'");
  return os;
}

void write_image(const fs::path& path, const Vector& pixels, std::size_t side) {
  GrayImage img;
  img.width = img.height = side;
  img.pixels = pixels;
  auto os = open_output(path.string());
  write_pgm(os, img);
}

int cmd_filter(const FilterFlags& f) {
  if (f.lambda_f > 0.0 && f.lambda_ni > 0.0) throw UsageError("--lambda-f and --lambda-ni cannot both be positive");

  Vector y;
  std::optional<GrayImage> image;
  bool binary_pgm = true;
  {
    auto is = open_input(f.input);
    if (is_pgm_path(f.input)) {
      binary_pgm = is.peek() != EOF && is.get() == 'P' && is.get() == '5';
      is.seekg(0);
      image = read_pgm(is);
      y = image->pixels;
    } else {
      y = read_signal_csv(is);
    }
  }
  if (y.empty()) throw IoError("input '" + f.input + "' holds no values");

  const auto choice = load_graph(f, y.size(), image ? std::optional(image->lattice()) : std::nullopt);
  const TrendKind trend = f.trend == "kronecker" ? TrendKind::Kronecker : TrendKind::General;
  if (trend == TrendKind::Kronecker && !choice.lattice)
    throw UsageError("--trend kronecker needs a lattice (--lattice or --graph lattice:n1xn2)");

  EstimatorRequest req{y, choice.graph, choice.lattice, f.lambda_f, f.lambda_ni, f.lambda_t, trend,
                       estimator_options(f.solver)};
  std::ofstream trace_file;
  std::optional<CsvTrace> trace;
  if (!f.trace.empty()) {
    trace_file = open_output(f.trace);
    trace.emplace(trace_file);
    req.options.trace = trace->sink();
  }

  const SolveResult res = f.lambda_ni > 0.0 ? nearly_isotonic_trend_filter(req) : fused_trend_filter(req);

  auto os = open_output(f.output);
  if (image) {
    GrayImage out = *image;
    out.pixels = res.beta;
    write_pgm(os, out, binary_pgm);
  } else {
    write_signal_csv(os, res.beta);
  }
  os.close();
  if (!os) throw IoError("failed writing '" + f.output + "'");

  std::cout << "n=" << y.size() << " m=" << choice.graph.n_edges() << " iters=" << res.iterations
            << " objective=" << format_real(res.objective) << '\n';
  if (!res.converged) {
    std::cerr << "warning: solver did not converge within the iteration cap\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_bench(const BenchFlags& f) {
  BenchmarkConfig cfg;
  cfg.sizes = f.sizes;
  cfg.seeds = f.seeds;
  cfg.base_seed = f.seed;
  cfg.lambda_low = f.lambda_low;
  cfg.lambda_high = f.lambda_high;
  cfg.sigma2 = f.sigma2;
  cfg.signal = f.signal == "bicubic" ? BenchSignal::Bicubic : BenchSignal::Bisigmoid;
  cfg.eps = f.eps;
  cfg.threads = f.threads;
  const auto records = benchmark(cfg);

  auto os = open_output(f.output);
  os << "estimator,engine,d,seed,lambda_f,lambda_t,wall_time_s,iterations\n";
  for (const auto& r : records)
    os << r.estimator << ',' << r.engine << ',' << r.d << ',' << r.seed << ',' << format_real(r.lambda_f) << ','
       << format_real(r.lambda_t) << ',' << format_real(r.wall_time_s) << ',' << r.iterations << '\n';
  os.close();
  if (!os) throw IoError("failed writing '" + f.output + "'");

  if (f.summary) {
    std::cout << "estimator,engine,d,runs,mean_wall_time_s,mean_iterations\n";
    for (const auto& s : summarize(records))
      std::cout << s.estimator << ',' << s.engine << ',' << s.d << ',' << s.runs << ',' << format_real(s.mean_wall_time_s)
                << ',' << format_real(s.mean_iterations) << '\n';
  }
  return kOk;
}

int cmd_demo(const DemoFlags& f) {
  const fs::path dir(f.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + f.out_dir + "': " + ec.message());

  const GridSignal board = gen_chessboard(f.d, f.squares);
  const std::size_t rows[] = {f.d / 4, 5 * f.d / 8};
  const std::size_t cols[] = {3 * f.d / 8, 3 * f.d / 4};
  GridSignal corrupted = add_noise(corrupt_lines(board, rows, cols, 1.0), f.sigma2, f.seed);
  corrupted.truth = board.values;

  write_image(dir / "original.pgm", board.values, f.d);
  write_image(dir / "corrupted.pgm", corrupted.values, f.d);

  const DiGraph g = lattice_graph(board.spec);
  const EstimatorOptions opt = estimator_options(f.solver);
  struct Variant {
    const char* name;
    double lambda_f;
    double lambda_t;
    TrendKind trend;
  };
  const Variant variants[] = {{"fused_lasso", f.lambda_f, 0.0, TrendKind::General},
                              {"general_trend", 0.0, f.lambda_t, TrendKind::General},
                              {"kronecker_trend", 0.0, f.lambda_t, TrendKind::Kronecker},
                              {"fused_general_trend", f.lambda_f, f.lambda_t, TrendKind::General},
                              {"fused_kronecker_trend", f.lambda_f, f.lambda_t, TrendKind::Kronecker}};

  auto table = open_output((dir / "mse.csv").string());
  table << "image,lambda_f,lambda_t,mse\n";
  table << "corrupted,0,0," << format_real(mse(corrupted.values, board.values)) << '\n';
  std::cout << "image                   mse\n";
  std::printf("%-22s  %.6f\n", "corrupted", mse(corrupted.values, board.values));
  bool converged = true;
  for (const auto& v : variants) {
    const EstimatorRequest req{corrupted.values, g, board.spec, v.lambda_f, 0.0, v.lambda_t, v.trend, opt};
    const SolveResult r = fused_trend_filter(req);
    converged = converged && r.converged;
    write_image(dir / (std::string(v.name) + ".pgm"), r.beta, f.d);
    const double err = mse(r.beta, board.values);
    table << v.name << ',' << format_real(v.lambda_f) << ',' << format_real(v.lambda_t) << ',' << format_real(err)
          << '\n';
    std::printf("%-22s  %.6f\n", v.name, err);
  }
  table.close();
  if (!table) throw IoError("failed writing the MSE table");
  return converged ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fused and trend-filtered signal estimation on graphs and lattices"};
  app.require_subcommand(1);

  FilterFlags filter;
  auto* fcmd = app.add_subcommand("filter", "Filter a CSV signal or PGM image");
  fcmd->add_option("input", filter.input, "Input signal (.csv) or image (.pgm)")->required();
  fcmd->add_option("output", filter.output, "Output path, written in the input's format")->required();
  fcmd->add_option("--graph", filter.graph, "Edge-list file, chain:n or lattice:n1xn2");
  fcmd->add_option("--lattice", filter.lattice, "Lattice shape n1xn2 for the Kronecker trend");
  fcmd->add_option("--lambda-f,--fused", filter.lambda_f, "Fusion weight")->check(CLI::NonNegativeNumber);
  fcmd->add_option("--lambda-ni", filter.lambda_ni, "Nearly-isotonic weight")->check(CLI::NonNegativeNumber);
  fcmd->add_option("--lambda-t", filter.lambda_t, "Trend weight")->check(CLI::NonNegativeNumber);
  fcmd->add_option("--trend", filter.trend, "Trend operator")
      ->check(CLI::IsMember({"general", "kronecker"}))
      ->capture_default_str();
  fcmd->add_option("--seed", filter.seed, "Seed (accepted for uniformity; filtering is deterministic)");
  fcmd->add_option("--trace", filter.trace, "Write per-iteration diagnostics as CSV");
  add_solver_flags(fcmd, filter.solver);

  BenchFlags bench;
  auto* bcmd = app.add_subcommand("bench", "Time the fused trend filters on synthetic grids");
  bcmd->add_option("--sizes", bench.sizes, "Grid sides")->delimiter(',')->capture_default_str();
  bcmd->add_option("--seeds", bench.seeds, "Runs per size")->check(CLI::PositiveNumber)->capture_default_str();
  bcmd->add_option("--seed", bench.seed, "First seed")->capture_default_str();
  bcmd->add_option("--lambda-low", bench.lambda_low, "Lower end of the weight distribution")->capture_default_str();
  bcmd->add_option("--lambda-high", bench.lambda_high, "Upper end of the weight distribution")->capture_default_str();
  bcmd->add_option("--sigma2", bench.sigma2, "Noise variance")->check(CLI::NonNegativeNumber)->capture_default_str();
  bcmd->add_option("--signal", bench.signal, "Test surface")
      ->check(CLI::IsMember({"bisigmoid", "bicubic"}))
      ->capture_default_str();
  bcmd->add_option("--eps", bench.eps, "Solver tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  bcmd->add_option("--threads", bench.threads, "Worker count (default: GTF_THREADS or 1)");
  bcmd->add_option("-o,--output", bench.output, "CSV output path")->capture_default_str();
  bcmd->add_flag("--summary", bench.summary, "Print per-size averages");

  DemoFlags demo;
  auto* dcmd = app.add_subcommand("demo", "Chessboard denoising and inpainting images with an MSE table");
  dcmd->add_option("-o,--out-dir", demo.out_dir, "Output directory")->capture_default_str();
  dcmd->add_option("--d", demo.d, "Image side")->check(CLI::PositiveNumber)->capture_default_str();
  dcmd->add_option("--squares", demo.squares, "Squares per side")->check(CLI::PositiveNumber)->capture_default_str();
  dcmd->add_option("--sigma2", demo.sigma2, "Noise variance")->check(CLI::NonNegativeNumber)->capture_default_str();
  dcmd->add_option("--lambda-f", demo.lambda_f, "Fusion weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  dcmd->add_option("--lambda-t", demo.lambda_t, "Trend weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  dcmd->add_option("--seed", demo.seed, "Noise seed")->capture_default_str();
  add_solver_flags(dcmd, demo.solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fcmd) return cmd_filter(filter);
    if (*bcmd) return cmd_bench(bench);
    return cmd_demo(demo);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
