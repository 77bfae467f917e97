#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sage/design.hpp"
#include "sage/error.hpp"
#include "sage/harness.hpp"
#include "sage/parallel.hpp"
#include "sage/serialize.hpp"
#include "sage/simd/kernels.hpp"

namespace sage::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int env_threads() {
  if (const char* s = std::getenv("SAGE_THREADS")) {
    const int t = std::atoi(s);
    if (t > 0) return t;
  }
  return default_threads();
}

class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args, fs::path out)
      : command_(std::move(command)), args_(args), out_(std::move(out)), started_(utc_now()) {}

  fs::path output(const std::string& rel) {
    outputs_.push_back(rel);
    return out_ / rel;
  }

  void write(const Json& config, std::uint64_t seed) {
    Json versions = {{"sage", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"kernels", std::string(simd::kernels().name)}};
    Json m = {{"command", command_}, {"args", args_},        {"config", config},
              {"config_hash", config_hash(config)},           {"seed", seed},
              {"versions", versions},  {"started", started_}, {"finished", utc_now()},
              {"outputs", outputs_}};
    write_json_file(out_ / "manifest.json", m);
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path out_;
  std::string started_;
  std::vector<std::string> outputs_;
};

Dataset load_dataset(const fs::path& dir) {
  const Matrix U = read_csv_matrix(dir / "U.csv");
  const Matrix X = read_csv_matrix(dir / "X.csv");
  if (U.rows() != X.rows())
    throw InvalidArgument("U.csv has " + std::to_string(U.rows()) + " rows but X.csv has " + std::to_string(X.rows()));
  if (fs::exists(dir / "Gamma.csv")) return Dataset::from_observations(U, X, read_csv_matrix(dir / "Gamma.csv"));
  return Dataset::from_observations(U, X);
}

// "k:h" with 1-based partner k.
Index parse_coord(const std::string& s, const CoefLayout& layout, int j) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw InvalidArgument("coordinate '" + s + "' is not of the form k:h");
  try {
    const int k = std::stoi(s.substr(0, colon));
    const int h = std::stoi(s.substr(colon + 1));
    if (k < 1 || k > layout.p()) throw InvalidArgument("coordinate '" + s + "': partner out of range");
    return layout.index_of(j, k - 1, h);
  } catch (const std::logic_error&) {
    throw InvalidArgument("coordinate '" + s + "' is not of the form k:h");
  }
}

struct SimulateOpts {
  std::string config, out;
  int p = 4, q = 2;
  Index n = 100;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateOpts& o, const std::vector<std::string>& args) {
  PrecisionModel model;
  Index n = o.n;
  std::uint64_t seed = o.seed;
  bool have_model = false;
  if (!o.config.empty()) {
    const Json c = read_json_file(o.config);
    try {
      n = c.value("n", n);
      seed = c.value("seed", seed);
      if (c.contains("model")) {
        model = model_from_json(c.at("model"));
        have_model = true;
      } else {
        model = paper_default_model(c.value("p", o.p), c.value("q", o.q));
        have_model = true;
      }
    } catch (const Json::exception& e) {
      throw InvalidArgument(std::string("simulate config: ") + e.what());
    }
  }
  if (!have_model) model = paper_default_model(o.p, o.q);
  if (n < 1) throw InvalidArgument("simulate: n must be positive");

  const fs::path out(o.out);
  Manifest man("simulate", args, out);
  const Dataset data = sample(model, n, seed);
  write_csv_matrix(man.output("U.csv"), data.U);
  write_csv_matrix(man.output("X.csv"), data.X);
  write_json_file(man.output("model.json"), model_to_json(model));
  const MultiTaskCoef truth = true_beta(model);
  write_json_file(man.output("truth.json"), {{"p", model.p}, {"q", model.q}, {"coefficients", coef_to_json(truth)}});
  man.write({{"model", model_to_json(model)}, {"n", n}, {"seed", seed}}, seed);
  std::cout << "wrote " << n << " observations (p=" << model.p << ", q=" << model.q << ") to " << out.string() << '\n';
  return 0;
}

struct FitOpts {
  std::string data, out;
  double lambda_e = -1.0, lambda_g = -1.0;
  bool cv = false;
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int folds = 5;
  std::uint64_t seed = 1;
  int max_iter = 20000;
  double tol = 1e-7;
  double kkt_tol = 1e-5;
  int threads = 0;
};

int cmd_fit(const FitOpts& o, const std::vector<std::string>& args) {
  const Dataset data = load_dataset(o.data);
  FitConfig fc;
  fc.max_iter = o.max_iter;
  fc.tol = o.tol;
  fc.kkt_tol = o.kkt_tol;
  fc.threads = o.threads;
  Json cfg = {{"data", o.data}, {"cv", o.cv}, {"max_iter", o.max_iter}, {"tol", o.tol}, {"kkt_tol", o.kkt_tol}};
  if (o.cv) {
    CVConfig cv;
    cv.grid = o.grid;
    cv.folds = o.folds;
    cv.seed = o.seed;
    cv.fit = fc;
    const CVResult chosen = cross_validate(data, cv);
    fc.lambda_e = chosen.lambda_e;
    fc.lambda_g = chosen.lambda_g;
    cfg["grid"] = o.grid;
    cfg["folds"] = o.folds;
    cfg["cv_error"] = chosen.error;
  } else {
    if (o.lambda_e < 0.0) throw InvalidArgument("fit: give --lambda-e or --cv");
    fc.lambda_e = o.lambda_e;
    fc.lambda_g = o.lambda_g >= 0.0 ? o.lambda_g : o.lambda_e / std::sqrt(2.0);
  }
  cfg["lambda_e"] = fc.lambda_e;
  cfg["lambda_g"] = fc.lambda_g;

  const fs::path out(o.out);
  Manifest man("fit", args, out);
  const FitResult res = fit(FitProblem::build(data, FitProblem::Storage::automatic, fc.threads), fc);
  Json doc = fit_result_to_json(res, fc);
  if (o.cv) doc["cv"] = {{"grid", cfg["grid"]}, {"error", cfg["cv_error"]}};
  write_json_file(man.output("fit.json"), doc);
  man.write(cfg, o.seed);
  std::cout << "lambda_e=" << fc.lambda_e << " lambda_g=" << fc.lambda_g << " iterations=" << res.iterations
            << " kkt=" << res.kkt_residual << (res.converged ? "" : " (not converged)") << '\n';
  return res.converged ? 0 : 1;
}

struct InferOpts {
  std::string data, fit, out, contrast;
  int node = 1;
  std::vector<std::string> coords;
  bool all = false;
  double level = 0.95, alpha = -1.0, gamma = -1.0;
  int threads = 0;
};

int cmd_infer(const InferOpts& o, const std::vector<std::string>& args) {
  const Dataset data = load_dataset(o.data);
  const CoefLayout layout = data.layout();
  if (o.node < 1 || o.node > layout.p()) throw InvalidArgument("infer: --node out of range");
  const int j = o.node - 1;
  const FitResult fitres = fit_result_from_json(read_json_file(o.fit), layout);

  std::vector<Index> wanted;
  if (o.all) {
    for (Index l = 0; l < layout.node_length(); ++l) wanted.push_back(l);
  } else {
    for (const auto& c : o.coords) wanted.push_back(parse_coord(c, layout, j));
  }
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  if (wanted.empty() && o.contrast.empty()) throw InvalidArgument("infer: give --coords, --all or --contrast");

  DebiasConfig dc = DebiasConfig::for_sample_size(data.n());
  if (o.alpha > 0.0) dc.alpha = o.alpha;
  if (o.gamma > 0.0) dc.gamma = o.gamma;
  dc.threads = o.threads;
  dc.validate();

  const NodeDesign design = build_node_design(data, j);
  const EigenFactor eigen = eigen_factor(design);
  std::vector<DebiasColumn> cols = solve_columns(eigen, layout, wanted, dc);
  const SageEstimate est = sage_update(fitres.beta.node(j), design, std::move(cols));

  InferenceReport rep;
  rep.j = j;
  rep.level = o.level;
  rep.alpha = dc.alpha;
  rep.gamma = dc.gamma;
  rep.noise = estimate_noise(design, fitres.support[j]);
  rep.coords = infer_coordinates(est, rep.noise, o.level);
  if (!o.contrast.empty()) {
    const ContrastSpec spec = contrast_from_json(read_json_file(o.contrast), layout, j);
    rep.contrasts.push_back(contrast_infer(spec.A, spec.null_value, est, design, rep.noise));
  }

  const fs::path out(o.out);
  Manifest man("infer", args, out);
  Json doc = inference_report_to_json(rep, layout);
  doc["debias"] = sage_to_json(est, layout);
  write_json_file(man.output("inference.json"), doc);
  write_text_file(man.output("inference.csv"), inference_report_csv(rep, layout));
  man.write({{"data", o.data},
             {"fit", o.fit},
             {"node", o.node},
             {"coords", o.coords},
             {"all", o.all},
             {"contrast", o.contrast},
             {"level", o.level},
             {"alpha", dc.alpha},
             {"gamma", dc.gamma}},
            0);
  std::cout << inference_report_csv(rep, layout);
  for (const auto& c : rep.contrasts) std::cout << "contrast chi2=" << c.chi2 << " df=" << c.df << " p=" << c.p << '\n';
  return 0;
}

struct StudyOpts {
  std::string config, out;
  int reps = -1;
  int threads = 0;
  long long seed = -1;
  bool full_scale = false;
};

int cmd_study(const StudyOpts& o, const std::vector<std::string>& args) {
  StudyConfig c;
  if (!o.config.empty()) c = study_config_from_json(read_json_file(o.config));
  if (o.full_scale) {
    c.p = 120;
    c.q = 20;
    c.n = 400;
    c.reps = 200;
  }
  if (o.reps > 0) c.reps = o.reps;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  c.threads = o.threads;
  c.run_dir = o.out;
  c.validate();

  const fs::path out(o.out);
  Manifest man("study", args, out);
  const StudyRun run = run_study(c);
  const CoefLayout layout(c.p, c.q);
  write_json_file(man.output("summary.json"), study_summary_to_json(run.summary, c));
  const std::string table = format_summary_table(run.summary, c);
  write_text_file(man.output("summary.txt"), table);
  write_text_file(man.output("estimates.csv"), estimates_csv(run.records, layout));
  if (!run.records.empty() && !run.records.front().contrasts.empty())
    write_text_file(man.output("contrasts.csv"), contrasts_csv(run.records));
  if (run.records.size() >= 10) {
    for (std::size_t t = 0; t < run.records.front().tracked.size(); ++t) {
      std::vector<double> z;
      for (const auto& r : run.records) z.push_back(r.tracked[t].standardized);
      const Index idx = run.records.front().tracked[t].index;
      write_text_file(man.output("qq_" + std::to_string(idx) + ".csv"), qq_csv(export_qq(z)));
    }
    for (std::size_t k = 0; k < run.records.front().contrasts.size(); ++k) {
      const auto& first = run.records.front().contrasts[k];
      for (Index d = 0; d < first.standardized.size(); ++d) {
        std::vector<double> z;
        for (const auto& r : run.records) z.push_back(r.contrasts[k].standardized[d]);
        write_text_file(man.output(std::string("qq_case_") + contrast_name(first.which) + "_" + std::to_string(d + 1) +
                                   ".csv"),
                        qq_csv(export_qq(z)));
      }
    }
  }
  for (const auto& r : run.records) {
    char name[40];
    std::snprintf(name, sizeof name, "reps/rep_%04d.json", r.rep);
    man.output(name);
  }
  man.write(study_config_to_json(c), c.seed);
  std::cout << table;
  return 0;
}

struct BenchOpts {
  std::string out;
  std::vector<int> n_list{50, 100};
  std::vector<int> p_list{20, 50, 100};
  int q = 20;
  int runs = 3;
  std::uint64_t seed = 7;
  double alpha = 0.0, gamma = 0.0;
};

int cmd_bench(const BenchOpts& o, const std::vector<std::string>& args) {
  BenchConfig b;
  b.n_list = o.n_list;
  b.p_list = o.p_list;
  b.q = o.q;
  b.runs = o.runs;
  b.seed = o.seed;
  b.debias.alpha = o.alpha;
  b.debias.gamma = o.gamma;
  const fs::path out(o.out);
  Manifest man("bench", args, out);
  const std::vector<BenchRow> rows = timing_bench(b);
  write_json_file(man.output("bench.json"), bench_rows_to_json(rows));
  const std::string table = format_bench_table(rows);
  write_text_file(man.output("bench.txt"), table);
  man.write({{"n", o.n_list}, {"p", o.p_list}, {"q", o.q}, {"runs", o.runs}, {"seed", o.seed}, {"alpha", o.alpha}, {"gamma", o.gamma}},
            o.seed);
  std::cout << table;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Debiased inference for multi-task sparse-group-lasso graphical regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const int threads_default = env_threads();

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "Draw a dataset from the default (or a JSON) model");
  sim->add_option("--config", so.config, "JSON with p, q, n, seed and optionally model")->check(CLI::ExistingFile);
  sim->add_option("--p", so.p, "number of nodes");
  sim->add_option("--q", so.q, "number of covariates");
  sim->add_option("--n", so.n, "sample size");
  sim->add_option("--seed", so.seed, "master seed");
  sim->add_option("--out", so.out, "output directory")->required();

  FitOpts fo;
  fo.threads = threads_default;
  auto* fitc = app.add_subcommand("fit", "Fit the joint sparse-group lasso");
  fitc->add_option("--data", fo.data, "directory with U.csv and X.csv")->required()->check(CLI::ExistingDirectory);
  fitc->add_option("--lambda-e", fo.lambda_e, "elementwise penalty");
  fitc->add_option("--lambda-g", fo.lambda_g, "group penalty (default lambda_e/sqrt(2))");
  fitc->add_flag("--cv", fo.cv, "choose lambda_e by cross-validation");
  fitc->add_option("--grid", fo.grid, "CV grid for lambda_e");
  fitc->add_option("--folds", fo.folds, "CV folds");
  fitc->add_option("--seed", fo.seed, "CV shuffle seed");
  fitc->add_option("--max-iter", fo.max_iter);
  fitc->add_option("--tol", fo.tol, "relative objective change");
  fitc->add_option("--kkt-tol", fo.kkt_tol, "prox-gradient residual");
  fitc->add_option("--threads", fo.threads);
  fitc->add_option("--out", fo.out, "output directory")->required();

  InferOpts io;
  io.threads = threads_default;
  auto* inf = app.add_subcommand("infer", "Debias one node and report intervals and tests");
  inf->add_option("--data", io.data, "directory with U.csv and X.csv")->required()->check(CLI::ExistingDirectory);
  inf->add_option("--fit", io.fit, "fit.json from the fit command")->required()->check(CLI::ExistingFile);
  inf->add_option("--node", io.node, "node j (1-based)");
  inf->add_option("--coords", io.coords, "coordinates k:h (partner k 1-based, group h)");
  inf->add_flag("--all", io.all, "debias every coordinate of the node");
  inf->add_option("--contrast", io.contrast, "contrast JSON file")->check(CLI::ExistingFile);
  inf->add_option("--level", io.level, "confidence level");
  inf->add_option("--alpha", io.alpha, "soft-threshold level (default 1/sqrt(n))");
  inf->add_option("--gamma", io.gamma, "constraint radius (default 2/sqrt(n))");
  inf->add_option("--threads", io.threads);
  inf->add_option("--out", io.out, "output directory")->required();

  StudyOpts sto;
  sto.threads = threads_default;
  auto* stu = app.add_subcommand("study", "Run the replication study");
  stu->add_option("--config", sto.config, "study config JSON")->check(CLI::ExistingFile);
  stu->add_option("--reps", sto.reps, "number of replications");
  stu->add_option("--seed", sto.seed, "master seed");
  stu->add_flag("--full-scale", sto.full_scale, "(p,q)=(120,20), n=400, 200 replications");
  stu->add_option("--threads", sto.threads);
  stu->add_option("--out", sto.out, "output directory")->required();

  BenchOpts bo;
  auto* ben = app.add_subcommand("bench", "Time the full-space and projected debias solvers");
  ben->add_option("--n", bo.n_list, "sample sizes");
  ben->add_option("--p", bo.p_list, "node counts");
  ben->add_option("--q", bo.q, "covariates");
  ben->add_option("--runs", bo.runs, "runs per size (median reported)");
  ben->add_option("--seed", bo.seed);
  ben->add_option("--alpha", bo.alpha, "soft-threshold level (default 1/sqrt(n))");
  ben->add_option("--gamma", bo.gamma, "constraint radius (default 3/sqrt(n))");
  ben->add_option("--out", bo.out, "output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(so, args);
    if (*fitc) return cmd_fit(fo, args);
    if (*inf) return cmd_infer(io, args);
    if (*stu) return cmd_study(sto, args);
    if (*ben) return cmd_bench(bo, args);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sage::cli
