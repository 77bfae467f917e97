#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sage/debias.hpp"
#include "sage/inference.hpp"
#include "sage/sgl_fit.hpp"
#include "sage/simulator.hpp"

namespace sage {

struct LambdaChoice {
  bool cross_validated = false;
  double lambda_e = 0.3;
  double lambda_g = 0.3 / 1.4142135623730951;
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double ratio = 0.70710678118654752;
  int folds = 5;
};

/// The four linear contrasts on node 1 used in the simulation study.
enum class ContrastCase { I = 0, II = 1, III = 2, IV = 3 };

struct StudyConfig {
  int p = 30;
  int q = 10;
  Index n = 400;
  LambdaChoice lambda;
  double alpha = 0.0;  // <= 0 selects 1/sqrt(n)
  double gamma = 0.0;  // <= 0 selects 2/sqrt(n)
  int reps = 100;
  std::uint64_t seed = 2024;
  std::vector<Index> tracked;  // stacked 0-based positions; empty selects ind_1..ind_4
  std::array<bool, 4> contrasts{false, false, false, false};
  bool oracle = true;
  double level = 0.95;
  int threads = 1;
  std::string run_dir;  // per-replication JSON artifacts when non-empty
  FitConfig fit;
  DebiasConfig debias;

  void validate() const;
  DebiasConfig debias_config() const;
  std::vector<Index> tracked_or_default() const;
};

/// ind_1 = p, ind_2 = 2p-1, ind_3 = L+p, ind_4 = L+2p-1 (1-based), returned 0-based.
std::vector<Index> default_tracked(int p, int q);

/// Contrast matrix (rows x L) on node 1 and the value A beta under the default model.
std::pair<Matrix, Vector> contrast_case(ContrastCase c, int p, int q);
const char* contrast_name(ContrastCase c);

struct TrackedRecord {
  Index index = 0;  // stacked position
  double truth = 0.0;
  double pre = 0.0;   // penalised estimate
  double post = 0.0;  // debiased estimate
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double standardized = 0.0;
  double variance_factor = 0.0;
};

struct OracleRecord {
  Index index = 0;
  double truth = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double p_value = 1.0;
  double standardized = 0.0;
};

struct ContrastRecord {
  ContrastCase which = ContrastCase::I;
  Vector estimate;
  Vector truth;
  Matrix covariance;
  Vector standardized;
  double chi2 = 0.0;
  double p_value = 1.0;
  bool covered = false;
};

struct RepRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  double lambda_e = 0.0;
  double lambda_g = 0.0;
  int fit_iterations = 0;
  bool fit_converged = false;
  std::vector<std::pair<int, double>> sigma_hat;  // (node, sigma_jj_hat)
  std::vector<TrackedRecord> tracked;
  std::vector<OracleRecord> oracle;
  std::vector<ContrastRecord> contrasts;
};

struct TrackedSummary {
  Index index = 0;
  double truth = 0.0;
  double pre_bias_mean = 0.0, pre_bias_sd = 0.0;
  double post_bias_mean = 0.0, post_bias_sd = 0.0;
  double emp_sd = 0.0;
  double coverage = 0.0;
  double reject_zero = 0.0;
};

struct OracleSummary {
  Index index = 0;
  double bias_mean = 0.0, bias_sd = 0.0;
  double emp_sd = 0.0;
  double coverage = 0.0;
  double reject_zero = 0.0;
};

struct ContrastSummary {
  ContrastCase which = ContrastCase::I;
  std::vector<double> emp_ave;
  std::vector<double> emp_sd;
  double coverage = 0.0;
  std::optional<double> correlation;  // two-row contrasts only
};

struct RepFailure {
  int rep = 0;
  std::string message;
};

struct StudySummary {
  int reps = 0;
  int completed = 0;
  std::vector<RepFailure> failures;
  double mean_lambda_e = 0.0;
  std::vector<TrackedSummary> tracked;
  std::vector<OracleSummary> oracle;
  std::vector<ContrastSummary> contrasts;
};

struct OracleResult {
  NoiseEstimate noise;
  std::vector<CoordinateInference> coords;  // one per support position, in support order
};

/// Least squares on the known support of node j with normal-theory intervals.
OracleResult run_oracle(const Dataset& data, int j, std::span<const Index> support, double level);

/// One replication: simulate, fit, debias the tracked coordinates, infer.
RepRecord run_replication(const StudyConfig& config, int rep);

/// Aggregates replication records with the simulation-table column definitions.
StudySummary summarize(const std::vector<RepRecord>& records, const StudyConfig& config,
                       std::vector<RepFailure> failures = {});

struct StudyRun {
  StudySummary summary;
  std::vector<RepRecord> records;
};

/// Runs config.reps replications (in parallel when config.threads > 1). Fails only when more
/// than 5% of the replications throw.
StudyRun run_study(const StudyConfig& config);

/// (Phi^{-1}((i - 0.5)/R), sorted value i) pairs.
std::vector<std::pair<double, double>> export_qq(std::vector<double> values);

struct BenchConfig {
  std::vector<int> n_list{50, 100};
  std::vector<int> p_list{20, 50};
  int q = 20;
  Index l = 0;
  int runs = 3;
  std::uint64_t seed = 7;
  DebiasConfig debias{0.0, 0.0};  // alpha/gamma <= 0 select 1/sqrt(n), 3/sqrt(n) per n
};

struct BenchRow {
  int n = 0, p = 0, q = 0;
  Index length = 0;
  double direct_seconds = 0.0;     // Gram + full-space solve, median
  double projected_seconds = 0.0;  // eigen factor + projected solve, median
  double direct_solve_seconds = 0.0;
  double projected_solve_seconds = 0.0;
  double direct_objective = 0.0;
  double projected_objective = 0.0;
  int direct_iterations = 0;
  int projected_iterations = 0;
  double speedup() const { return direct_seconds / projected_seconds; }
};

std::vector<BenchRow> timing_bench(const BenchConfig& config);

}  // namespace sage
