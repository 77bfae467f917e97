#include "sage/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>

#include "sage/design.hpp"
#include "sage/error.hpp"
#include "sage/parallel.hpp"
#include "sage/rng.hpp"
#include "sage/serialize.hpp"
#include "sage/stats.hpp"

namespace sage {
namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double fraction(const std::vector<bool>& v) {
  if (v.empty()) return 0.0;
  return static_cast<double>(std::count(v.begin(), v.end(), true)) / static_cast<double>(v.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

constexpr double kRejectLevel = 0.05;

}  // namespace

void StudyConfig::validate() const {
  CoefLayout layout(p, q);
  if (p < 3 || q < 2) throw InvalidArgument("StudyConfig: the default model needs p >= 3 and q >= 2");
  if (n < 2) throw InvalidArgument("StudyConfig: need n >= 2");
  if (reps < 1) throw InvalidArgument("StudyConfig: need reps >= 1");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("StudyConfig: level must lie in (0,1)");
  for (Index t : tracked)
    if (t < 0 || t >= layout.total_length()) throw InvalidArgument("StudyConfig: tracked coordinate out of range");
  if (lambda.cross_validated && lambda.grid.empty()) throw InvalidArgument("StudyConfig: empty CV grid");
  fit.validate();
}

DebiasConfig StudyConfig::debias_config() const {
  DebiasConfig d = debias;
  const double rn = std::sqrt(static_cast<double>(n));
  d.alpha = alpha > 0.0 ? alpha : 1.0 / rn;
  d.gamma = gamma > 0.0 ? gamma : 2.0 / rn;
  d.threads = 1;
  return d;
}

std::vector<Index> StudyConfig::tracked_or_default() const {
  return tracked.empty() ? default_tracked(p, q) : tracked;
}

std::vector<Index> default_tracked(int p, int q) {
  const Index L = CoefLayout(p, q).node_length();
  return {p - 1, 2 * p - 2, L + p - 1, L + 2 * p - 2};
}

std::pair<Matrix, Vector> contrast_case(ContrastCase c, int p, int q) {
  const Index L = CoefLayout(p, q).node_length();
  // 1-based positions 1, 2, p, 2p-1 inside beta_1; beta_1 is zero at 1, 2 and -0.3 at p, 2p-1.
  const Index e1 = 0, e2 = 1, ep = p - 1, e2p = 2 * p - 2;
  Matrix A;
  Vector truth;
  switch (c) {
    case ContrastCase::I:
      A = Matrix::Zero(1, L);
      A(0, ep) = 1.0;
      A(0, e2p) = -1.0;
      truth = Vector::Constant(1, 0.0);
      break;
    case ContrastCase::II:
      A = Matrix::Zero(1, L);
      A(0, e1) = 1.0;
      A(0, e2p) = -1.0;
      truth = Vector::Constant(1, 0.3);
      break;
    case ContrastCase::III:
      A = Matrix::Zero(1, L);
      A(0, e1) = 1.0;
      A(0, e2) = 2.0;
      truth = Vector::Constant(1, 0.0);
      break;
    case ContrastCase::IV:
      A = Matrix::Zero(2, L);
      A(0, e1) = 2.0;
      A(0, ep) = -1.0;
      A(1, e2) = 1.0;
      A(1, ep) = 1.0;
      truth = Vector(2);
      truth << 0.3, -0.3;
      break;
  }
  return {A, truth};
}

const char* contrast_name(ContrastCase c) {
  switch (c) {
    case ContrastCase::I: return "I";
    case ContrastCase::II: return "II";
    case ContrastCase::III: return "III";
    case ContrastCase::IV: return "IV";
  }
  return "?";
}

OracleResult run_oracle(const Dataset& data, int j, std::span<const Index> support, double level) {
  const NodeDesign design = build_node_design(data, j);
  OracleResult out{estimate_noise(design, support), {}};
  const Index s = static_cast<Index>(support.size());
  if (s == 0) return out;
  Matrix ws(design.n(), s);
  for (Index c = 0; c < s; ++c) ws.col(c) = design.W.col(support[c]);
  const Matrix inv = (ws.transpose() * ws).ldlt().solve(Matrix::Identity(s, s));
  const double zq = stats::normal_quantile(1.0 - (1.0 - level) / 2.0);
  for (Index c = 0; c < s; ++c) {
    CoordinateInference ci;
    ci.l = support[c];
    ci.estimate = out.noise.beta_ols[support[c]];
    ci.se = std::sqrt(inv(c, c) / out.noise.sigma_jj_hat);
    ci.lo = ci.estimate - zq * ci.se;
    ci.hi = ci.estimate + zq * ci.se;
    ci.level = level;
    ci.z = ci.estimate / ci.se;
    ci.p = std::clamp(2.0 * stats::normal_sf(std::fabs(ci.z)), 1e-300, 1.0);
    out.coords.push_back(ci);
  }
  return out;
}

RepRecord run_replication(const StudyConfig& config, int rep) {
  const PrecisionModel model = paper_default_model(config.p, config.q);
  const MultiTaskCoef truth = true_beta(model);
  const CoefLayout layout = model.layout();
  const Index L = layout.node_length();

  RepRecord rec;
  rec.rep = rep;
  rec.seed = substream_seed(config.seed, {static_cast<std::uint64_t>(rep)});
  const Dataset data = sample(model, config.n, rec.seed);

  FitConfig fc = config.fit;
  fc.threads = 1;
  if (config.lambda.cross_validated) {
    CVConfig cv;
    cv.grid = config.lambda.grid;
    cv.ratio = config.lambda.ratio;
    cv.folds = config.lambda.folds;
    cv.seed = substream_seed(config.seed, {static_cast<std::uint64_t>(rep), 1u});
    cv.fit = fc;
    const CVResult chosen = cross_validate(data, cv);
    fc.lambda_e = chosen.lambda_e;
    fc.lambda_g = chosen.lambda_g;
  } else {
    fc.lambda_e = config.lambda.lambda_e;
    fc.lambda_g = config.lambda.lambda_g;
  }
  rec.lambda_e = fc.lambda_e;
  rec.lambda_g = fc.lambda_g;

  const FitResult fitres = fit(FitProblem::build(data), fc);
  rec.fit_iterations = fitres.iterations;
  rec.fit_converged = fitres.converged;

  const std::vector<Index> tracked = config.tracked_or_default();
  const bool any_contrast = std::any_of(config.contrasts.begin(), config.contrasts.end(), [](bool b) { return b; });
  std::map<int, std::set<Index>> coords;
  for (Index t : tracked) coords[static_cast<int>(t / L)].insert(t % L);
  if (any_contrast) coords[0].insert({Index{0}, Index{1}, Index{config.p - 1}, Index{2 * config.p - 2}});

  const DebiasConfig dcfg = config.debias_config();
  std::map<Index, TrackedRecord> tracked_rows;
  std::map<Index, OracleRecord> oracle_rows;

  for (const auto& [j, locals] : coords) {
    const NodeDesign design = build_node_design(data, j);
    const EigenFactor eigen = eigen_factor(design);
    const std::vector<Index> wanted(locals.begin(), locals.end());
    std::vector<DebiasColumn> cols = solve_columns(eigen, layout, wanted, dcfg);
    const Vector beta_j = fitres.beta.node(j);
    const SageEstimate est = sage_update(beta_j, design, std::move(cols));
    const NoiseEstimate noise = estimate_noise(design, fitres.support[j]);
    rec.sigma_hat.emplace_back(j, noise.sigma_jj_hat);
    const Vector truth_j = truth.node(j);

    for (const auto& ci : infer_coordinates(est, noise, config.level)) {
      const Index global = j * L + ci.l;
      if (std::find(tracked.begin(), tracked.end(), global) == tracked.end()) continue;
      TrackedRecord tr;
      tr.index = global;
      tr.truth = truth_j[ci.l];
      tr.pre = beta_j[ci.l];
      tr.post = ci.estimate;
      tr.se = ci.se;
      tr.lo = ci.lo;
      tr.hi = ci.hi;
      tr.z = ci.z;
      tr.p_value = ci.p;
      tr.standardized = (ci.estimate - tr.truth) / ci.se;
      tr.variance_factor = est.column(ci.l)->variance_factor;
      tracked_rows[global] = tr;
    }

    if (config.oracle) {
      std::vector<Index> support;
      for (Index l = 0; l < L; ++l)
        if (truth_j[l] != 0.0) support.push_back(l);
      if (!support.empty()) {
        const OracleResult orc = run_oracle(data, j, support, config.level);
        for (const auto& ci : orc.coords) {
          const Index global = j * L + ci.l;
          if (std::find(tracked.begin(), tracked.end(), global) == tracked.end()) continue;
          OracleRecord o;
          o.index = global;
          o.truth = truth_j[ci.l];
          o.estimate = ci.estimate;
          o.se = ci.se;
          o.lo = ci.lo;
          o.hi = ci.hi;
          o.p_value = ci.p;
          o.standardized = (ci.estimate - o.truth) / ci.se;
          oracle_rows[global] = o;
        }
      }
    }

    if (j == 0 && any_contrast) {
      for (int c = 0; c < 4; ++c) {
        if (!config.contrasts[c]) continue;
        const auto which = static_cast<ContrastCase>(c);
        auto [A, a_true] = contrast_case(which, config.p, config.q);
        const ContrastReport rep_c = contrast_infer(A, a_true, est, design, noise);
        ContrastRecord cr;
        cr.which = which;
        cr.estimate = rep_c.estimate;
        cr.truth = a_true;
        cr.covariance = rep_c.covariance;
        cr.standardized = standardized_contrast(rep_c, a_true);
        cr.chi2 = rep_c.chi2;
        cr.p_value = rep_c.p;
        cr.covered = contrast_covers(rep_c, a_true, config.level);
        rec.contrasts.push_back(std::move(cr));
      }
    }
  }

  for (Index t : tracked) {
    rec.tracked.push_back(tracked_rows.at(t));
    if (auto it = oracle_rows.find(t); it != oracle_rows.end()) rec.oracle.push_back(it->second);
  }
  return rec;
}

StudySummary summarize(const std::vector<RepRecord>& records, const StudyConfig& config,
                       std::vector<RepFailure> failures) {
  StudySummary s;
  s.reps = config.reps;
  s.completed = static_cast<int>(records.size());
  s.failures = std::move(failures);
  if (records.empty()) return s;

  std::vector<double> lams;
  for (const auto& r : records) lams.push_back(r.lambda_e);
  s.mean_lambda_e = mean(lams);

  const std::size_t nt = records.front().tracked.size();
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<double> pre, post, stdz;
    std::vector<bool> cover, reject;
    for (const auto& r : records) {
      const TrackedRecord& tr = r.tracked.at(t);
      pre.push_back(tr.pre - tr.truth);
      post.push_back(tr.post - tr.truth);
      stdz.push_back(tr.standardized);
      cover.push_back(tr.lo <= tr.truth && tr.truth <= tr.hi);
      reject.push_back(tr.p_value < kRejectLevel);
    }
    TrackedSummary ts;
    ts.index = records.front().tracked[t].index;
    ts.truth = records.front().tracked[t].truth;
    ts.pre_bias_mean = mean(pre);
    ts.pre_bias_sd = sample_sd(pre);
    ts.post_bias_mean = mean(post);
    ts.post_bias_sd = sample_sd(post);
    ts.emp_sd = sample_sd(stdz);
    ts.coverage = fraction(cover);
    ts.reject_zero = fraction(reject);
    s.tracked.push_back(ts);
  }

  const std::size_t no = records.front().oracle.size();
  for (std::size_t t = 0; t < no; ++t) {
    std::vector<double> bias, stdz;
    std::vector<bool> cover, reject;
    for (const auto& r : records) {
      const OracleRecord& o = r.oracle.at(t);
      bias.push_back(o.estimate - o.truth);
      stdz.push_back(o.standardized);
      cover.push_back(o.lo <= o.truth && o.truth <= o.hi);
      reject.push_back(o.p_value < kRejectLevel);
    }
    OracleSummary os;
    os.index = records.front().oracle[t].index;
    os.bias_mean = mean(bias);
    os.bias_sd = sample_sd(bias);
    os.emp_sd = sample_sd(stdz);
    os.coverage = fraction(cover);
    os.reject_zero = fraction(reject);
    s.oracle.push_back(os);
  }

  const std::size_t nc = records.front().contrasts.size();
  for (std::size_t c = 0; c < nc; ++c) {
    ContrastSummary cs;
    cs.which = records.front().contrasts[c].which;
    const Index dims = records.front().contrasts[c].standardized.size();
    std::vector<std::vector<double>> comp(static_cast<std::size_t>(dims));
    std::vector<bool> cover;
    for (const auto& r : records) {
      const ContrastRecord& cr = r.contrasts.at(c);
      for (Index d = 0; d < dims; ++d) comp[static_cast<std::size_t>(d)].push_back(cr.standardized[d]);
      cover.push_back(cr.covered);
    }
    for (const auto& v : comp) {
      cs.emp_ave.push_back(mean(v));
      cs.emp_sd.push_back(sample_sd(v));
    }
    cs.coverage = fraction(cover);
    if (dims == 2) cs.correlation = pearson(comp[0], comp[1]);
    s.contrasts.push_back(std::move(cs));
  }
  return s;
}

StudyRun run_study(const StudyConfig& config) {
  config.validate();
  std::vector<std::optional<RepRecord>> slots(static_cast<std::size_t>(config.reps));
  std::vector<std::string> errors(static_cast<std::size_t>(config.reps));
  parallel_for(config.reps, config.threads, [&](std::ptrdiff_t r) {
    try {
      slots[r] = run_replication(config, static_cast<int>(r));
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });

  StudyRun run;
  std::vector<RepFailure> failures;
  for (int r = 0; r < config.reps; ++r) {
    if (slots[r]) {
      run.records.push_back(std::move(*slots[r]));
    } else {
      failures.push_back({r, errors[r]});
    }
  }

  if (!config.run_dir.empty()) {
    const std::filesystem::path dir = std::filesystem::path(config.run_dir) / "reps";
    std::filesystem::create_directories(dir);
    for (const auto& rec : run.records) {
      char name[32];
      std::snprintf(name, sizeof name, "rep_%04d.json", rec.rep);
      write_json_file(dir / name, rep_record_to_json(rec));
    }
  }

  if (failures.size() * 20 > static_cast<std::size_t>(config.reps)) {
    std::string msg = "run_study: " + std::to_string(failures.size()) + " of " + std::to_string(config.reps) +
                      " replications failed";
    for (const auto& f : failures) msg += "\n  replication " + std::to_string(f.rep) + ": " + f.message;
    throw NumericalError(msg);
  }
  run.summary = summarize(run.records, config, std::move(failures));
  return run;
}

std::vector<std::pair<double, double>> export_qq(std::vector<double> values) {
  if (values.size() < 10) throw InvalidArgument("export_qq: need at least 10 values");
  std::sort(values.begin(), values.end());
  const double R = static_cast<double>(values.size());
  std::vector<std::pair<double, double>> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.emplace_back(stats::normal_quantile((static_cast<double>(i) + 0.5) / R), values[i]);
  return out;
}

std::vector<BenchRow> timing_bench(const BenchConfig& config) {
  using Clock = std::chrono::steady_clock;
  if (config.runs < 1) throw InvalidArgument("timing_bench: need runs >= 1");
  std::vector<BenchRow> rows;
  for (int n : config.n_list) {
    for (int p : config.p_list) {
      const PrecisionModel model = paper_default_model(p, config.q);
      const CoefLayout layout = model.layout();
      const Dataset data = sample(model, n, substream_seed(config.seed, {static_cast<std::uint64_t>(n),
                                                                         static_cast<std::uint64_t>(p)}));
      const NodeDesign design = build_node_design(data, 0);
      DebiasConfig cfg = config.debias;
      if (!(config.debias.alpha > 0.0) || !(config.debias.gamma > 0.0)) {
        cfg.alpha = 1.0 / std::sqrt(static_cast<double>(n));
        cfg.gamma = 3.0 / std::sqrt(static_cast<double>(n));
      }
      cfg.threads = 1;

      std::vector<double> dt, pt, ds, ps;
      BenchRow row;
      row.n = n;
      row.p = p;
      row.q = config.q;
      row.length = layout.node_length();
      for (int run = 0; run < config.runs; ++run) {
        const auto t0 = Clock::now();
        const Matrix g = gram(design);
        const DebiasColumn cd = solve_direct(g, layout, config.l, cfg);
        const auto t1 = Clock::now();
        const EigenFactor ef = eigen_factor(design);
        const DebiasColumn cp = solve_projected(ef, layout, config.l, cfg);
        const auto t2 = Clock::now();
        dt.push_back(std::chrono::duration<double>(t1 - t0).count());
        pt.push_back(std::chrono::duration<double>(t2 - t1).count());
        ds.push_back(cd.seconds);
        ps.push_back(cp.seconds);
        row.direct_objective = cd.variance_factor;
        row.projected_objective = cp.variance_factor;
        row.direct_iterations = cd.iterations;
        row.projected_iterations = cp.iterations;
      }
      auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
      };
      row.direct_seconds = median(dt);
      row.projected_seconds = median(pt);
      row.direct_solve_seconds = median(ds);
      row.projected_solve_seconds = median(ps);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sage
