#include "sage/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sage/error.hpp"

namespace sage {
namespace {

struct Coord {
  int j, k, h;
};

Coord coord_of(const CoefLayout& layout, Index stacked) {
  const int j = static_cast<int>(stacked / layout.node_length());
  auto [k, h] = layout.partner_of(j, stacked % layout.node_length());
  return {j, k, h};
}

Json coord_json(const CoefLayout& layout, Index stacked) {
  const Coord c = coord_of(layout, stacked);
  return Json::array({c.j + 1, c.k + 1, c.h});
}

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from(const Json& a) {
  Vector v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Index>(i)] = a[i].get<double>();
  return v;
}

Json mat_json(const Matrix& m) {
  Json a = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

Matrix mat_from(const Json& a) {
  const Index rows = static_cast<Index>(a.size());
  const Index cols = rows ? static_cast<Index>(a[0].size()) : 0;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(a[r].size()) != cols) throw InvalidArgument("ragged matrix in JSON");
    for (Index c = 0; c < cols; ++c) m(r, c) = a[r][c].get<double>();
  }
  return m;
}

// Wraps nlohmann type/key errors as input errors.
template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string(what) + ": " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw InvalidArgument(std::string(what) + ": unknown key '" + it.key() + "'");
  }
}

int node_label(const Json& v, int p, const char* what) {
  const int x = v.get<int>();
  if (x < 1 || x > p) throw InvalidArgument(std::string(what) + ": node label " + std::to_string(x) + " outside 1.." + std::to_string(p));
  return x - 1;
}

const char* status_name(SolveStatus s) { return s == SolveStatus::converged ? "converged" : "max_iter"; }

ContrastCase case_from(const std::string& s) {
  if (s == "I") return ContrastCase::I;
  if (s == "II") return ContrastCase::II;
  if (s == "III") return ContrastCase::III;
  if (s == "IV") return ContrastCase::IV;
  throw InvalidArgument("unknown contrast case '" + s + "'");
}

std::string join_row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  return out + '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json model_to_json(const PrecisionModel& model) {
  Json out;
  out["p"] = model.p;
  out["q"] = model.q;
  Json blocks = Json::array();
  for (int h = 0; h <= model.q; ++h) {
    Json entries = Json::array();
    for (int j = 0; j < model.p; ++j)
      for (int k = j + 1; k < model.p; ++k)
        if (model.B[h](j, k) != 0.0) entries.push_back(Json::array({j + 1, k + 1, model.B[h](j, k)}));
    blocks.push_back({{"h", h}, {"entries", entries}});
  }
  out["B"] = blocks;
  out["sigma_diag"] = vec_json(model.sigma_diag);
  return out;
}

PrecisionModel model_from_json(const Json& doc) {
  return guarded("model", [&] {
    reject_unknown(doc, {"p", "q", "B", "sigma_diag"}, "model");
    PrecisionModel m;
    m.p = doc.at("p").get<int>();
    m.q = doc.at("q").get<int>();
    CoefLayout check(m.p, m.q);
    m.sigma_diag = doc.contains("sigma_diag") ? vec_from(doc.at("sigma_diag")) : Vector::Ones(m.p);
    if (m.sigma_diag.size() != m.p) throw InvalidArgument("model: sigma_diag must have p entries");
    m.B.assign(static_cast<std::size_t>(m.q + 1), Matrix::Zero(m.p, m.p));
    m.B[0].diagonal() = m.sigma_diag;
    for (const auto& block : doc.value("B", Json::array())) {
      const int h = block.at("h").get<int>();
      if (h < 0 || h > m.q) throw InvalidArgument("model: block h out of range");
      for (const auto& e : block.at("entries")) {
        if (e.size() != 3) throw InvalidArgument("model: entries are [j,k,value]");
        const int j = node_label(e[0], m.p, "model");
        const int k = node_label(e[1], m.p, "model");
        if (j == k) throw InvalidArgument("model: diagonal entries come from sigma_diag");
        m.B[h](j, k) = m.B[h](k, j) = e[2].get<double>();
      }
    }
    m.validate();
    return m;
  });
}

Json coef_to_json(const MultiTaskCoef& beta) {
  const CoefLayout& layout = beta.layout();
  Json out = Json::array();
  for (Index s = 0; s < layout.total_length(); ++s) {
    const double v = beta.values()[s];
    if (v == 0.0) continue;
    const Coord c = coord_of(layout, s);
    out.push_back(Json::array({c.j + 1, c.k + 1, c.h, v}));
  }
  return out;
}

MultiTaskCoef coef_from_json(const Json& doc, const CoefLayout& layout) {
  return guarded("coefficients", [&] {
    MultiTaskCoef beta(layout);
    for (const auto& e : doc) {
      if (e.size() != 4) throw InvalidArgument("coefficients: entries are [j,k,h,value]");
      const int j = node_label(e[0], layout.p(), "coefficients");
      const int k = node_label(e[1], layout.p(), "coefficients");
      beta.at(j, k, e[2].get<int>()) = e[3].get<double>();
    }
    return beta;
  });
}

Json fit_config_to_json(const FitConfig& c) {
  return {{"lambda_e", c.lambda_e}, {"lambda_g", c.lambda_g}, {"max_iter", c.max_iter},
          {"tol", c.tol},           {"kkt_tol", c.kkt_tol},   {"backtrack", c.backtrack}};
}

FitConfig fit_config_from_json(const Json& j, FitConfig base) {
  return guarded("fit config", [&] {
    reject_unknown(j, {"lambda_e", "lambda_g", "max_iter", "tol", "kkt_tol", "backtrack"}, "fit config");
    base.lambda_e = j.value("lambda_e", base.lambda_e);
    base.lambda_g = j.value("lambda_g", base.lambda_g);
    base.max_iter = j.value("max_iter", base.max_iter);
    base.tol = j.value("tol", base.tol);
    base.kkt_tol = j.value("kkt_tol", base.kkt_tol);
    base.backtrack = j.value("backtrack", base.backtrack);
    return base;
  });
}

Json fit_result_to_json(const FitResult& r, const FitConfig& config) {
  const CoefLayout& layout = r.beta.layout();
  Json sizes = Json::array();
  for (const auto& s : r.support) sizes.push_back(s.size());
  return {{"p", layout.p()},
          {"q", layout.q()},
          {"config", fit_config_to_json(config)},
          {"objective", r.objective.empty() ? 0.0 : r.objective.back()},
          {"objective_trace", r.objective},
          {"kkt_residual", r.kkt_residual},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"step", r.step},
          {"support_sizes", sizes},
          {"coefficients", coef_to_json(r.beta)}};
}

FitResult fit_result_from_json(const Json& doc, const CoefLayout& layout) {
  return guarded("fit", [&] {
    if (doc.at("p").get<int>() != layout.p() || doc.at("q").get<int>() != layout.q())
      throw InvalidArgument("fit: dimensions do not match the data");
    FitResult r{coef_from_json(doc.at("coefficients"), layout), {}, 0.0, {}, 0, false, 0.0};
    r.objective = doc.value("objective_trace", std::vector<double>{});
    r.kkt_residual = doc.value("kkt_residual", 0.0);
    r.iterations = doc.value("iterations", 0);
    r.converged = doc.value("converged", false);
    r.step = doc.value("step", 0.0);
    r.support.resize(static_cast<std::size_t>(layout.p()));
    for (int j = 0; j < layout.p(); ++j) {
      const auto node = r.beta.node(j);
      for (Index l = 0; l < node.size(); ++l)
        if (node[l] != 0.0) r.support[j].push_back(l);
    }
    return r;
  });
}

Json debias_column_to_json(const DebiasColumn& c, const CoefLayout& layout, int node) {
  auto [k, h] = layout.partner_of(node, c.l);
  return {{"j", node + 1},
          {"k", k + 1},
          {"h", h},
          {"variance_factor", c.variance_factor},
          {"feasibility_slack", c.feasibility_slack},
          {"duality_gap", c.duality_gap},
          {"iterations", c.iterations},
          {"status", status_name(c.status)}};
}

Json sage_to_json(const SageEstimate& s, const CoefLayout& layout) {
  Json cols = Json::array();
  for (const auto& c : s.columns) cols.push_back(debias_column_to_json(c, layout, s.j));
  return {{"j", s.j + 1}, {"columns", cols}};
}

Json noise_to_json(const NoiseEstimate& n) {
  return {{"j", n.j + 1}, {"sigma_jj_hat", n.sigma_jj_hat}, {"support_size", n.support.size()},
          {"df", n.df},   {"n", n.n}};
}

Json inference_report_to_json(const InferenceReport& r, const CoefLayout& layout) {
  Json coords = Json::array();
  for (const auto& c : r.coords) {
    auto [k, h] = layout.partner_of(r.j, c.l);
    coords.push_back({{"j", r.j + 1}, {"k", k + 1}, {"h", h}, {"estimate", c.estimate}, {"se", c.se},
                      {"lo", c.lo}, {"hi", c.hi}, {"z", c.z}, {"p", c.p}});
  }
  Json contrasts = Json::array();
  for (const auto& c : r.contrasts)
    contrasts.push_back({{"estimate", vec_json(c.estimate)}, {"null", vec_json(c.null_value)},
                         {"covariance", mat_json(c.covariance)}, {"chi2", c.chi2}, {"df", c.df}, {"p", c.p}});
  return {{"j", r.j + 1},
          {"level", r.level},
          {"alpha", r.alpha},
          {"gamma", r.gamma},
          {"noise", noise_to_json(r.noise)},
          {"coordinates", coords},
          {"contrasts", contrasts}};
}

std::string inference_report_csv(const InferenceReport& r, const CoefLayout& layout) {
  std::string out = "j,k,h,estimate,se,lo,hi,z,p\n";
  for (const auto& c : r.coords) {
    auto [k, h] = layout.partner_of(r.j, c.l);
    out += join_row({std::to_string(r.j + 1), std::to_string(k + 1), std::to_string(h), format_double(c.estimate),
                     format_double(c.se), format_double(c.lo), format_double(c.hi), format_double(c.z),
                     format_double(c.p)});
  }
  return out;
}

ContrastSpec contrast_from_json(const Json& doc, const CoefLayout& layout, int j) {
  return guarded("contrast", [&] {
    reject_unknown(doc, {"rows", "null"}, "contrast");
    const Json& rows = doc.at("rows");
    if (!rows.is_array() || rows.empty()) throw InvalidArgument("contrast: need at least one row");
    ContrastSpec spec{Matrix::Zero(static_cast<Index>(rows.size()), layout.node_length()),
                      Vector::Zero(static_cast<Index>(rows.size()))};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (const auto& e : rows[r].at("entries")) {
        if (e.size() != 4) throw InvalidArgument("contrast: entries are [j,k,h,weight]");
        if (node_label(e[0], layout.p(), "contrast") != j)
          throw InvalidArgument("contrast: entry names a node other than --node");
        const int k = node_label(e[1], layout.p(), "contrast");
        spec.A(static_cast<Index>(r), layout.index_of(j, k, e[2].get<int>())) += e[3].get<double>();
      }
    }
    if (doc.contains("null")) {
      spec.null_value = vec_from(doc.at("null"));
      if (spec.null_value.size() != spec.A.rows()) throw InvalidArgument("contrast: null has the wrong length");
    }
    return spec;
  });
}

Json study_config_to_json(const StudyConfig& c) {
  const CoefLayout layout(c.p, c.q);
  Json tracked = Json::array();
  for (Index t : c.tracked) tracked.push_back(coord_json(layout, t));
  Json cases = Json::array();
  for (int i = 0; i < 4; ++i)
    if (c.contrasts[i]) cases.push_back(contrast_name(static_cast<ContrastCase>(i)));
  return {{"p", c.p},
          {"q", c.q},
          {"n", c.n},
          {"lambda",
           {{"cv", c.lambda.cross_validated},
            {"lambda_e", c.lambda.lambda_e},
            {"lambda_g", c.lambda.lambda_g},
            {"grid", c.lambda.grid},
            {"ratio", c.lambda.ratio},
            {"folds", c.lambda.folds}}},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"reps", c.reps},
          {"seed", c.seed},
          {"tracked", tracked},
          {"contrasts", cases},
          {"oracle", c.oracle},
          {"level", c.level},
          {"fit", {{"max_iter", c.fit.max_iter}, {"tol", c.fit.tol}, {"kkt_tol", c.fit.kkt_tol}}},
          {"debias",
           {{"tol", c.debias.tol},
            {"feas_tol", c.debias.feas_tol},
            {"max_iter", c.debias.max_iter},
            {"rho", c.debias.rho}}}};
}

StudyConfig study_config_from_json(const Json& doc) {
  return guarded("study config", [&] {
    reject_unknown(doc,
                   {"p", "q", "n", "lambda", "alpha", "gamma", "reps", "seed", "tracked", "contrasts", "oracle",
                    "level", "threads", "run_dir", "fit", "debias"},
                   "study config");
    StudyConfig c;
    c.p = doc.value("p", c.p);
    c.q = doc.value("q", c.q);
    c.n = doc.value("n", c.n);
    if (doc.contains("lambda")) {
      const Json& l = doc.at("lambda");
      reject_unknown(l, {"cv", "lambda_e", "lambda_g", "grid", "ratio", "folds"}, "study config lambda");
      c.lambda.cross_validated = l.value("cv", false);
      c.lambda.lambda_e = l.value("lambda_e", c.lambda.lambda_e);
      c.lambda.ratio = l.value("ratio", c.lambda.ratio);
      c.lambda.lambda_g = l.value("lambda_g", c.lambda.lambda_e * c.lambda.ratio);
      c.lambda.grid = l.value("grid", c.lambda.grid);
      c.lambda.folds = l.value("folds", c.lambda.folds);
    }
    c.alpha = doc.value("alpha", c.alpha);
    c.gamma = doc.value("gamma", c.gamma);
    c.reps = doc.value("reps", c.reps);
    c.seed = doc.value("seed", c.seed);
    c.oracle = doc.value("oracle", c.oracle);
    c.level = doc.value("level", c.level);
    c.threads = doc.value("threads", c.threads);
    c.run_dir = doc.value("run_dir", c.run_dir);
    const CoefLayout layout(c.p, c.q);
    for (const auto& t : doc.value("tracked", Json::array())) {
      if (t.size() != 3) throw InvalidArgument("study config: tracked entries are [j,k,h]");
      const int j = node_label(t[0], c.p, "study config");
      const int k = node_label(t[1], c.p, "study config");
      c.tracked.push_back(layout.node_offset(j) + layout.index_of(j, k, t[2].get<int>()));
    }
    for (const auto& name : doc.value("contrasts", Json::array()))
      c.contrasts[static_cast<int>(case_from(name.get<std::string>()))] = true;
    if (doc.contains("fit")) {
      const Json& f = doc.at("fit");
      reject_unknown(f, {"max_iter", "tol", "kkt_tol"}, "study config fit");
      c.fit.max_iter = f.value("max_iter", c.fit.max_iter);
      c.fit.tol = f.value("tol", c.fit.tol);
      c.fit.kkt_tol = f.value("kkt_tol", c.fit.kkt_tol);
    }
    if (doc.contains("debias")) {
      const Json& d = doc.at("debias");
      reject_unknown(d, {"tol", "feas_tol", "max_iter", "rho"}, "study config debias");
      c.debias.tol = d.value("tol", c.debias.tol);
      c.debias.feas_tol = d.value("feas_tol", c.debias.feas_tol);
      c.debias.max_iter = d.value("max_iter", c.debias.max_iter);
      c.debias.rho = d.value("rho", c.debias.rho);
    }
    c.validate();
    return c;
  });
}

Json rep_record_to_json(const RepRecord& r) {
  Json sig = Json::array();
  for (const auto& [j, s] : r.sigma_hat) sig.push_back(Json::array({j + 1, s}));
  Json tracked = Json::array();
  for (const auto& t : r.tracked)
    tracked.push_back({{"index", t.index}, {"truth", t.truth}, {"pre", t.pre}, {"post", t.post}, {"se", t.se},
                       {"lo", t.lo}, {"hi", t.hi}, {"z", t.z}, {"p", t.p_value}, {"standardized", t.standardized},
                       {"variance_factor", t.variance_factor}});
  Json oracle = Json::array();
  for (const auto& o : r.oracle)
    oracle.push_back({{"index", o.index}, {"truth", o.truth}, {"estimate", o.estimate}, {"se", o.se}, {"lo", o.lo},
                      {"hi", o.hi}, {"p", o.p_value}, {"standardized", o.standardized}});
  Json contrasts = Json::array();
  for (const auto& c : r.contrasts)
    contrasts.push_back({{"case", contrast_name(c.which)},
                         {"estimate", vec_json(c.estimate)},
                         {"truth", vec_json(c.truth)},
                         {"covariance", mat_json(c.covariance)},
                         {"standardized", vec_json(c.standardized)},
                         {"chi2", c.chi2},
                         {"p", c.p_value},
                         {"covered", c.covered}});
  return {{"rep", r.rep},
          {"seed", r.seed},
          {"lambda_e", r.lambda_e},
          {"lambda_g", r.lambda_g},
          {"fit_iterations", r.fit_iterations},
          {"fit_converged", r.fit_converged},
          {"sigma_hat", sig},
          {"tracked", tracked},
          {"oracle", oracle},
          {"contrasts", contrasts}};
}

RepRecord rep_record_from_json(const Json& doc) {
  return guarded("replication record", [&] {
    RepRecord r;
    r.rep = doc.at("rep").get<int>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.lambda_e = doc.at("lambda_e").get<double>();
    r.lambda_g = doc.at("lambda_g").get<double>();
    r.fit_iterations = doc.at("fit_iterations").get<int>();
    r.fit_converged = doc.at("fit_converged").get<bool>();
    for (const auto& s : doc.at("sigma_hat")) r.sigma_hat.emplace_back(s[0].get<int>() - 1, s[1].get<double>());
    for (const auto& t : doc.at("tracked")) {
      TrackedRecord x;
      x.index = t.at("index").get<Index>();
      x.truth = t.at("truth").get<double>();
      x.pre = t.at("pre").get<double>();
      x.post = t.at("post").get<double>();
      x.se = t.at("se").get<double>();
      x.lo = t.at("lo").get<double>();
      x.hi = t.at("hi").get<double>();
      x.z = t.at("z").get<double>();
      x.p_value = t.at("p").get<double>();
      x.standardized = t.at("standardized").get<double>();
      x.variance_factor = t.at("variance_factor").get<double>();
      r.tracked.push_back(x);
    }
    for (const auto& t : doc.at("oracle")) {
      OracleRecord x;
      x.index = t.at("index").get<Index>();
      x.truth = t.at("truth").get<double>();
      x.estimate = t.at("estimate").get<double>();
      x.se = t.at("se").get<double>();
      x.lo = t.at("lo").get<double>();
      x.hi = t.at("hi").get<double>();
      x.p_value = t.at("p").get<double>();
      x.standardized = t.at("standardized").get<double>();
      r.oracle.push_back(x);
    }
    for (const auto& t : doc.at("contrasts")) {
      ContrastRecord x;
      x.which = case_from(t.at("case").get<std::string>());
      x.estimate = vec_from(t.at("estimate"));
      x.truth = vec_from(t.at("truth"));
      x.covariance = mat_from(t.at("covariance"));
      x.standardized = vec_from(t.at("standardized"));
      x.chi2 = t.at("chi2").get<double>();
      x.p_value = t.at("p").get<double>();
      x.covered = t.at("covered").get<bool>();
      r.contrasts.push_back(std::move(x));
    }
    return r;
  });
}

Json study_summary_to_json(const StudySummary& s, const StudyConfig& c) {
  const CoefLayout layout(c.p, c.q);
  Json tracked = Json::array();
  for (const auto& t : s.tracked)
    tracked.push_back({{"index", t.index},
                       {"coord", coord_json(layout, t.index)},
                       {"truth", t.truth},
                       {"pre_bias", {{"mean", t.pre_bias_mean}, {"sd", t.pre_bias_sd}}},
                       {"post_bias", {{"mean", t.post_bias_mean}, {"sd", t.post_bias_sd}}},
                       {"emp_sd", t.emp_sd},
                       {"coverage", t.coverage},
                       {"reject_zero", t.reject_zero}});
  Json oracle = Json::array();
  for (const auto& o : s.oracle)
    oracle.push_back({{"index", o.index},
                      {"coord", coord_json(layout, o.index)},
                      {"bias", {{"mean", o.bias_mean}, {"sd", o.bias_sd}}},
                      {"emp_sd", o.emp_sd},
                      {"coverage", o.coverage},
                      {"reject_zero", o.reject_zero}});
  Json contrasts = Json::array();
  for (const auto& x : s.contrasts) {
    Json e = {{"case", contrast_name(x.which)}, {"emp_ave", x.emp_ave}, {"emp_sd", x.emp_sd}, {"coverage", x.coverage}};
    if (x.correlation) e["correlation"] = *x.correlation;
    contrasts.push_back(e);
  }
  Json failures = Json::array();
  for (const auto& f : s.failures) failures.push_back({{"rep", f.rep}, {"message", f.message}});
  return {{"config", study_config_to_json(c)},
          {"reps", s.reps},
          {"completed", s.completed},
          {"failures", failures},
          {"mean_lambda_e", s.mean_lambda_e},
          {"tracked", tracked},
          {"oracle", oracle},
          {"contrasts", contrasts}};
}

std::string format_summary_table(const StudySummary& s, const StudyConfig& c) {
  const CoefLayout layout(c.p, c.q);
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "(p,q)=(%d,%d) n=%lld reps=%d completed=%d mean lambda_e=%.3f\n", c.p, c.q,
                static_cast<long long>(c.n), s.reps, s.completed, s.mean_lambda_e);
  out << line;
  auto label = [&](Index idx) {
    const Coord k = coord_of(layout, idx);
    char b[48];
    std::snprintf(b, sizeof b, "(%d,%d,%d)", k.j + 1, k.k + 1, k.h);
    return std::string(b);
  };
  std::snprintf(line, sizeof line, "\nSAGE\n%-14s %7s %16s %16s %7s %9s %6s\n", "coord", "truth", "Pre-Bias",
                "Post-Bias", "Emp-SD", "Cov-Prob", "Rej-0");
  out << line;
  for (const auto& t : s.tracked) {
    char pre[32], post[32];
    std::snprintf(pre, sizeof pre, "%.3f(%.3f)", t.pre_bias_mean, t.pre_bias_sd);
    std::snprintf(post, sizeof post, "%.3f(%.3f)", t.post_bias_mean, t.post_bias_sd);
    std::snprintf(line, sizeof line, "%-14s %7.3f %16s %16s %7.3f %8.1f%% %5.1f%%\n", label(t.index).c_str(), t.truth,
                  pre, post, t.emp_sd, 100.0 * t.coverage, 100.0 * t.reject_zero);
    out << line;
  }
  if (!s.oracle.empty()) {
    std::snprintf(line, sizeof line, "\nOracle\n%-14s %16s %7s %9s %6s\n", "coord", "Bias", "Emp-SD", "Cov-Prob",
                  "Rej-0");
    out << line;
    for (const auto& o : s.oracle) {
      char bias[32];
      std::snprintf(bias, sizeof bias, "%.3f(%.3f)", o.bias_mean, o.bias_sd);
      std::snprintf(line, sizeof line, "%-14s %16s %7.3f %8.1f%% %5.1f%%\n", label(o.index).c_str(), bias, o.emp_sd,
                    100.0 * o.coverage, 100.0 * o.reject_zero);
      out << line;
    }
  }
  if (!s.contrasts.empty()) {
    std::snprintf(line, sizeof line, "\nContrasts\n%-6s %16s %16s %9s %7s\n", "case", "Emp-Ave", "Emp-SD", "Cov-Prob",
                  "Corr");
    out << line;
    for (const auto& x : s.contrasts) {
      std::string ave, sd;
      for (std::size_t i = 0; i < x.emp_ave.size(); ++i) {
        char b[24];
        std::snprintf(b, sizeof b, "%s%.3f", i ? "," : "", x.emp_ave[i]);
        ave += b;
        std::snprintf(b, sizeof b, "%s%.3f", i ? "," : "", x.emp_sd[i]);
        sd += b;
      }
      char corr[16] = "-";
      if (x.correlation) std::snprintf(corr, sizeof corr, "%.3f", *x.correlation);
      std::snprintf(line, sizeof line, "%-6s %16s %16s %8.1f%% %7s\n", contrast_name(x.which), ave.c_str(), sd.c_str(),
                    100.0 * x.coverage, corr);
      out << line;
    }
  }
  for (const auto& f : s.failures) out << "failed replication " << f.rep << ": " << f.message << '\n';
  return out.str();
}

Json bench_rows_to_json(const std::vector<BenchRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"n", r.n},
                   {"p", r.p},
                   {"q", r.q},
                   {"L", r.length},
                   {"direct_seconds", r.direct_seconds},
                   {"projected_seconds", r.projected_seconds},
                   {"direct_solve_seconds", r.direct_solve_seconds},
                   {"projected_solve_seconds", r.projected_solve_seconds},
                   {"speedup", r.speedup()},
                   {"direct_objective", r.direct_objective},
                   {"projected_objective", r.projected_objective},
                   {"direct_iterations", r.direct_iterations},
                   {"projected_iterations", r.projected_iterations}});
  return out;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof line, "%5s %5s %4s %6s %12s %12s %9s %12s %12s\n", "n", "p", "q", "L", "direct(s)",
                "projected(s)", "speedup", "obj direct", "obj proj");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%5d %5d %4d %6lld %12.4f %12.4f %9.1f %12.6g %12.6g\n", r.n, r.p, r.q,
                  static_cast<long long>(r.length), r.direct_seconds, r.projected_seconds, r.speedup(),
                  r.direct_objective, r.projected_objective);
    out << line;
  }
  return out.str();
}

std::string estimates_csv(const std::vector<RepRecord>& records, const CoefLayout& layout) {
  std::string out = "rep,index,j,k,h,truth,pre,post,se,standardized\n";
  for (const auto& r : records)
    for (const auto& t : r.tracked) {
      const Coord c = coord_of(layout, t.index);
      out += join_row({std::to_string(r.rep), std::to_string(t.index), std::to_string(c.j + 1),
                       std::to_string(c.k + 1), std::to_string(c.h), format_double(t.truth), format_double(t.pre),
                       format_double(t.post), format_double(t.se), format_double(t.standardized)});
    }
  return out;
}

std::string contrasts_csv(const std::vector<RepRecord>& records) {
  std::string out = "rep,case,component,estimate,truth,standardized,covered\n";
  for (const auto& r : records)
    for (const auto& c : r.contrasts)
      for (Index i = 0; i < c.estimate.size(); ++i)
        out += join_row({std::to_string(r.rep), contrast_name(c.which), std::to_string(i + 1),
                         format_double(c.estimate[i]), format_double(c.truth[i]), format_double(c.standardized[i]),
                         c.covered ? "1" : "0"});
  return out;
}

std::string qq_csv(const std::vector<std::pair<double, double>>& points) {
  std::string out = "theoretical,empirical\n";
  for (const auto& [t, e] : points) out += join_row({format_double(t), format_double(e)});
  return out;
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    for (std::size_t col = 1;; ++col) {
      const std::size_t end = line.find(',', start);
      std::string cell = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
      const auto a = cell.find_first_not_of(" \t");
      const auto b = cell.find_last_not_of(" \t");
      cell = a == std::string::npos ? "" : cell.substr(a, b - a + 1);
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw InvalidArgument(path.string() + ": row " + std::to_string(lineno) + ", column " + std::to_string(col) +
                              ": non-numeric cell '" + cell + "'");
      row.push_back(v);
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgument(path.string() + ": row " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                            " columns, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(path.string() + ": no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sage
