#pragma once
// JSON and CSV forms of the public data types. JSON node/partner labels are
// 1-based; covariate groups keep h = 0..q.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sage/debias.hpp"
#include "sage/harness.hpp"
#include "sage/inference.hpp"
#include "sage/sgl_fit.hpp"
#include "sage/simulator.hpp"

namespace sage {

using Json = nlohmann::json;

// {"p":..,"q":..,"B":[{"h":..,"entries":[[j,k,value],...]},...],"sigma_diag":[...]}
// Off-diagonal entries are applied symmetrically; the diagonal comes from sigma_diag.
Json model_to_json(const PrecisionModel& model);
PrecisionModel model_from_json(const Json& j);

/// Nonzero coefficients as [[j,k,h,value],...].
Json coef_to_json(const MultiTaskCoef& beta);
MultiTaskCoef coef_from_json(const Json& j, const CoefLayout& layout);

Json fit_config_to_json(const FitConfig& c);
FitConfig fit_config_from_json(const Json& j, FitConfig base = {});
Json fit_result_to_json(const FitResult& r, const FitConfig& config);
FitResult fit_result_from_json(const Json& j, const CoefLayout& layout);

Json debias_column_to_json(const DebiasColumn& c, const CoefLayout& layout, int node);
Json sage_to_json(const SageEstimate& s, const CoefLayout& layout);
Json noise_to_json(const NoiseEstimate& n);

Json inference_report_to_json(const InferenceReport& r, const CoefLayout& layout);
/// Header plus one row per coordinate: j,k,h,estimate,se,lo,hi,z,p (j, k 1-based).
std::string inference_report_csv(const InferenceReport& r, const CoefLayout& layout);

struct ContrastSpec {
  Matrix A;  // rows x L on node j
  Vector null_value;
};
/// {"rows":[{"entries":[[j,k,h,weight],...]},...],"null":[...]}; every entry must name node j.
ContrastSpec contrast_from_json(const Json& doc, const CoefLayout& layout, int j);

Json study_config_to_json(const StudyConfig& c);
StudyConfig study_config_from_json(const Json& j);
Json rep_record_to_json(const RepRecord& r);
RepRecord rep_record_from_json(const Json& j);
Json study_summary_to_json(const StudySummary& s, const StudyConfig& c);
/// Fixed-width table with the simulation-table row labels.
std::string format_summary_table(const StudySummary& s, const StudyConfig& c);
Json bench_rows_to_json(const std::vector<BenchRow>& rows);
std::string format_bench_table(const std::vector<BenchRow>& rows);

/// Long-format per-replication estimates (rep,index,j,k,h,truth,pre,post,se,standardized).
std::string estimates_csv(const std::vector<RepRecord>& records, const CoefLayout& layout);
/// One row per replication and contrast component.
std::string contrasts_csv(const std::vector<RepRecord>& records);
/// theoretical,empirical pairs.
std::string qq_csv(const std::vector<std::pair<double, double>>& points);

/// Headerless comma-separated numeric matrix, row = observation.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// FNV-1a over the canonical (key-sorted) JSON dump; stable under key reordering.
std::string config_hash(const Json& j);

}  // namespace sage
