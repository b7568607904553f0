#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "excellence/eb.hpp"

namespace excellence {

inline constexpr int kSchemaVersion = 1;

struct ModelSummary {
  double beta0 = 0.0;
  double sigma2 = 0.0;
  double se_beta0 = 0.0;
  double se_sigma2 = 0.0;
  double loglik = 0.0;
  double icc = 0.0;
  double wald_z = 0.0;
  double wald_p = 0.5;
  bool ranking_reasonable = false;
  bool converged = false;
  bool boundary = false;
  double grand_mean_prob = 0.0;
  double mean_raw_proportion = 0.0;
  std::vector<std::string> warnings;
};

struct ExportedInstitution {
  InstitutionEstimate estimate;
  std::string name;
  std::string country;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct SubjectResult {
  std::string subject;
  std::string name;
  std::size_t n_institutions = 0;
  ModelSummary model;
  std::vector<ExportedInstitution> institutions;  // sorted by rank
};

struct ResultsDocument {
  int schema_version = kSchemaVersion;
  std::string generated_at;  // ISO-8601, UTC
  std::vector<SubjectResult> subjects;
};

ModelSummary summarize_model(const FitResult& fit, const ClusterTable& table);

/// Sorted keys, no whitespace, numbers at 6 significant digits, non-finite
/// numbers as null, trailing LF.
std::string to_canonical_json(const ResultsDocument& doc);

/// Throws std::invalid_argument on schema errors or an unsupported schema_version.
ResultsDocument parse_results(const std::string& text);

/// Throws std::runtime_error naming the path and the cause.
void export_results(const ResultsDocument& doc, const std::filesystem::path& path);
ResultsDocument load_results(const std::filesystem::path& path);

/// ISO-8601 UTC timestamp for seconds since the epoch.
std::string iso8601_utc(long long epoch_seconds);

}  // namespace excellence
