#pragma once

// Monte Carlo experiment runner.
//
// A grid fixes one true covariance (derived from grid.seed) and, for every
// (delta, rep) pair, one corrupted data set that all pipelines share. Seeds
// are pure functions of (grid.seed, delta index, rep), so results do not
// depend on thread count or scheduling.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cellcov/datagen.hpp"
#include "cellcov/matrix.hpp"
#include "cellcov/pipelines.hpp"

namespace cellcov {

enum class ErrorNorm { operator_norm, frobenius };

std::string to_string(ErrorNorm norm);
ErrorNorm parse_error_norm(const std::string& s);

struct ExperimentGrid {
  std::size_t n = 0;
  std::size_t p = 0;
  double r = 1.0;
  std::vector<double> delta_grid;
  double epsilon = 0.0;
  ContaminationLaw law = ContaminationLaw::none;
  double sigma = 1.0;
  std::vector<PipelineSpec> pipelines;
  int reps = 1;
  std::uint64_t seed = 0;
  ErrorNorm error_norm = ErrorNorm::operator_norm;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

// Flat "key = value" file; '#' starts a comment. Keys: n, p, r, delta_grid
// (comma list), epsilon, law, sigma, pipelines (comma list of pipeline
// names), reps, seed, error_norm, threads. Throws ParseError naming the
// offending key and line.
ExperimentGrid parse_grid_config(std::istream& in);
ExperimentGrid load_grid_config(const std::string& path);

enum class RecordStatus { ok, failed };

struct BenchRecord {
  std::size_t delta_index = 0;
  double delta = 1.0;
  std::size_t pipeline_index = 0;
  std::string pipeline;
  int rep = 0;
  std::uint64_t seed_used = 0;
  RecordStatus status = RecordStatus::ok;
  std::string message;  // failure reason or joined warnings
  double op_error = 0.0;   // ||estimate - sigma|| in the grid's norm
  double rel_error = 0.0;  // op_error / ||sigma||
  std::optional<double> delta_hat;
  std::optional<double> eps_hat;
  double wall_time_ms = 0.0;
};

// Records ordered by (delta_index, rep, pipeline_index).
std::vector<BenchRecord> run_grid(const ExperimentGrid& grid);

// 100 * ||a - b|| / ||ref||; throws DomainError when ||ref|| == 0.
double relative_spectral_difference(const SymMatrix& a, const SymMatrix& b, const SymMatrix& ref);
inline double relative_spectral_difference(const SymMatrix& a, const SymMatrix& b) {
  return relative_spectral_difference(a, b, b);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // (n-1) denominator; 0 for a single value
  std::size_t count = 0;
};
MeanStd mean_std(const std::vector<double>& values);

struct SummaryRow {
  std::size_t delta_index = 0;
  double delta = 1.0;
  std::size_t pipeline_index = 0;
  std::string pipeline;
  std::size_t failures = 0;
  bool single_record = false;  // std reported as 0 by convention
  MeanStd op_error, rel_error, delta_hat, eps_hat, wall_time_ms;
};

// One row per (delta, pipeline), over successful records only.
std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records);

void write_records_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                       bool include_timing);
void write_records_jsonl(std::ostream& out, const std::vector<BenchRecord>& records,
                         bool include_timing);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows, bool include_timing);
// Fixed-width human readable table.
std::string format_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace cellcov
