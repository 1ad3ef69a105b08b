#pragma once

// End-to-end estimators: filter (or not), then debias or impute.

#include <optional>
#include <string>
#include <vector>

#include "cellcov/datagen.hpp"
#include "cellcov/detection.hpp"
#include "cellcov/matrix.hpp"

namespace cellcov {

enum class PipelineKind {
  classical,  // zero-filled second moment, no correction
  mv,         // debiased estimator without any filtering
  oracle_mv,  // removes the true contaminated cells, then debiases
  tail_mv,    // tail cut, then debiases
  ddc_mv,     // DDC, then debiases
  ddc_knn,    // DDC, KNN imputation, plain second moment
};

struct PipelineSpec {
  PipelineKind kind = PipelineKind::classical;
  std::optional<double> quantile;     // ddc_mv, ddc_knn
  std::optional<int> k_neighbors;     // ddc_knn
  std::optional<double> tail_k;       // tail_mv

  static PipelineSpec classical() { return {PipelineKind::classical, {}, {}, {}}; }
  static PipelineSpec mv() { return {PipelineKind::mv, {}, {}, {}}; }
  static PipelineSpec oracle_mv() { return {PipelineKind::oracle_mv, {}, {}, {}}; }
  static PipelineSpec tail_mv(double k = 3.0) { return {PipelineKind::tail_mv, {}, {}, k}; }
  static PipelineSpec ddc_mv(double q = 0.99) { return {PipelineKind::ddc_mv, q, {}, {}}; }
  static PipelineSpec ddc_knn(double q = 0.99, int k = 5) {
    return {PipelineKind::ddc_knn, q, k, {}};
  }

  // Parameters present iff the kind uses them, and in range.
  void validate() const;

  // Stable display / serialization name, e.g. "ddc_mv(0.99)".
  std::string name() const;

  // Inverse of name(); also accepts bare kind names with default parameters
  // and the colon form "ddc_knn:0.99:5".
  static PipelineSpec parse(const std::string& text);
};

std::string to_string(PipelineKind kind);

struct PipelineResult {
  SymMatrix estimate;
  std::optional<FilterReport> report;  // filtering pipelines only
  std::vector<double> delta_per_feature;
  std::vector<std::string> warnings;
};

// oracle_mv needs md.has_truth (ParameterError otherwise).
PipelineResult run_pipeline(const PipelineSpec& spec, const MaskedData& md);

// Missing cells take the mean of that feature over the k nearest rows that
// observe it. Row distance: sqrt(p / #co-observed * sum of squared
// differences over co-observed coordinates). Falls back to the column mean
// when no row qualifies. Throws ImputationError for a fully-missing column.
Matrix knn_impute(const Matrix& values, int k = 5);

}  // namespace cellcov
