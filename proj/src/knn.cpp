#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cellcov/error.hpp"
#include "cellcov/kernels.hpp"
#include "cellcov/pipelines.hpp"

namespace cellcov {

Matrix knn_impute(const Matrix& values, int k) {
  if (k < 1) throw ParameterError("knn_impute: k must be >= 1");
  const std::size_t n = values.rows(), p = values.cols();

  std::vector<double> col_mean(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(values(i, j))) continue;
      sum += values(i, j);
      ++count;
    }
    if (count == 0)
      throw ImputationError("knn_impute: column " + std::to_string(j) + " has no observed values");
    col_mean[j] = sum / static_cast<double>(count);
  }

  Matrix out = values;
  const auto isa = kernels::detected_isa();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n);
  std::vector<std::size_t> donors;
  donors.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = values.row(i);
    if (std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) continue;

    for (std::size_t o = 0; o < n; ++o) {
      if (o == i) {
        dist[o] = kInf;
        continue;
      }
      const auto md = kernels::masked_sq_distance(row, values.row(o), isa);
      dist[o] = md.present == 0 ? kInf
                                : std::sqrt(static_cast<double>(p) / static_cast<double>(md.present) *
                                            md.sum_sq);
    }

    for (std::size_t j = 0; j < p; ++j) {
      if (!std::isnan(row[j])) continue;
      donors.clear();
      for (std::size_t o = 0; o < n; ++o)
        if (dist[o] < kInf && !std::isnan(values(o, j))) donors.push_back(o);
      if (donors.empty()) {
        out(i, j) = col_mean[j];
        continue;
      }
      const std::size_t take = std::min(donors.size(), static_cast<std::size_t>(k));
      std::partial_sort(donors.begin(), donors.begin() + static_cast<std::ptrdiff_t>(take),
                        donors.end(), [&](std::size_t a, std::size_t b) {
                          return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                        });
      double sum = 0.0;
      for (std::size_t t = 0; t < take; ++t) sum += values(donors[t], j);
      out(i, j) = sum / static_cast<double>(take);
    }
  }
  return out;
}

}  // namespace cellcov
