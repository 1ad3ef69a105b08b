#include "cellcov/pipelines.hpp"

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include "cellcov/error.hpp"
#include "cellcov/estimators.hpp"

namespace cellcov {

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParameterError("pipeline '" + context + "': cannot parse number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

FilterReport report_from_flags(const MaskedData& md, CellMask flags) {
  FilterReport rep;
  rep.n = md.n();
  rep.p = md.p();
  rep.flags = std::move(flags);
  const auto s = score_filter(rep.flags, md);
  rep.retained_clean = s.retained_clean;
  rep.retained_contam = s.retained_contam;
  rep.removed_or_missing = s.removed_or_missing;
  rep.delta_hat = s.delta_hat;
  rep.eps_hat = s.eps_hat;
  return rep;
}

// Debias the filtered data with per-feature delta estimates.
PipelineResult debias_filtered(const Matrix& filtered) {
  const auto oc = empirical_cov_zero_fill(filtered);
  PipelineResult res{debias_mar(oc, oc.delta_hat.per_feature), std::nullopt,
                     oc.delta_hat.per_feature, oc.delta_hat.warnings};
  return res;
}

}  // namespace

std::string to_string(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::classical: return "classical";
    case PipelineKind::mv: return "mv";
    case PipelineKind::oracle_mv: return "oracle_mv";
    case PipelineKind::tail_mv: return "tail_mv";
    case PipelineKind::ddc_mv: return "ddc_mv";
    case PipelineKind::ddc_knn: return "ddc_knn";
  }
  return "unknown";
}

void PipelineSpec::validate() const {
  const bool wants_q = kind == PipelineKind::ddc_mv || kind == PipelineKind::ddc_knn;
  const bool wants_k = kind == PipelineKind::ddc_knn;
  const bool wants_tail = kind == PipelineKind::tail_mv;
  const std::string who = to_string(kind);
  if (quantile.has_value() != wants_q)
    throw ParameterError(who + (wants_q ? ": quantile is required" : ": quantile does not apply"));
  if (k_neighbors.has_value() != wants_k)
    throw ParameterError(who + (wants_k ? ": k_neighbors is required" : ": k_neighbors does not apply"));
  if (tail_k.has_value() != wants_tail)
    throw ParameterError(who + (wants_tail ? ": tail_k is required" : ": tail_k does not apply"));
  if (quantile && !(*quantile > 0.0 && *quantile < 1.0))
    throw ParameterError(who + ": quantile must lie in (0, 1)");
  if (k_neighbors && *k_neighbors < 1) throw ParameterError(who + ": k_neighbors must be >= 1");
  if (tail_k && !(*tail_k > 0.0)) throw ParameterError(who + ": tail_k must be positive");
}

std::string PipelineSpec::name() const {
  switch (kind) {
    case PipelineKind::tail_mv: return "tail_mv(" + format_number(tail_k.value_or(3.0)) + ")";
    case PipelineKind::ddc_mv: return "ddc_mv(" + format_number(quantile.value_or(0.99)) + ")";
    case PipelineKind::ddc_knn:
      return "ddc_knn(" + format_number(quantile.value_or(0.99)) + "," +
             std::to_string(k_neighbors.value_or(5)) + ")";
    default: return to_string(kind);
  }
}

PipelineSpec PipelineSpec::parse(const std::string& text) {
  std::string head = text;
  std::vector<std::string> args;
  if (const auto open = text.find('('); open != std::string::npos) {
    if (text.back() != ')') throw ParameterError("pipeline '" + text + "': missing ')'");
    head = text.substr(0, open);
    args = split(text.substr(open + 1, text.size() - open - 2), ',');
  } else if (const auto colon = text.find(':'); colon != std::string::npos) {
    head = text.substr(0, colon);
    args = split(text.substr(colon + 1), ':');
  }

  PipelineSpec spec;
  if (head == "classical") {
    spec = classical();
  } else if (head == "mv") {
    spec = mv();
  } else if (head == "oracle_mv" || head == "oracle") {
    spec = oracle_mv();
  } else if (head == "tail_mv" || head == "tail") {
    spec = tail_mv();
    if (args.size() > 1) throw ParameterError("pipeline '" + text + "': too many arguments");
    if (!args.empty()) spec.tail_k = parse_number(args[0], text);
    args.clear();
  } else if (head == "ddc_mv" || head == "ddc") {
    spec = ddc_mv();
    if (args.size() > 1) throw ParameterError("pipeline '" + text + "': too many arguments");
    if (!args.empty()) spec.quantile = parse_number(args[0], text);
    args.clear();
  } else if (head == "ddc_knn") {
    spec = ddc_knn();
    if (args.size() > 2) throw ParameterError("pipeline '" + text + "': too many arguments");
    if (!args.empty()) spec.quantile = parse_number(args[0], text);
    if (args.size() > 1) {
      const double k = parse_number(args[1], text);
      if (k != std::floor(k)) throw ParameterError("pipeline '" + text + "': k must be an integer");
      spec.k_neighbors = static_cast<int>(k);
    }
    args.clear();
  } else {
    throw ParameterError("unknown pipeline '" + text + "'");
  }
  if (!args.empty()) throw ParameterError("pipeline '" + text + "' takes no arguments");
  spec.validate();
  return spec;
}

PipelineResult run_pipeline(const PipelineSpec& spec, const MaskedData& md) {
  spec.validate();
  switch (spec.kind) {
    case PipelineKind::classical: {
      auto oc = empirical_cov_zero_fill(md.values);
      return {std::move(oc.sigma_y), std::nullopt, oc.delta_hat.per_feature, oc.delta_hat.warnings};
    }
    case PipelineKind::mv: {
      const auto oc = empirical_cov_zero_fill(md.values);
      return {debias_mcar(oc, oc.delta_hat.global), std::nullopt, oc.delta_hat.per_feature,
              oc.delta_hat.warnings};
    }
    case PipelineKind::oracle_mv: {
      if (!md.has_truth)
        throw ParameterError("oracle_mv needs ground-truth contamination masks");
      auto res = debias_filtered(apply_flags(md.values, md.contam_mask));
      res.report = report_from_flags(md, md.contam_mask);
      return res;
    }
    case PipelineKind::tail_mv: {
      auto rep = tail_cut(md, *spec.tail_k);
      auto res = debias_filtered(apply_flags(md.values, rep.flags));
      res.report = std::move(rep);
      return res;
    }
    case PipelineKind::ddc_mv: {
      auto rep = ddc(md, *spec.quantile);
      auto res = debias_filtered(apply_flags(md.values, rep.flags));
      res.report = std::move(rep);
      return res;
    }
    case PipelineKind::ddc_knn: {
      auto rep = ddc(md, *spec.quantile);
      const Matrix filtered = apply_flags(md.values, rep.flags);
      const auto delta = estimate_delta(filtered);
      const Matrix completed = knn_impute(filtered, *spec.k_neighbors);
      auto oc = empirical_cov_zero_fill(completed);
      return {std::move(oc.sigma_y), std::move(rep), delta.per_feature, delta.warnings};
    }
  }
  throw ParameterError("run_pipeline: unknown pipeline kind");
}

}  // namespace cellcov
