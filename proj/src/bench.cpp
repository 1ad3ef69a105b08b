#include "cellcov/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cellcov/error.hpp"
#include "cellcov/rng.hpp"

namespace cellcov {

namespace {

constexpr std::uint64_t kSigmaStream = 0x5349474d41;  // "SIGMA"

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

// Quote a CSV text field only when needed.
std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double matrix_norm(const SymMatrix& a, ErrorNorm norm) {
  return norm == ErrorNorm::frobenius ? frobenius_norm(a) : operator_norm(a);
}

}  // namespace

std::string to_string(ErrorNorm norm) {
  return norm == ErrorNorm::frobenius ? "frobenius" : "operator";
}

ErrorNorm parse_error_norm(const std::string& s) {
  if (s == "operator" || s == "op") return ErrorNorm::operator_norm;
  if (s == "frobenius" || s == "fro") return ErrorNorm::frobenius;
  throw ParameterError("unknown error norm '" + s + "' (expected operator or frobenius)");
}

void ExperimentGrid::validate() const {
  if (n < 2) throw ParameterError("grid: n must be >= 2");
  if (p < 2) throw ParameterError("grid: p must be >= 2");
  if (!(r >= 1.0 && r < static_cast<double>(p))) throw ParameterError("grid: r must lie in [1, p)");
  if (delta_grid.empty()) throw ParameterError("grid: delta_grid is empty");
  for (double d : delta_grid)
    if (!(d > 0.0 && d <= 1.0)) throw ParameterError("grid: delta_grid entries must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ParameterError("grid: epsilon must lie in [0, 1]");
  if (law != ContaminationLaw::none && !(sigma > 0.0))
    throw ParameterError("grid: sigma must be positive");
  if (pipelines.empty()) throw ParameterError("grid: pipelines is empty");
  for (const auto& s : pipelines) s.validate();
  if (reps < 1) throw ParameterError("grid: reps must be >= 1");
}

std::vector<BenchRecord> run_grid(const ExperimentGrid& grid) {
  grid.validate();
  const SymMatrix sigma = make_covariance(grid.p, grid.r, derive_seed(grid.seed, {kSigmaStream}));
  const double sigma_norm = matrix_norm(sigma, grid.error_norm);
  const GaussianSampler sampler(sigma);

  const std::size_t n_delta = grid.delta_grid.size();
  const std::size_t n_reps = static_cast<std::size_t>(grid.reps);
  const std::size_t n_pipe = grid.pipelines.size();
  const std::size_t n_tasks = n_delta * n_reps;
  std::vector<BenchRecord> records(n_tasks * n_pipe);

  auto run_task = [&](std::size_t task) {
    const std::size_t di = task / n_reps;
    const std::size_t rep = task % n_reps;
    const double delta = grid.delta_grid[di];
    const std::uint64_t seed = derive_seed(grid.seed, {di, rep});

    for (std::size_t pi = 0; pi < n_pipe; ++pi) {
      auto& rec = records[task * n_pipe + pi];
      rec.delta_index = di;
      rec.delta = delta;
      rec.pipeline_index = pi;
      rec.pipeline = grid.pipelines[pi].name();
      rec.rep = static_cast<int>(rep);
      rec.seed_used = seed;
    }

    MaskedData md;
    try {
      md = apply_mcar(sampler.sample(grid.n, seed), delta, seed);
      if (grid.law != ContaminationLaw::none && grid.epsilon > 0.0)
        md = contaminate(md, {delta, grid.epsilon, grid.law, grid.sigma}, seed);
    } catch (const std::exception& e) {
      for (std::size_t pi = 0; pi < n_pipe; ++pi) {
        auto& rec = records[task * n_pipe + pi];
        rec.status = RecordStatus::failed;
        rec.message = std::string("data generation: ") + e.what();
        rec.op_error = rec.rel_error = std::nan("");
      }
      return;
    }

    for (std::size_t pi = 0; pi < n_pipe; ++pi) {
      auto& rec = records[task * n_pipe + pi];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = run_pipeline(grid.pipelines[pi], md);
        const auto t1 = std::chrono::steady_clock::now();
        rec.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rec.op_error = matrix_norm(res.estimate - sigma, grid.error_norm);
        rec.rel_error = rec.op_error / sigma_norm;
        if (res.report) {
          rec.delta_hat = res.report->delta_hat;
          rec.eps_hat = res.report->eps_hat;
        }
        std::string joined;
        for (const auto& w : res.warnings) joined += (joined.empty() ? "" : "; ") + w;
        rec.message = joined;
      } catch (const std::exception& e) {
        rec.status = RecordStatus::failed;
        rec.message = e.what();
        rec.op_error = rec.rel_error = std::nan("");
      }
    }
  };

  unsigned workers = grid.threads ? grid.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_tasks)));
  if (workers == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < n_tasks; t = next++) run_task(t);
    });
  }
  pool.clear();  // joins
  return records;
}

double relative_spectral_difference(const SymMatrix& a, const SymMatrix& b, const SymMatrix& ref) {
  if (a.dim() != b.dim() || a.dim() != ref.dim())
    throw DimensionError("relative_spectral_difference: dimension mismatch");
  const double denom = operator_norm(ref);
  if (denom == 0.0) throw DomainError("relative_spectral_difference: reference matrix is zero");
  return 100.0 * operator_norm(a - b) / denom;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.count = values.size();
  if (values.empty()) {
    m.mean = m.std = std::nan("");
    return m;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return m;
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return m;
}

std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records) {
  struct Acc {
    SummaryRow row;
    std::vector<double> op, rel, dh, eh, wt;
  };
  std::map<std::pair<std::size_t, std::size_t>, Acc> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.delta_index, r.pipeline_index}];
    g.row.delta_index = r.delta_index;
    g.row.delta = r.delta;
    g.row.pipeline_index = r.pipeline_index;
    g.row.pipeline = r.pipeline;
    if (r.status != RecordStatus::ok) {
      ++g.row.failures;
      continue;
    }
    g.op.push_back(r.op_error);
    g.rel.push_back(r.rel_error);
    if (r.delta_hat) g.dh.push_back(*r.delta_hat);
    if (r.eps_hat) g.eh.push_back(*r.eps_hat);
    g.wt.push_back(r.wall_time_ms);
  }
  std::vector<SummaryRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, g] : groups) {
    g.row.op_error = mean_std(g.op);
    g.row.rel_error = mean_std(g.rel);
    g.row.delta_hat = mean_std(g.dh);
    g.row.eps_hat = mean_std(g.eh);
    g.row.wall_time_ms = mean_std(g.wt);
    g.row.single_record = g.op.size() == 1;
    rows.push_back(std::move(g.row));
  }
  return rows;
}

void write_records_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                       bool include_timing) {
  out << "delta_index,delta,pipeline_index,pipeline,rep,seed,status,op_error,rel_error,delta_hat,"
         "eps_hat";
  if (include_timing) out << ",wall_time_ms";
  out << ",message\n";
  for (const auto& r : records) {
    out << r.delta_index << ',' << fmt(r.delta) << ',' << r.pipeline_index << ','
        << csv_text(r.pipeline) << ',' << r.rep << ',' << r.seed_used << ','
        << (r.status == RecordStatus::ok ? "ok" : "failed") << ',' << fmt(r.op_error) << ','
        << fmt(r.rel_error) << ',' << fmt(r.delta_hat) << ',' << fmt(r.eps_hat);
    if (include_timing) out << ',' << fmt(r.wall_time_ms);
    out << ',' << csv_text(r.message) << '\n';
  }
}

void write_records_jsonl(std::ostream& out, const std::vector<BenchRecord>& records,
                         bool include_timing) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["delta_index"] = r.delta_index;
    j["delta"] = r.delta;
    j["pipeline_index"] = r.pipeline_index;
    j["pipeline"] = r.pipeline;
    j["rep"] = r.rep;
    j["seed"] = r.seed_used;
    j["status"] = r.status == RecordStatus::ok ? "ok" : "failed";
    j["op_error"] = std::isnan(r.op_error) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.op_error);
    j["rel_error"] =
        std::isnan(r.rel_error) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.rel_error);
    j["delta_hat"] = r.delta_hat ? nlohmann::ordered_json(*r.delta_hat) : nlohmann::ordered_json();
    j["eps_hat"] = r.eps_hat ? nlohmann::ordered_json(*r.eps_hat) : nlohmann::ordered_json();
    if (include_timing) j["wall_time_ms"] = r.wall_time_ms;
    j["message"] = r.message;
    out << j.dump() << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows, bool include_timing) {
  out << "delta,contamination_rate,pipeline,count,failures,single_record,op_error_mean,op_error_std,"
         "rel_error_mean,rel_error_std,delta_hat_mean,delta_hat_std,eps_hat_mean,eps_hat_std";
  if (include_timing) out << ",wall_time_ms_mean,wall_time_ms_std";
  out << '\n';
  for (const auto& r : rows) {
    const bool has_filter = r.delta_hat.count > 0;
    out << fmt(r.delta) << ',' << fmt(1.0 - r.delta) << ',' << csv_text(r.pipeline) << ','
        << r.op_error.count << ',' << r.failures << ',' << (r.single_record ? 1 : 0) << ','
        << fmt(r.op_error.mean) << ',' << fmt(r.op_error.std) << ',' << fmt(r.rel_error.mean) << ','
        << fmt(r.rel_error.std) << ',' << (has_filter ? fmt(r.delta_hat.mean) : "") << ','
        << (has_filter ? fmt(r.delta_hat.std) : "") << ','
        << (has_filter ? fmt(r.eps_hat.mean) : "") << ',' << (has_filter ? fmt(r.eps_hat.std) : "");
    if (include_timing) out << ',' << fmt(r.wall_time_ms.mean) << ',' << fmt(r.wall_time_ms.std);
    out << '\n';
  }
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "delta" << std::setw(20) << "pipeline" << std::right
     << std::setw(6) << "ok" << std::setw(6) << "fail" << std::setw(12) << "err mean"
     << std::setw(11) << "err std" << std::setw(10) << "rel mean" << std::setw(10) << "d_hat%"
     << std::setw(9) << "std" << std::setw(10) << "e_hat%" << std::setw(9) << "std" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << std::setprecision(3) << r.delta << std::setw(20)
       << r.pipeline << std::right << std::setw(6) << r.op_error.count << std::setw(6) << r.failures
       << std::setprecision(4) << std::setw(12) << r.op_error.mean << std::setw(11)
       << r.op_error.std << std::setw(10) << r.rel_error.mean;
    if (r.delta_hat.count > 0) {
      os << std::setprecision(3) << std::setw(10) << 100.0 * r.delta_hat.mean << std::setw(9)
         << 100.0 * r.delta_hat.std << std::setw(10) << 100.0 * r.eps_hat.mean << std::setw(9)
         << 100.0 * r.eps_hat.std;
    } else {
      os << std::setw(10) << "-" << std::setw(9) << "-" << std::setw(10) << "-" << std::setw(9)
         << "-";
    }
    if (r.single_record) os << "  (single record: std reported as 0)";
    os << '\n';
  }
  return os.str();
}

}  // namespace cellcov
