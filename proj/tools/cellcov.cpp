// cellcov command-line tool: simulate, detect, estimate, bench.
//
// Exit codes: 0 success, 1 computation error, 2 usage or input error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cellcov/bench.hpp"
#include "cellcov/csv.hpp"
#include "cellcov/datagen.hpp"
#include "cellcov/detection.hpp"
#include "cellcov/error.hpp"
#include "cellcov/estimators.hpp"
#include "cellcov/pipelines.hpp"
#include "cellcov/rng.hpp"

namespace fs = std::filesystem;
using namespace cellcov;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "dir/name.csv" -> "dir/name"
std::string stem_of(const std::string& path) {
  const fs::path p(path);
  return (p.parent_path() / p.stem()).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  return out;
}

void require_readable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
}

struct Options {
  std::string input, output, method = "ddc", pipeline = "mv", grid_config, law = "dirac";
  std::size_t n = 100, p = 10;
  double r = 2.0, delta = 1.0, epsilon = 0.0, sigma = 10.0;
  std::optional<double> quantile, tail_k;
  std::optional<int> k_neighbors, reps;
  std::optional<std::uint64_t> seed;
  bool center = false, timing = false;
  std::optional<unsigned> threads;
};

// Reads a data CSV and, when "<stem>.clean_mask.csv" and
// "<stem>.contam_mask.csv" sit next to it, the ground-truth masks.
MaskedData load_data(const std::string& path, std::vector<std::string>& header) {
  auto table = read_csv_file(path);
  header = table.header;
  const std::size_t n = table.values.rows(), p = table.values.cols();
  MaskedData md = MaskedData::from_values(std::move(table.values));
  const std::string clean = stem_of(path) + ".clean_mask.csv";
  const std::string contam = stem_of(path) + ".contam_mask.csv";
  if (fs::exists(clean) && fs::exists(contam)) {
    md.clean_mask = read_mask_csv_file(clean, n, p);
    md.contam_mask = read_mask_csv_file(contam, n, p);
    md.has_truth = true;
    try {
      md.check_invariants();
    } catch (const DomainError& e) {
      throw UsageError("ground-truth sidecars do not match '" + path + "': " + e.what());
    }
  }
  return md;
}

int cmd_simulate(const Options& o) {
  auto out = open_out(o.output);
  const std::uint64_t seed = o.seed.value_or(0);
  const ContaminationModel model{o.delta, o.epsilon, parse_law(o.law), o.sigma};
  model.validate();

  const SymMatrix sigma = make_covariance(o.p, o.r, seed);
  MaskedData md = apply_mcar(sample_gaussian(sigma, o.n, seed), o.delta, seed);
  if (o.epsilon > 0.0) md = contaminate(md, model, seed);

  const auto header = default_header(o.p);
  write_csv(out, header, md.values);
  const std::string stem = stem_of(o.output);
  auto clean = open_out(stem + ".clean_mask.csv");
  write_mask_csv(clean, header, md.clean_mask, o.n, o.p);
  auto contam = open_out(stem + ".contam_mask.csv");
  write_mask_csv(contam, header, md.contam_mask, o.n, o.p);
  auto sig = open_out(stem + ".sigma.csv");
  write_matrix_csv(sig, header, sigma);
  return 0;
}

int cmd_detect(const Options& o) {
  if (o.method != "tail" && o.method != "ddc")
    throw UsageError("--method must be tail or ddc, got '" + o.method + "'");
  require_readable(o.input);
  auto out = open_out(o.output);
  std::vector<std::string> header;
  MaskedData md = load_data(o.input, header);
  if (o.center) md.values = center_observed(md.values);

  const FilterReport rep = o.method == "tail" ? tail_cut(md, o.tail_k.value_or(3.0))
                                              : ddc(md, o.quantile.value_or(0.99));
  write_mask_csv(out, header, rep.flags, rep.n, rep.p);

  json j;
  j["method"] = o.method;
  if (o.method == "tail")
    j["tail_k"] = o.tail_k.value_or(3.0);
  else
    j["quantile"] = o.quantile.value_or(0.99);
  j["n"] = rep.n;
  j["p"] = rep.p;
  j["flagged"] = rep.flagged_count();
  j["flagged_fraction"] = static_cast<double>(rep.flagged_count()) / static_cast<double>(rep.n * rep.p);
  j["truth"] = md.has_truth;
  if (rep.delta_hat) j["delta_hat"] = *rep.delta_hat;
  if (rep.eps_hat) j["eps_hat"] = *rep.eps_hat;
  auto rj = open_out(stem_of(o.output) + ".report.json");
  rj << j.dump(2) << '\n';
  return 0;
}

PipelineSpec resolve_pipeline(const Options& o) {
  PipelineSpec spec = PipelineSpec::parse(o.pipeline);
  auto apply = [&](auto& field, const auto& value, const char* flag) {
    if (!value) return;
    if (!field) throw UsageError(std::string(flag) + " does not apply to pipeline " + spec.name());
    field = *value;
  };
  apply(spec.quantile, o.quantile, "--quantile");
  apply(spec.tail_k, o.tail_k, "--tail-k");
  apply(spec.k_neighbors, o.k_neighbors, "--k-neighbors");
  spec.validate();
  return spec;
}

int cmd_estimate(const Options& o) {
  const PipelineSpec spec = resolve_pipeline(o);
  require_readable(o.input);
  auto out = open_out(o.output);
  std::vector<std::string> header;
  MaskedData md = load_data(o.input, header);
  if (o.center) md.values = center_observed(md.values);

  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult res = run_pipeline(spec, md);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  write_matrix_csv(out, header, res.estimate);

  json j;
  j["pipeline"] = spec.name();
  j["n"] = md.n();
  j["p"] = md.p();
  j["centered"] = o.center;
  j["delta_hat"] = res.delta_per_feature;
  std::vector<std::string> warnings = res.warnings;
  try {
    j["effective_rank"] = effective_rank(res.estimate);
  } catch (const DomainError& e) {
    j["effective_rank"] = nullptr;
    warnings.push_back(std::string("effective rank undefined: ") + e.what());
  }
  if (res.report) {
    j["flagged"] = res.report->flagged_count();
    if (res.report->delta_hat) j["filter_delta_hat"] = *res.report->delta_hat;
    if (res.report->eps_hat) j["filter_eps_hat"] = *res.report->eps_hat;
  }
  j["wall_time_ms"] = ms;
  j["warnings"] = warnings;
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  auto mj = open_out(stem_of(o.output) + ".meta.json");
  mj << j.dump(2) << '\n';
  return 0;
}

int cmd_bench(const Options& o) {
  require_readable(o.grid_config);
  ExperimentGrid grid = load_grid_config(o.grid_config);
  if (o.seed) grid.seed = *o.seed;
  if (o.reps) grid.reps = *o.reps;
  if (o.threads) grid.threads = *o.threads;
  grid.validate();

  const std::string stem = stem_of(o.output);
  auto csv = open_out(o.output);
  auto jsonl = open_out(stem + ".jsonl");
  auto summary = open_out(stem + ".summary.csv");

  const auto records = run_grid(grid);
  write_records_csv(csv, records, o.timing);
  write_records_jsonl(jsonl, records, o.timing);
  const auto rows = summarize(records);
  write_summary_csv(summary, rows, o.timing);
  std::cout << format_summary_table(rows);

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.status == RecordStatus::failed;
  if (failed) std::cerr << "warning: " << failed << " of " << records.size() << " records failed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance estimation under missing values and cell-wise contamination"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Generate a contaminated Gaussian data set");
  sim->add_option("--output", o.output, "Data CSV; sidecars are written next to it")->required();
  sim->add_option("--n", o.n, "Number of rows")->check(CLI::PositiveNumber);
  sim->add_option("--p", o.p, "Number of features")->check(CLI::PositiveNumber);
  sim->add_option("--r", o.r, "Effective rank parameter of the covariance");
  sim->add_option("--delta", o.delta, "Probability a cell is observed clean");
  sim->add_option("--epsilon", o.epsilon, "Probability an unobserved cell is contaminated");
  sim->add_option("--law", o.law, "Contamination law")->check(CLI::IsMember({"dirac", "gauss"}));
  sim->add_option("--sigma", o.sigma, "Contamination intensity");
  sim->add_option("--seed", o.seed, "Random seed");

  auto* det = app.add_subcommand("detect", "Flag outlying cells");
  det->add_option("--input", o.input, "Data CSV")->required();
  det->add_option("--output", o.output, "Flag mask CSV")->required();
  det->add_option("--method", o.method, "tail or ddc");
  det->add_option("--quantile", o.quantile, "DDC chi-square quantile");
  det->add_option("--tail-k", o.tail_k, "Tail cut multiplier");
  det->add_flag("--center", o.center, "Subtract observed column means first");

  auto* est = app.add_subcommand("estimate", "Estimate the covariance matrix");
  est->add_option("--input", o.input, "Data CSV")->required();
  est->add_option("--output", o.output, "Covariance CSV")->required();
  est->add_option("--pipeline", o.pipeline,
                  "classical, mv, oracle_mv, tail_mv(k), ddc_mv(q), ddc_knn(q,k)");
  est->add_option("--method", o.pipeline, "Alias of --pipeline");
  est->add_option("--quantile", o.quantile, "DDC chi-square quantile");
  est->add_option("--tail-k", o.tail_k, "Tail cut multiplier");
  est->add_option("--k-neighbors", o.k_neighbors, "Neighbours for KNN imputation");
  est->add_flag("--center", o.center, "Subtract observed column means first");

  auto* bench = app.add_subcommand("bench", "Run a Monte Carlo experiment grid");
  bench->add_option("--grid-config", o.grid_config, "Grid configuration file")->required();
  bench->add_option("--output", o.output, "Records CSV; .jsonl and .summary.csv alongside")
      ->required();
  bench->add_option("--seed", o.seed, "Override the grid seed");
  bench->add_option("--reps", o.reps, "Override the repetition count");
  bench->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  bench->add_flag("--timing", o.timing, "Include wall-clock columns in the outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*det) return cmd_detect(o);
    if (*est) return cmd_estimate(o);
    return cmd_bench(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCompute;
  }
}
