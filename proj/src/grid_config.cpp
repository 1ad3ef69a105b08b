#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <string>
#include <system_error>

#include "cellcov/bench.hpp"
#include "cellcov/error.hpp"

namespace cellcov {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& key, std::size_t line, const std::string& why) {
  throw ParseError("grid config line " + std::to_string(line) + ": key '" + key + "': " + why, line);
}

double to_double(const std::string& key, const std::string& v, std::size_t line) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    fail(key, line, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v, std::size_t line) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(key, line, "expected a non-negative integer, got '" + v + "'");
  return out;
}

// Splits on commas that are not inside parentheses, so "ddc_knn(0.99,5)"
// stays one item.
std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> items;
  std::string cur;
  int depth = 0;
  for (char c : v) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  items.push_back(trim(cur));
  return items;
}

}  // namespace

ExperimentGrid parse_grid_config(std::istream& in) {
  static const std::set<std::string> known = {"n",      "p",     "r",    "delta_grid", "epsilon",
                                              "law",    "sigma", "pipelines", "reps", "seed",
                                              "error_norm", "threads"};
  static const std::set<std::string> required = {"n",         "p",    "r",   "delta_grid",
                                                 "pipelines", "reps", "seed"};
  ExperimentGrid g;
  std::set<std::string> seen;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("grid config line " + std::to_string(lineno) + ": expected 'key = value'",
                       lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!known.contains(key)) fail(key, lineno, "unknown key");
    if (!seen.insert(key).second) fail(key, lineno, "duplicate key");
    if (val.empty()) fail(key, lineno, "missing value");

    try {
      if (key == "n") {
        g.n = to_uint(key, val, lineno);
      } else if (key == "p") {
        g.p = to_uint(key, val, lineno);
      } else if (key == "r") {
        g.r = to_double(key, val, lineno);
      } else if (key == "delta_grid") {
        for (const auto& item : split_list(val)) g.delta_grid.push_back(to_double(key, item, lineno));
      } else if (key == "epsilon") {
        g.epsilon = to_double(key, val, lineno);
      } else if (key == "law") {
        g.law = parse_law(val);
      } else if (key == "sigma") {
        g.sigma = to_double(key, val, lineno);
      } else if (key == "pipelines") {
        for (const auto& item : split_list(val)) g.pipelines.push_back(PipelineSpec::parse(item));
      } else if (key == "reps") {
        g.reps = static_cast<int>(to_uint(key, val, lineno));
      } else if (key == "seed") {
        g.seed = to_uint(key, val, lineno);
      } else if (key == "error_norm") {
        g.error_norm = parse_error_norm(val);
      } else if (key == "threads") {
        g.threads = static_cast<unsigned>(to_uint(key, val, lineno));
      }
    } catch (const ParameterError& e) {
      fail(key, lineno, e.what());
    }
  }
  for (const auto& k : required)
    if (!seen.contains(k)) fail(k, lineno, "required key is missing");
  try {
    g.validate();
  } catch (const ParameterError& e) {
    throw ParseError(std::string("grid config: ") + e.what(), lineno);
  }
  return g;
}

ExperimentGrid load_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid config '" + path + "'", 0);
  return parse_grid_config(in);
}

}  // namespace cellcov
