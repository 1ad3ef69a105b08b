#include "cellcov/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <system_error>

#include "cellcov/error.hpp"

namespace cellcov {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double parse_field(const std::string& field, std::size_t line, std::size_t column) {
  std::size_t b = 0, e = field.size();
  while (b < e && field[b] == ' ') ++b;
  while (e > b && field[e - 1] == ' ') --e;
  if (b == e) return std::numeric_limits<double>::quiet_NaN();
  const char* first = field.data() + b;
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, field.data() + e, v);
  if (res.ec != std::errc() || res.ptr != field.data() + e || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": cannot parse '" + field + "' as a finite number",
                     line, column);
  return v;
}

}  // namespace

std::vector<std::string> default_header(std::size_t p) {
  std::vector<std::string> h(p);
  for (std::size_t j = 0; j < p; ++j) h[j] = "f" + std::to_string(j);
  return h;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvTable read_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line) || line.empty()) throw ParseError("line 1: missing header row", 1);
  CsvTable t;
  for (auto& f : split_fields(line)) t.header.push_back(unquote(f));
  const std::size_t p = t.header.size();

  std::vector<double> cells;
  std::size_t rows = 0;
  std::size_t lineno = 1;
  while (next_line(in, line)) {
    ++lineno;
    // A blank line is a fully-missing row only when there is a single column.
    if (line.empty() && p > 1) continue;
    const auto fields = split_fields(line);
    if (fields.size() != p)
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(p) +
                           " fields, found " + std::to_string(fields.size()),
                       lineno);
    for (std::size_t j = 0; j < p; ++j) cells.push_back(parse_field(fields[j], lineno, j + 1));
    ++rows;
  }
  t.values = Matrix(rows, p);
  std::copy(cells.begin(), cells.end(), t.values.data().begin());
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading", 0);
  return read_csv(in);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values) {
  if (header.size() != values.cols()) throw DimensionError("write_csv: header size mismatch");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const SymMatrix& m) {
  write_csv(out, header, m.to_dense());
}

void write_mask_csv(std::ostream& out, const std::vector<std::string>& header, const CellMask& mask,
                    std::size_t n, std::size_t p) {
  if (header.size() != p || mask.size() != n * p)
    throw DimensionError("write_mask_csv: shape mismatch");
  for (std::size_t j = 0; j < p; ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) out << (j ? "," : "") << (mask[i * p + j] ? '1' : '0');
    out << '\n';
  }
}

CellMask read_mask_csv(std::istream& in, std::size_t expected_n, std::size_t expected_p) {
  const auto t = read_csv(in);
  if (t.values.rows() != expected_n || t.values.cols() != expected_p)
    throw ParseError("mask shape " + std::to_string(t.values.rows()) + "x" +
                         std::to_string(t.values.cols()) + " does not match data shape " +
                         std::to_string(expected_n) + "x" + std::to_string(expected_p),
                     0);
  CellMask mask(expected_n * expected_p);
  const auto cells = t.values.data();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c] != 0.0 && cells[c] != 1.0)
      throw ParseError("line " + std::to_string(c / expected_p + 2) + ", column " +
                           std::to_string(c % expected_p + 1) + ": mask entries must be 0 or 1",
                       c / expected_p + 2, c % expected_p + 1);
    mask[c] = cells[c] == 1.0 ? 1 : 0;
  }
  return mask;
}

CellMask read_mask_csv_file(const std::string& path, std::size_t expected_n, std::size_t expected_p) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading", 0);
  return read_mask_csv(in, expected_n, expected_p);
}

}  // namespace cellcov
