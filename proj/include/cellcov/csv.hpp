#pragma once

// CSV interchange format.
//
//   * comma separated, one header row of feature names, '\n' line ends
//     ('\r\n' accepted on input);
//   * numbers in decimal notation, written in shortest round-trip form so
//     that write -> read reproduces every double bit-for-bit;
//   * an empty field is a missing value (NaN in memory);
//   * numeric fields are never quoted.
//
// Masks use the same layout with 0/1 fields; matrices are p x p with the
// data's header.

#include <iosfwd>
#include <string>
#include <vector>

#include "cellcov/datagen.hpp"
#include "cellcov/matrix.hpp"

namespace cellcov {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

std::vector<std::string> default_header(std::size_t p);

// Throws ParseError carrying the 1-based line (and column when known).
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values);
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const SymMatrix& m);
void write_mask_csv(std::ostream& out, const std::vector<std::string>& header, const CellMask& mask,
                    std::size_t n, std::size_t p);

// Reads a 0/1 mask; ParseError on any other value.
CellMask read_mask_csv(std::istream& in, std::size_t expected_n, std::size_t expected_p);
CellMask read_mask_csv_file(const std::string& path, std::size_t expected_n, std::size_t expected_p);

std::string format_double(double v);

}  // namespace cellcov
