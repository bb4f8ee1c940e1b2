#pragma once

// Matrix Market coordinate files (real, general|symmetric) and plain vector
// files. Indices are 1-based on disk.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "msp/sparse.hpp"

namespace msp {

namespace detail {

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool is_comment_or_blank(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '%';
}

}  // namespace detail

[[nodiscard]] inline CsrMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("matrix market: empty input");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket") throw FormatError("matrix market: missing %%MatrixMarket banner");
  object = detail::lowercase(object);
  format = detail::lowercase(format);
  field = detail::lowercase(field);
  symmetry = detail::lowercase(symmetry);
  if (object != "matrix" || format != "coordinate")
    throw FormatError("matrix market: only 'matrix coordinate' is supported");
  if (field != "real" && field != "double" && field != "integer")
    throw FormatError("matrix market: unsupported field '" + field + "'");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw FormatError("matrix market: unsupported symmetry '" + symmetry + "'");

  do {
    if (!std::getline(in, line)) throw FormatError("matrix market: missing size line");
  } while (detail::is_comment_or_blank(line));
  Index nrows = 0, ncols = 0, nentries = 0;
  {
    std::istringstream size_line(line);
    if (!(size_line >> nrows >> ncols >> nentries)) throw FormatError("matrix market: malformed size line");
  }
  if (symmetric && nrows != ncols) throw FormatError("matrix market: symmetric matrix must be square");

  std::vector<Triplet> entries;
  entries.reserve(symmetric ? 2 * nentries : nentries);
  Index read = 0;
  while (read < nentries && std::getline(in, line)) {
    if (detail::is_comment_or_blank(line)) continue;
    std::istringstream entry(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(entry >> i >> j >> v)) throw FormatError("matrix market: malformed entry line '" + line + "'");
    if (i < 1 || j < 1 || static_cast<Index>(i) > nrows || static_cast<Index>(j) > ncols)
      throw FormatError("matrix market: index out of range in line '" + line + "'");
    const Index r = static_cast<Index>(i - 1);
    const Index c = static_cast<Index>(j - 1);
    entries.push_back({r, c, v});
    if (symmetric && r != c) entries.push_back({c, r, v});
    ++read;
  }
  if (read != nentries) throw FormatError("matrix market: fewer entries than declared");
  try {
    return CsrMatrix::from_triplets(nrows, ncols, std::move(entries), DuplicatePolicy::Reject, true);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("matrix market: ") + e.what());
  }
}

[[nodiscard]] inline CsrMatrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return read_matrix_market(in);
}

/// Writes general coordinate format with 17 significant digits, which
/// round-trips every double exactly.
inline void write_matrix_market(const CsrMatrix& a, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.nrows() << ' ' << a.ncols() << ' ' << a.nnz() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < a.nrows(); ++i) {
    const auto r = a.row(i);
    for (Index k = 0; k < r.cols.size(); ++k) out << i + 1 << ' ' << r.cols[k] + 1 << ' ' << r.vals[k] << '\n';
  }
}

inline void write_matrix_market(const CsrMatrix& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  write_matrix_market(a, out);
}

/// One value per line; '%' lines are comments.
[[nodiscard]] inline std::vector<double> read_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::is_comment_or_blank(line)) continue;
    std::istringstream s(line);
    double x = 0.0;
    if (!(s >> x)) throw FormatError("vector file: malformed line '" + line + "'");
    v.push_back(x);
  }
  return v;
}

inline void write_vector(std::span<const double> v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double x : v) out << x << '\n';
}

}  // namespace msp
