#pragma once

// CSV series. Doubles are written with 17 significant digits, which is
// enough for parse(emit(x)) == x bit for bit.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "heatlab/asymptotics.hpp"
#include "heatlab/decay.hpp"
#include "heatlab/error.hpp"

namespace heatlab {

inline constexpr const char* kReportSchema = "heatlab-report/1";
inline constexpr const char* kErrorSeriesHeader = "t,raw_error,renormalized_error,norm,attractor";
inline constexpr const char* kEntropySeriesHeader = "t,E,I,F,D";

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  require(res.ec == std::errc{} && res.ptr == s.data() + s.size(), ErrorKind::IoFailure,
          "not a number: '" + std::string(s) + "'");
  return x;
}

inline NormKind parse_norm(std::string_view name) {
  if (name == "sup") return kSup;
  if (name == "l1") return kL1;
  if (name == "l2") return kL2;
  if (name == "l1w") return WeightedL1{};
  if (name == "l2mu") return L2Gauss{};
  if (name == "l2invmu") return L2InvGauss{};
  if (name.size() > 1 && name[0] == 'l') {
    double p = 0.0;
    const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), p);
    if (res.ec == std::errc{} && res.ptr == name.data() + name.size() && p >= 1.0) return Lp{p};
  }
  fail(ErrorKind::InvalidArgument, "unknown norm '" + std::string(name) + "'");
}

namespace detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::vector<std::vector<std::string>> read_body(std::istream& in, std::size_t width) {
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    require(cells.size() == width, ErrorKind::IoFailure, "CSV row has " + std::to_string(cells.size()) + " cells");
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline std::vector<std::vector<std::string>> read_rows(std::istream& in, std::string_view header) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::IoFailure, "empty CSV");
  require(line == header, ErrorKind::IoFailure, "unexpected CSV header '" + line + "'");
  return read_body(in, split(header, ',').size());
}

inline void require_plain(const std::string& s) {
  require(s.find_first_of(",\n\r") == std::string::npos, ErrorKind::IoFailure,
          "label '" + s + "' cannot be written to CSV");
}

}  // namespace detail

inline void write_csv(std::ostream& out, const ErrorSeries& s) {
  require(s.raw.size() == s.times.size() && s.renormalized.size() == s.times.size(), ErrorKind::InvalidArgument,
          "error series columns differ in length");
  const std::string norm = norm_name(s.norm);
  detail::require_plain(s.attractor);
  out << kErrorSeriesHeader << '\n';
  for (std::size_t i = 0; i < s.times.size(); ++i)
    out << format_double(s.times[i]) << ',' << format_double(s.raw[i]) << ',' << format_double(s.renormalized[i])
        << ',' << norm << ',' << s.attractor << '\n';
}

inline void write_csv(std::ostream& out, const EntropySeries& s) {
  const std::size_t n = s.times.size();
  require(s.E.size() == n && s.I.size() == n && s.F.size() == n && s.D.size() == n, ErrorKind::InvalidArgument,
          "entropy series columns differ in length");
  out << kEntropySeriesHeader << '\n';
  for (std::size_t i = 0; i < n; ++i)
    out << format_double(s.times[i]) << ',' << format_double(s.E[i]) << ',' << format_double(s.I[i]) << ','
        << format_double(s.F[i]) << ',' << format_double(s.D[i]) << '\n';
}

/// Inverse of write_csv for error series. Norm and attractor come from the
/// first row (an empty series keeps the defaults).
inline ErrorSeries read_error_series(std::istream& in) {
  ErrorSeries s;
  const auto rows = detail::read_rows(in, kErrorSeriesHeader);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    s.times.push_back(parse_double(r[0]));
    s.raw.push_back(parse_double(r[1]));
    s.renormalized.push_back(parse_double(r[2]));
    if (i == 0) {
      s.norm = parse_norm(r[3]);
      s.attractor = r[4];
    } else {
      require(r[3] == norm_name(s.norm) && r[4] == s.attractor, ErrorKind::IoFailure,
              "norm or attractor changes inside one series");
    }
  }
  return s;
}

inline EntropySeries read_entropy_series(std::istream& in) {
  EntropySeries s;
  for (const auto& r : detail::read_rows(in, kEntropySeriesHeader)) {
    s.times.push_back(parse_double(r[0]));
    s.E.push_back(parse_double(r[1]));
    s.I.push_back(parse_double(r[2]));
    s.F.push_back(parse_double(r[3]));
    s.D.push_back(parse_double(r[4]));
  }
  return s;
}

/// Free-form numeric table for experiments whose output is not a time series
/// of errors (moments, fronts, witness values...).
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    require(row.size() == columns.size(), ErrorKind::InvalidArgument, "row width differs from the header");
    rows.push_back(std::move(row));
  }
};

inline void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    detail::require_plain(t.columns[j]);
    out << (j ? "," : "") << t.columns[j];
  }
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
    out << '\n';
  }
}

inline Table read_table(std::istream& in) {
  std::string header;
  require(static_cast<bool>(std::getline(in, header)), ErrorKind::IoFailure, "empty CSV");
  Table t;
  t.columns = detail::split(header, ',');
  for (const auto& r : detail::read_body(in, t.columns.size())) {
    std::vector<double> row;
    for (const auto& c : r) row.push_back(parse_double(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

template <class Series>
std::string to_csv(const Series& s) {
  std::ostringstream os;
  write_csv(os, s);
  return os.str();
}

/// Writes the whole file or raises IoFailure.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.is_open(), ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::IoFailure, "write to " + path.string() + " failed");
}

}  // namespace heatlab
