#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dmdsi/trajectory.hpp"

namespace dmdsi {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

inline double parse_double(std::string_view field, const std::string& where) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw CsvError("not a number: '" + std::string(field) + "' in " + where);
  }
  return value;
}

}  // namespace detail

/// One row per time step: first column the time i*h, then the state
/// coordinates; header "t,x1,...,xn". Doubles are printed with %.17g, so
/// output is byte-identical across runs.
inline void write_trajectory_csv(std::ostream& os,
                                 const TrajectoryData& data) {
  os << 't';
  for (Index j = 1; j <= data.dimension(); ++j) {
    os << ",x" << j;
  }
  os << '\n';
  for (std::size_t i = 0; i < data.snapshots.size(); ++i) {
    os << detail::format_double(static_cast<double>(i) * data.step);
    const Vector& x = data.snapshots[i];
    for (Index j = 0; j < x.size(); ++j) {
      os << ',' << detail::format_double(x(j));
    }
    os << '\n';
  }
}

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const TrajectoryData& data) {
  std::ofstream os(path);
  if (!os) {
    throw CsvError("cannot open '" + path.string() + "' for writing");
  }
  write_trajectory_csv(os, data);
  if (!os) {
    throw CsvError("failed writing '" + path.string() + "'");
  }
}

/// Reads a trajectory CSV (header row, time in the first column). The time
/// column must be uniformly spaced; its spacing becomes the step size.
inline TrajectoryData read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw CsvError("cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(is, line)) {
    throw CsvError("empty file '" + path.string() + "'");
  }
  const auto header = detail::split_fields(line);
  if (header.size() < 2 || header.front() != "t") {
    throw CsvError("expected header 't,x1,...' in '" + path.string() + "'");
  }
  const std::size_t columns = header.size();

  std::vector<double> times;
  std::vector<Vector> snaps;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto fields = detail::split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(row);
    if (fields.size() != columns) {
      throw CsvError("expected " + std::to_string(columns) + " fields in " +
                     where);
    }
    times.push_back(detail::parse_double(fields[0], where));
    Vector x(static_cast<Index>(columns - 1));
    for (std::size_t j = 1; j < columns; ++j) {
      x(static_cast<Index>(j - 1)) = detail::parse_double(fields[j], where);
    }
    snaps.push_back(std::move(x));
  }
  if (snaps.size() < 2) {
    throw CsvError("need at least two snapshot rows in '" + path.string() +
                   "'");
  }
  const double h = times[1] - times[0];
  if (!(h > 0.0)) {
    throw CsvError("time column must be strictly increasing in '" +
                   path.string() + "'");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expected = times[0] + static_cast<double>(i) * h;
    if (std::abs(times[i] - expected) >
        1e-9 * std::max(1.0, std::abs(expected))) {
      throw CsvError("time column is not uniformly spaced in '" +
                     path.string() + "' (row " + std::to_string(i + 2) + ")");
    }
  }
  try {
    return TrajectoryData(std::move(snaps), h, path.filename().string());
  } catch (const std::invalid_argument& e) {
    throw CsvError(std::string(e.what()) + " in '" + path.string() + "'");
  }
}

/// Reads a plain numeric CSV (no header), one matrix row per line.
inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw CsvError("cannot open '" + path.string() + "'");
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto fields = detail::split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(row);
    std::vector<double> values;
    values.reserve(fields.size());
    for (const auto f : fields) {
      values.push_back(detail::parse_double(f, where));
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw CsvError("ragged rows in '" + path.string() + "' (row " +
                     std::to_string(row) + ")");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) {
    throw CsvError("no data in '" + path.string() + "'");
  }
  Matrix out(static_cast<Index>(rows.size()),
             static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  require_finite(out, "matrix CSV");
  return out;
}

}  // namespace dmdsi
