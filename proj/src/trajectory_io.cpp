#include "swingup/trajectory_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace swingup {

CsvError::CsvError(std::size_t row, std::size_t column, const std::string& what)
    : std::runtime_error("row " + std::to_string(row) +
                         (column ? ", column " + std::to_string(column) : std::string()) + ": " +
                         what),
      row_(row),
      column_(column) {}

namespace {

void append_value(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out(kTrajectoryCsvHeader);
  out += '\n';
  for (const auto& x : traj.samples) {
    const std::array<double, 9> row = {x.t,          x.state.theta1, x.state.theta2,
                                       x.state.omega1, x.state.omega2, x.torque.tau1,
                                       x.torque.tau2, x.action,       x.reward};
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_value(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << trajectory_to_csv(traj);
}

Trajectory parse_trajectory_csv(std::string_view text) {
  if (text.empty()) throw CsvError(1, 0, "file is empty");
  Trajectory traj;
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++row;
    if (row == 1) {
      if (line != kTrajectoryCsvHeader)
        throw CsvError(1, 0, "expected header '" + std::string(kTrajectoryCsvHeader) + "'");
      continue;
    }
    if (line.empty()) {
      if (pos >= text.size()) break;
      throw CsvError(row, 0, "blank line");
    }
    std::array<double, 9> v{};
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto field = line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                             : comma - start);
      if (col >= v.size()) throw CsvError(row, col + 1, "too many columns (expected 9)");
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[col]);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        throw CsvError(row, col + 1, "'" + std::string(field) + "' is not a number");
      if (!std::isfinite(v[col])) throw CsvError(row, col + 1, "value is not finite");
      ++col;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (col != v.size())
      throw CsvError(row, col, "expected 9 columns, found " + std::to_string(col));
    if (!traj.samples.empty() && !(v[0] > traj.samples.back().t))
      throw CsvError(row, 1, "time is not strictly increasing");
    traj.samples.push_back({v[0], {v[1], v[2], v[3], v[4]}, {v[5], v[6]}, v[7], v[8]});
  }
  if (traj.samples.empty()) throw CsvError(row, 0, "no data rows");
  if (traj.samples.size() > 1) traj.dt = traj.samples[1].t - traj.samples[0].t;
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trajectory '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trajectory_csv(buf.str());
}

}  // namespace swingup
