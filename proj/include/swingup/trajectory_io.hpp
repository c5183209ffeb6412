#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "swingup/scoring.hpp"

namespace swingup {

inline constexpr std::string_view kTrajectoryCsvHeader =
    "t,theta1,theta2,omega1,omega2,tau1,tau2,action,reward";

/// Malformed trajectory CSV; carries the 1-based row and column of the fault
/// (column 0 when the whole row is at fault).
class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t row, std::size_t column, const std::string& what);
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_, column_;
};

/// One row per sample, every value printed with 17 significant digits.
std::string trajectory_to_csv(const Trajectory& traj);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

/// Restores samples and dt (from the first two rows); the plant is not stored.
Trajectory parse_trajectory_csv(std::string_view text);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace swingup
