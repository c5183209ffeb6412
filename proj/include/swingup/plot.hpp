#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "swingup/scoring.hpp"

namespace swingup {

inline constexpr int kTrajectoryPlotWidth = 960;
inline constexpr int kTrajectoryPlotHeight = 780;
inline constexpr int kRobustnessPlotWidth = 960;
inline constexpr int kRobustnessPlotHeight = 420;

/// Three stacked panels (joint angles, joint velocities, joint torques) against time.
std::string render_trajectory_svg(const Trajectory& traj, const std::string& title);

/// Grouped bars: one group per perturbation sweep, one bar per magnitude.
std::string render_robustness_svg(const std::vector<CategoryCurve>& curves, const std::string& title);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace swingup
