#include "swingup/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

namespace swingup {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

/// "Nice" tick spacing covering [lo, hi] with about five intervals.
double tick_step(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

struct Series {
  std::string label;
  std::string color;
  std::function<double(const TrajectorySample&)> value;
};

void panel(std::string& svg, const Trajectory& traj, const std::vector<Series>& series, int top,
           int height, const std::string& ylabel, bool xlabels) {
  const int left = 80, right = kTrajectoryPlotWidth - 130;
  const int bottom = top + height;
  const double t0 = traj.samples.front().t;
  const double t1 = std::max(traj.samples.back().t, t0 + 1e-9);

  double lo = 0.0, hi = 0.0;
  for (const auto& s : series)
    for (const auto& x : traj.samples) {
      lo = std::min(lo, s.value(x));
      hi = std::max(hi, s.value(x));
    }
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double step = tick_step(lo, hi);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;

  const auto px = [&](double t) { return left + (t - t0) / (t1 - t0) * (right - left); };
  const auto py = [&](double v) { return bottom - (v - lo) / (hi - lo) * height; };

  svg += "<g class=\"panel\" data-ylabel=\"" + escape(ylabel) + "\">\n";
  svg += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(top) + "\" width=\"" +
         std::to_string(right - left) + "\" height=\"" + std::to_string(height) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (double v = lo; v <= hi + 1e-9 * step; v += step) {
    svg += "<line x1=\"" + std::to_string(left) + "\" x2=\"" + std::to_string(right) + "\" y1=\"" +
           num(py(v)) + "\" y2=\"" + num(py(v)) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + num(py(v) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(v) + "</text>\n";
  }
  const double tstep = tick_step(t0, t1);
  for (double t = std::ceil(t0 / tstep) * tstep; t <= t1 + 1e-9; t += tstep) {
    svg += "<line x1=\"" + num(px(t)) + "\" x2=\"" + num(px(t)) + "\" y1=\"" +
           std::to_string(top) + "\" y2=\"" + std::to_string(bottom) + "\" stroke=\"#eee\"/>\n";
    if (xlabels)
      svg += "<text x=\"" + num(px(t)) + "\" y=\"" + std::to_string(bottom + 16) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + tick_label(t) + "</text>\n";
  }
  svg += "<text class=\"ylabel\" x=\"18\" y=\"" + std::to_string(top + height / 2) +
         "\" font-size=\"13\" transform=\"rotate(-90 18 " + std::to_string(top + height / 2) +
         ")\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";

  const std::size_t stride = std::max<std::size_t>(1, traj.samples.size() / 1500);
  int legend_y = top + 14;
  for (const auto& s : series) {
    svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.4\" points=\"";
    for (std::size_t k = 0; k < traj.samples.size(); k += stride) {
      const auto& x = traj.samples[k];
      svg += num(px(x.t)) + "," + num(py(s.value(x))) + " ";
    }
    svg += "\"/>\n";
    svg += "<text x=\"" + std::to_string(right + 10) + "\" y=\"" + std::to_string(legend_y) +
           "\" font-size=\"12\" fill=\"" + s.color + "\">" + escape(s.label) + "</text>\n";
    legend_y += 16;
  }
  svg += "</g>\n";
}

std::string header(int width, int height, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\" font-family=\"sans-serif\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         "<text x=\"" + std::to_string(width / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + escape(title) + "</text>\n";
}

}  // namespace

std::string render_trajectory_svg(const Trajectory& traj, const std::string& title) {
  if (traj.samples.empty()) throw std::invalid_argument("cannot plot an empty trajectory");
  std::string svg = header(kTrajectoryPlotWidth, kTrajectoryPlotHeight, title);
  const int h = 200;
  panel(svg, traj,
        {{"theta1", "#1f77b4", [](const TrajectorySample& x) { return x.state.theta1; }},
         {"theta2", "#d62728", [](const TrajectorySample& x) { return x.state.theta2; }}},
        50, h, "angle [rad]", false);
  panel(svg, traj,
        {{"omega1", "#1f77b4", [](const TrajectorySample& x) { return x.state.omega1; }},
         {"omega2", "#d62728", [](const TrajectorySample& x) { return x.state.omega2; }}},
        290, h, "velocity [rad/s]", false);
  panel(svg, traj,
        {{"tau1", "#1f77b4", [](const TrajectorySample& x) { return x.torque.tau1; }},
         {"tau2", "#d62728", [](const TrajectorySample& x) { return x.torque.tau2; }}},
        530, h, "torque [N m]", true);
  svg += "<text class=\"xlabel\" x=\"" + std::to_string(kTrajectoryPlotWidth / 2) +
         "\" y=\"770\" text-anchor=\"middle\" font-size=\"13\">time [s]</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string render_robustness_svg(const std::vector<CategoryCurve>& curves, const std::string& title) {
  std::string svg = header(kRobustnessPlotWidth, kRobustnessPlotHeight, title);
  const int left = 70, right = kRobustnessPlotWidth - 20, top = 50, bottom = 330;
  const auto py = [&](double v) { return bottom - v * (bottom - top); };
  for (double v = 0.0; v <= 1.0 + 1e-9; v += 0.25) {
    svg += "<line x1=\"" + std::to_string(left) + "\" x2=\"" + std::to_string(right) + "\" y1=\"" +
           num(py(v)) + "\" y2=\"" + num(py(v)) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + num(py(v) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(v) + "</text>\n";
  }
  svg += "<text class=\"ylabel\" x=\"18\" y=\"190\" font-size=\"13\" transform=\"rotate(-90 18 190)\" "
         "text-anchor=\"middle\">pass rate</text>\n";
  if (!curves.empty()) {
    const double group = static_cast<double>(right - left) / static_cast<double>(curves.size());
    for (std::size_t c = 0; c < curves.size(); ++c) {
      const auto& curve = curves[c];
      const double x0 = left + group * static_cast<double>(c) + 0.1 * group;
      const double bw = 0.8 * group / static_cast<double>(std::max<std::size_t>(1, curve.points.size()));
      for (std::size_t m = 0; m < curve.points.size(); ++m) {
        const double rate = curve.points[m].pass_rate();
        const double x = x0 + bw * static_cast<double>(m);
        svg += "<rect class=\"bar\" x=\"" + num(x + 1) + "\" y=\"" + num(py(rate)) + "\" width=\"" +
               num(bw - 2) + "\" height=\"" + num(bottom - py(rate)) +
               "\" fill=\"#4c72b0\" fill-opacity=\"" + num(0.4 + 0.6 * (m + 1.0) / curve.points.size()) +
               "\"/>\n";
        svg += "<text x=\"" + num(x + bw / 2) + "\" y=\"" + std::to_string(bottom + 14) +
               "\" text-anchor=\"middle\" font-size=\"9\">" + tick_label(curve.points[m].magnitude) +
               "</text>\n";
      }
      std::string name(to_string(curve.category));
      if (curve.category == PerturbationCategory::ModelParamScale) name += " (" + curve.parameter + ")";
      svg += "<text x=\"" + num(x0 + 0.4 * group) + "\" y=\"" + std::to_string(bottom + 34) +
             "\" text-anchor=\"middle\" font-size=\"12\">" + escape(name) + "</text>\n";
      svg += "<text x=\"" + num(x0 + 0.4 * group) + "\" y=\"" + std::to_string(bottom + 52) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + num(curve.pass_fraction) + "</text>\n";
    }
  }
  svg += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(top) + "\" width=\"" +
         std::to_string(right - left) + "\" height=\"" + std::to_string(bottom - top) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg += "</svg>\n";
  return svg;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
}

}  // namespace swingup
