#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "pod/trace.hpp"

namespace pod {

/// Color classes for the chart. Categories map onto three classes:
/// advection (A), comm-wait (C, W and uncovered lane background) and
/// overhead (I, BO, EO).
struct GanttStyle {
  int width = 1000;
  int lane_height = 16;
  int lane_gap = 4;
  int margin_left = 70;
  int margin_top = 30;
  int margin_bottom = 40;
  int margin_right = 20;
  std::map<std::string, std::string> colors = {
      {"advection", "#2b6cb0"},
      {"comm-wait", "#ffffff"},
      {"overhead", "#f2a0bd"},
  };
};

/// Which color class a category renders as.
const char* gantt_class(Category c);

/// Deterministic SVG: one horizontal lane per rank, rectangle x-extents
/// proportional to interval durations, time axis in trace units.
std::string render_gantt_svg(const RunTrace& trace, const GanttStyle& style = {});

void write_gantt_svg(const RunTrace& trace, const std::filesystem::path& path,
                     const GanttStyle& style = {});

}  // namespace pod
