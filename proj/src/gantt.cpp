#include "pod/gantt.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pod {

const char* gantt_class(Category c) {
  switch (c) {
    case Category::A:
      return "advection";
    case Category::C:
    case Category::W:
      return "comm-wait";
    case Category::I:
    case Category::BO:
    case Category::EO:
      return "overhead";
  }
  return "overhead";
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string render_gantt_svg(const RunTrace& trace, const GanttStyle& style) {
  if (trace.num_ranks <= 0) throw std::invalid_argument("trace has no ranks");
  const int plot_w = style.width - style.margin_left - style.margin_right;
  const int lane_pitch = style.lane_height + style.lane_gap;
  const int plot_h = trace.num_ranks * lane_pitch;
  const int height = style.margin_top + plot_h + style.margin_bottom;
  const double span = trace.total_time > 0.0 ? trace.total_time : 1.0;
  const auto x_of = [&](double t) {
    return style.margin_left + plot_w * (t / span);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << style.width << ' ' << height
      << "\">\n";
  svg << "<!-- config_hash=" << trace.config_hash << " -->\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << height
      << "\" fill=\"#fafafa\"/>\n";

  for (int r = 0; r < trace.num_ranks; ++r) {
    const int y = style.margin_top + r * lane_pitch;
    // Lane background renders as comm-wait so idle tails read as waiting.
    svg << "<rect class=\"lane comm-wait\" x=\"" << style.margin_left << "\" y=\"" << y
        << "\" width=\"" << plot_w << "\" height=\"" << style.lane_height
        << "\" fill=\"" << style.colors.at("comm-wait")
        << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
    svg << "<text x=\"" << style.margin_left - 6 << "\" y=\""
        << y + style.lane_height - 4 << "\" font-size=\"10\" text-anchor=\"end\">rank "
        << r << "</text>\n";
    for (const auto& e : trace.rank_events[r]) {
      const double x0 = x_of(e.t_start);
      const double x1 = x_of(e.t_end);
      const char* cls = gantt_class(e.category);
      svg << "<rect class=\"" << cls << "\" x=\"" << fmt(x0) << "\" y=\"" << y
          << "\" width=\"" << fmt(x1 - x0) << "\" height=\"" << style.lane_height
          << "\" fill=\"" << style.colors.at(cls) << "\"/>\n";
    }
  }

  // Time axis: 5 labeled ticks in trace units.
  const int axis_y = style.margin_top + plot_h + 12;
  svg << "<line x1=\"" << style.margin_left << "\" y1=\"" << axis_y - 8 << "\" x2=\""
      << style.margin_left + plot_w << "\" y2=\"" << axis_y - 8
      << "\" stroke=\"#444444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = span * i / 4.0;
    const double x = x_of(t);
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << axis_y - 8 << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << axis_y - 4 << "\" stroke=\"#444444\"/>\n";
    svg << "<text x=\"" << fmt(x) << "\" y=\"" << axis_y + 8
        << "\" font-size=\"10\" text-anchor=\"middle\">" << fmt_tick(trace.total_time * i / 4.0)
        << "</text>\n";
  }
  svg << "<text x=\"" << style.margin_left + plot_w / 2 << "\" y=\"" << axis_y + 24
      << "\" font-size=\"11\" text-anchor=\"middle\">time [" << trace.time_unit
      << "]</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_gantt_svg(const RunTrace& trace, const std::filesystem::path& path,
                     const GanttStyle& style) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render_gantt_svg(trace, style);
}

}  // namespace pod
