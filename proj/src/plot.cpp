#include "tas/plot.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "tas/errors.hpp"

namespace tas::plot {

std::vector<Rect> layout(const Segmentation& seg, int width) {
  if (width < 1) throw InvalidArgument("plot: width must be >= 1");
  const double T = seg.total_frames();
  std::vector<Rect> out;
  long start = 0;
  for (const Segment& s : seg.segments()) {
    const long end = start + s.duration;
    const int x0 = static_cast<int>(std::lround(static_cast<double>(start) * width / T));
    const int x1 = static_cast<int>(std::lround(static_cast<double>(end) * width / T));
    out.push_back({x0, x1 - x0, s.action});
    start = end;
  }
  return out;
}

std::string class_color(ClassId id) {
  // Hues spaced by the golden angle, fixed saturation and lightness.
  const double h = std::fmod(static_cast<double>(id) * 137.508, 360.0);
  const double s = 0.65, l = 0.55;
  const double c = (1.0 - std::fabs(2.0 * l - 1.0)) * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = l - c / 2.0;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround((r + m) * 255)),
                static_cast<int>(std::lround((g + m) * 255)), static_cast<int>(std::lround((b + m) * 255)));
  return buf;
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<Row>& rows, const ClassCatalog& catalog) {
  if (rows.empty()) throw InvalidArgument("plot: nothing to draw");
  constexpr int kLabelWidth = 160, kRowHeight = 24, kGap = 8, kMargin = 10, kLegendRow = 20;
  std::set<ClassId> used;
  for (const Row& r : rows)
    for (const Segment& s : r.seg.segments()) used.insert(s.action);

  const int bars_height = static_cast<int>(rows.size()) * (kRowHeight + kGap);
  const int legend_y = kMargin + bars_height + kGap;
  const int height = legend_y + static_cast<int>(used.size()) * kLegendRow + kMargin;
  const int width = kMargin + kLabelWidth + kBarWidth + kMargin;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int y = kMargin + static_cast<int>(i) * (kRowHeight + kGap);
    out += "<text x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(y + kRowHeight / 2 + 4) + "\">" +
           escape(rows[i].label) + "</text>\n";
    for (const Rect& r : layout(rows[i].seg)) {
      out += "<rect x=\"" + std::to_string(kMargin + kLabelWidth + r.x) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(r.width) + "\" height=\"" + std::to_string(kRowHeight) + "\" fill=\"" +
             class_color(r.action) + "\"><title>" + escape(catalog.name(r.action)) + "</title></rect>\n";
    }
  }
  int k = 0;
  for (ClassId c : used) {
    const int y = legend_y + k++ * kLegendRow;
    out += "<rect x=\"" + std::to_string(kMargin + kLabelWidth) + "\" y=\"" + std::to_string(y) +
           "\" width=\"14\" height=\"14\" fill=\"" + class_color(c) + "\"/>\n";
    out += "<text x=\"" + std::to_string(kMargin + kLabelWidth + 20) + "\" y=\"" + std::to_string(y + 11) + "\">" +
           escape(catalog.name(c)) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace tas::plot
