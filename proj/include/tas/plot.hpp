#pragma once

#include <string>
#include <vector>

#include "tas/segcore.hpp"

namespace tas::plot {

struct Row {
  std::string label;
  Segmentation seg;
};

struct Rect {
  int x = 0;
  int width = 0;
  ClassId action = 0;
};

inline constexpr int kBarWidth = 1000;

// Pixel spans of one bar: edges at round(start * width / T), so every
// rectangle is within one pixel of its exact proportional width.
std::vector<Rect> layout(const Segmentation& seg, int width = kBarWidth);

// "#rrggbb", fixed per class id.
std::string class_color(ClassId id);

// One horizontal bar per row plus a legend of the classes that appear.
std::string render_svg(const std::vector<Row>& rows, const ClassCatalog& catalog);

}  // namespace tas::plot
