#include <doctest.h>

#include <cmath>
#include <regex>

#include "oracles.hpp"
#include "tas/plot.hpp"

using namespace tas;
using namespace tas::plot;

namespace {

const ClassCatalog kCatalog({"a", "b", "c<d"});

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (std::size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

std::vector<std::string> bar_rects(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re("<rect x=\"[0-9]+\" y=\"([0-9]+)\" width=\"[0-9]+\" height=\"24\"[^>]*>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    std::string r = it->str();
    out.push_back(std::regex_replace(r, std::regex(" y=\"[0-9]+\""), ""));
  }
  return out;
}

}  // namespace

TEST_CASE("a single segment is one full-width rectangle") {
  const auto rects = layout(Segmentation({{1, 37}}));
  REQUIRE(rects.size() == 1);
  CHECK(rects[0].x == 0);
  CHECK(rects[0].width == kBarWidth);
  const std::string svg = render_svg({{"gt", Segmentation({{1, 37}})}}, kCatalog);
  CHECK(bar_rects(svg).size() == 1);
}

TEST_CASE("widths are within a pixel of the exact proportion") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const Segmentation s = oracle::random_segmentation(rng, rng.uniform_int(1, 40), 97, 3, false);
    const auto rects = layout(s);
    int x = 0;
    for (std::size_t i = 0; i < rects.size(); ++i) {
      const double exact = static_cast<double>(s[i].duration) * kBarWidth / s.total_frames();
      CHECK(std::abs(rects[i].width - exact) <= 1.0);
      CHECK(rects[i].x == x);
      x += rects[i].width;
    }
    CHECK(x == kBarWidth);
  }
}

TEST_CASE("identical inputs give identical rows") {
  const Segmentation s({{0, 3}, {2, 5}, {1, 2}});
  const std::string svg = render_svg({{"x", s}, {"y", s}}, kCatalog);
  const auto rects = bar_rects(svg);
  REQUIRE(rects.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rects[i] == rects[i + 3]);
  CHECK(count(svg, "c&lt;d") == 3);
  CHECK(svg.find("c<d") == std::string::npos);
}

TEST_CASE("colours are fixed per class and distinct for neighbours") {
  CHECK(class_color(3) == class_color(3));
  for (ClassId c = 0; c < 20; ++c) {
    CHECK(class_color(c).size() == 7);
    CHECK(class_color(c) != class_color(c + 1));
  }
}

TEST_CASE("legend lists each used class once") {
  const std::string svg = render_svg({{"p", Segmentation({{0, 3}, {1, 5}, {0, 2}})}}, kCatalog);
  CHECK(count(svg, ">a</text>") == 1);
  CHECK(count(svg, ">b</text>") == 1);
  CHECK(count(svg, ">c&lt;d</text>") == 0);
  CHECK_THROWS(render_svg({}, kCatalog));
}
