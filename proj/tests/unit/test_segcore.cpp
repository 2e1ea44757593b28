#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "tas/errors.hpp"
#include "tas/segcore.hpp"

using namespace tas;

namespace {

constexpr ClassId A = 0, B = 1, C = 2;

Segmentation segs(std::vector<Segment> s) { return Segmentation(std::move(s)); }

}  // namespace

TEST_CASE("to_segments run-length encodes") {
  CHECK(to_segments(FrameLabeling({A, A, B, B, B, A})) == segs({{A, 2}, {B, 3}, {A, 1}}));
  CHECK(to_segments(FrameLabeling({A})) == segs({{A, 1}}));
}

TEST_CASE("to_frames expands") {
  CHECK(to_frames(segs({{A, 2}, {B, 1}})) == FrameLabeling({A, A, B}));
  CHECK(to_frames(segs({{A, 1}})) == FrameLabeling({A}));
}

TEST_CASE("constructors reject malformed values") {
  CHECK_THROWS_AS(FrameLabeling({}), InvalidArgument);
  CHECK_THROWS_AS(FrameLabeling({0, -1}), InvalidArgument);
  CHECK_THROWS_AS(segs({}), InvalidArgument);
  CHECK_THROWS_AS(segs({{A, 0}}), InvalidArgument);
  CHECK_THROWS_AS(Transcript({}), InvalidArgument);
  CHECK_THROWS_AS(FrameLabeling({0, 3}).check_classes(3), InvalidArgument);
}

TEST_CASE("merge_repeats sums adjacent durations and is idempotent") {
  const Segmentation s = segs({{A, 1}, {B, 2}, {B, 3}, {C, 1}, {A, 2}});
  const Segmentation m = merge_repeats(s);
  CHECK(m == segs({{A, 1}, {B, 5}, {C, 1}, {A, 2}}));
  CHECK(merge_repeats(m) == m);
  CHECK(merge_repeats(Transcript({A, A, B, A, A, A})) == Transcript({A, B, A}));
  CHECK(transcript_of(s) == Transcript({A, B, C, A}));
  CHECK(actions_of(s) == std::vector<ClassId>{A, B, B, C, A});
}

TEST_CASE("split_segments") {
  SUBCASE("forced even split") {
    CHECK(split_segments(segs({{A, 10}}), 0.5) == segs({{A, 5}, {A, 5}}));
  }
  SUBCASE("short segments unchanged") {
    const Segmentation s = segs({{A, 3}, {B, 4}, {C, 3}});
    CHECK(split_segments(s, 0.5) == s);
  }
  SUBCASE("uneven pieces put the longer ones first") {
    // limit = ceil(0.17 * 20) = 4 -> 17 frames become 5 pieces of 4,4,3,3,3
    const Segmentation s = split_segments(segs({{A, 17}, {B, 3}}), 0.17);
    CHECK(s == segs({{A, 4}, {A, 4}, {A, 3}, {A, 3}, {A, 3}, {B, 3}}));
  }
  CHECK(split_limit(0.17, 100) == 17);
  CHECK(split_limit(0.001, 10) == 1);
  CHECK_THROWS_AS(split_segments(segs({{A, 1}}), 0.0), InvalidArgument);
}

TEST_CASE("round_durations sums to the total with largest remainders") {
  const std::vector<double> u{1.5, 1.5, 1.0};
  const std::vector<int> r = round_durations(u, 4);
  CHECK(r == std::vector<int>{2, 1, 1});
  const std::vector<double> scaled{1.0, 1.0};
  CHECK(round_durations(scaled, 10) == std::vector<int>{5, 5});
  CHECK_THROWS_AS(round_durations(std::vector<double>{-1.0}, 3), InvalidArgument);
}

TEST_CASE("frame_to_segment and starts") {
  const Segmentation s = segs({{A, 2}, {B, 1}, {A, 3}});
  CHECK(s.starts() == std::vector<int>{0, 2, 3});
  CHECK(frame_to_segment(s) == std::vector<int>{0, 0, 1, 2, 2, 2});
}

TEST_CASE("catalog lookups") {
  ClassCatalog cat({"pour", "stir", "SIL"}, 2);
  CHECK(cat.id("stir") == 1);
  CHECK(cat.name(0) == "pour");
  CHECK(cat.background() == 2);
  CHECK_FALSE(cat.find("cut").has_value());
  CHECK_THROWS_AS(cat.id("cut"), InvalidArgument);
  CHECK_THROWS_AS(ClassCatalog({"a", "a"}), InvalidArgument);
}

TEST_CASE("random round trips") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    std::vector<ClassId> frames(static_cast<std::size_t>(rng.uniform_int(1, 1000)));
    ClassId cur = 0;
    for (ClassId& f : frames) {
      if (rng.bernoulli(0.05)) cur = rng.uniform_int(0, 4);
      f = cur;
    }
    const FrameLabeling x(frames);
    CHECK(to_frames(to_segments(x)) == x);

    const Segmentation s = oracle::random_segmentation(rng, rng.uniform_int(1, 12), 30, 3, false);
    CHECK(to_segments(to_frames(s)) == merge_repeats(s));
    const double f = rng.uniform(0.01, 1.0);
    const Segmentation sp = split_segments(s, f);
    CHECK(sp.total_frames() == s.total_frames());
    CHECK(merge_repeats(sp) == merge_repeats(s));
  }
}
