#include <doctest.h>

#include "oracles.hpp"
#include "tas/errors.hpp"
#include "tas/inference.hpp"

using namespace tas;
using namespace tas::inference;

namespace {

model::ModelConfig toy() {
  model::ModelConfig c;
  c.enc_layers = 2;
  c.window = 7;
  c.max_decode_len = 6;
  return c;
}

}  // namespace

TEST_CASE("mode names") {
  CHECK(parse_duration_mode("none") == DurationMode::kNone);
  CHECK(parse_duration_mode("alignment") == DurationMode::kAlignment);
  CHECK(parse_duration_mode("viterbi") == DurationMode::kViterbi);
  CHECK(parse_duration_mode("fifa") == DurationMode::kFifa);
  CHECK_THROWS_AS(parse_duration_mode("beam"), InvalidArgument);
}

TEST_CASE("the transcript does not depend on the duration mode") {
  Rng rng(1);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const model::Model m(toy(), seed);
    const Matrix x = oracle::random_matrix(rng, 30, 16);
    Options opt;
    opt.fifa.epochs = 200;
    opt.mode = DurationMode::kNone;
    const Result none = infer_video(m, x, opt);
    CHECK_FALSE(none.segmentation.has_value());
    CHECK(none.transcript == merge_repeats(none.transcript));
    for (DurationMode mode : {DurationMode::kAlignment, DurationMode::kViterbi, DurationMode::kFifa}) {
      opt.mode = mode;
      const Result r = infer_video(m, x, opt);
      CHECK(r.transcript == none.transcript);
      REQUIRE(r.segmentation.has_value());
      CHECK(r.segmentation->total_frames() == 30);
      CHECK(Transcript(actions_of(*r.segmentation)) == r.transcript);
    }
  }
}

TEST_CASE("viterbi mode maximises the frame score of the encoder log-probabilities") {
  Rng rng(2);
  const model::Model m(toy(), 3);
  const Matrix x = oracle::random_matrix(rng, 10, 16);
  Options opt;
  opt.mode = DurationMode::kViterbi;
  const Result r = infer_video(m, x, opt);
  const Matrix lp = log_softmax_rows(m.encode(x).frame_logits);
  if (r.transcript.size() <= 10) {
    CHECK(align::score(lp, *r.segmentation) ==
          doctest::Approx(oracle::best_alignment_score(lp, r.transcript.actions())).epsilon(1e-12));
  }
}

TEST_CASE("a one-segment transcript yields the trivial segmentation in every mode") {
  model::Model m(toy(), 4);
  // Make the decoder emit class 2 and then EOS.
  Matrix& b = m.params().at("dec.head.b").value;
  b(0, 2) = 1e6;
  Rng rng(3);
  const Matrix x = oracle::random_matrix(rng, 12, 16);
  for (DurationMode mode : {DurationMode::kAlignment, DurationMode::kViterbi, DurationMode::kFifa}) {
    Options opt;
    opt.mode = mode;
    const Result r = infer_video(m, x, opt);
    CHECK(r.transcript == Transcript({2}));
    CHECK(*r.segmentation == Segmentation({{2, 12}}));
  }
}

TEST_CASE("merged alignment durations sum repeated tokens") {
  const model::Model m(toy(), 5);
  Rng rng(4);
  const Matrix x = oracle::random_matrix(rng, 20, 16);
  const Matrix e = m.encode(x).features;
  const std::vector<ClassId> decoded{1, 1, 3, 0, 0};
  const std::vector<double> merged = merged_alignment_durations(m, e, decoded);
  REQUIRE(merged.size() == 3);
  const auto dec = m.decode(e, decoded);
  const auto al = m.align(e, dec.features, m.config().tau_infer);
  const auto u = losses::durations_from_assignment(al.assignment);
  CHECK(merged[0] == doctest::Approx(u[0] + u[1]));
  CHECK(merged[1] == doctest::Approx(u[2]));
  CHECK(merged[2] == doctest::Approx(u[3] + u[4]));
  CHECK(merged[0] + merged[1] + merged[2] == doctest::Approx(20.0));
}
