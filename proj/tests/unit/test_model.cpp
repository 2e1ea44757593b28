#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tas/errors.hpp"
#include "tas/losses.hpp"
#include "tas/model.hpp"

using namespace tas;
using namespace tas::model;

namespace {

ModelConfig toy() {
  ModelConfig c;
  c.enc_layers = 2;
  c.window = 5;
  return c;
}

void check_rows_stochastic(const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
}

}  // namespace

TEST_CASE("config validation and key-value round trip") {
  ModelConfig c = toy();
  c.ca_smoothing_kernel = 7;
  c.tau_prime = 0.125;
  CHECK(ModelConfig::from_map(c.to_map()).to_map() == c.to_map());

  auto bad = [](auto mutate) {
    ModelConfig b;
    mutate(b);
    return b;
  };
  CHECK_THROWS_AS(bad([](ModelConfig& b) { b.window = 4; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](ModelConfig& b) { b.heads = 2; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](ModelConfig& b) { b.tau_infer = 0.0; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](ModelConfig& b) { b.ca_smoothing_kernel = 4; }).validate(), InvalidArgument);
  CHECK_THROWS_AS(bad([](ModelConfig& b) { b.feature_drop = 1.0; }).validate(), InvalidArgument);

  const ModelConfig p = ModelConfig::benchmark_defaults();
  CHECK(p.input_dim == 2048);
  CHECK(p.d_model == 64);
  CHECK(p.enc_layers == 10);
  CHECK(p.dec_layers == 2);
  CHECK(p.align_layers == 1);
  CHECK(p.heads == 1);
  CHECK(p.ffn_dim == 2048);
  CHECK(p.tau_prime == 0.001);
  CHECK(p.tau_train == 1.0);
  CHECK(p.tau_infer == 0.0001);
}

TEST_CASE("positional encoding") {
  const Matrix pe = positional_encoding(5, 4);
  CHECK(pe(0, 0) == 0.0);
  CHECK(pe(0, 1) == 1.0);
  CHECK(pe(3, 0) == doctest::Approx(std::sin(3.0)));
  CHECK(pe(3, 1) == doctest::Approx(std::cos(3.0)));
  CHECK(pe(3, 2) == doctest::Approx(std::sin(3.0 / 100.0)));
}

TEST_CASE("output shapes and stochastic attention") {
  const Model m(toy(), 7);
  Rng rng(1);
  for (int T : {1, 2, 9, 33}) {
    const Matrix x = oracle::random_matrix(rng, static_cast<std::size_t>(T), 16);
    const EncoderOutput e = m.encode(x);
    CHECK(e.features.rows() == static_cast<std::size_t>(T));
    CHECK(e.features.cols() == 16);
    CHECK(e.frame_logits.cols() == 4);
    for (std::size_t N : {1u, 3u, 6u}) {
      std::vector<ClassId> segs;
      for (std::size_t i = 0; i < N; ++i) segs.push_back(static_cast<ClassId>(i % 4));
      const DecoderOutput d = m.decode(e.features, segs);
      CHECK(d.features.rows() == N);
      CHECK(d.segment_logits.rows() == N + 1);
      CHECK(d.segment_logits.cols() == 5);
      CHECK(d.cross_attention.rows() == static_cast<std::size_t>(T));
      CHECK(d.cross_attention.cols() == N);
      check_rows_stochastic(d.cross_attention);
      const AlignmentOutput a = m.align(e.features, d.features, 1.0);
      CHECK(a.aligned.rows() == static_cast<std::size_t>(T));
      CHECK(a.assignment.cols() == N);
      check_rows_stochastic(a.assignment);
      double total = 0.0;
      for (double u : losses::durations_from_assignment(a.assignment)) total += u;
      CHECK(std::abs(total - T) <= 1e-9);
    }
  }
  CHECK_THROWS_AS(m.encode(Matrix(3, 15)), InvalidArgument);
  CHECK_THROWS_AS(m.align(Matrix(3, 16), Matrix(0, 16), 1.0), InvalidArgument);
}

TEST_CASE("smoothed cross-attention stays row-stochastic") {
  ModelConfig c = toy();
  c.ca_smoothing_kernel = 31;
  const Model m(c, 3);
  Rng rng(2);
  const Matrix x = oracle::random_matrix(rng, 40, 16);
  const DecoderOutput d = m.decode(m.encode(x).features, std::vector<ClassId>{0, 1, 2, 1});
  check_rows_stochastic(d.cross_attention);
}

TEST_CASE("a single segment gets the all-ones assignment") {
  const Model m(toy(), 5);
  Rng rng(3);
  const Matrix e = m.encode(oracle::random_matrix(rng, 12, 16)).features;
  const Matrix d = m.decode(e, std::vector<ClassId>{2}).features;
  for (double tau : {1.0, 1e-4}) {
    const AlignmentOutput a = m.align(e, d, tau);
    for (double v : a.assignment.data()) CHECK(v == 1.0);
  }
}

TEST_CASE("small temperature makes assignment rows one-hot") {
  const Model m(toy(), 5);
  Rng rng(4);
  const Matrix e = m.encode(oracle::random_matrix(rng, 20, 16)).features;
  const Matrix d = m.decode(e, std::vector<ClassId>{0, 1, 3}).features;
  const AlignmentOutput warm = m.align(e, d, 1.0);
  const AlignmentOutput cold = m.align(e, d, 1e-6);
  for (std::size_t t = 0; t < 20; ++t) {
    const std::size_t k = argmax(warm.assignment.row(t));
    CHECK(cold.assignment(t, k) > 0.999);
  }
}

TEST_CASE("head row permutation permutes frame logits") {
  Model m(toy(), 9);
  Rng rng(5);
  const Matrix x = oracle::random_matrix(rng, 10, 16);
  const Matrix before = m.encode(x).frame_logits;
  Matrix& W = m.params().at("enc.head.W").value;
  Matrix& b = m.params().at("enc.head.b").value;
  for (std::size_t r = 0; r < W.rows(); ++r) std::swap(W(r, 0), W(r, 2));
  std::swap(b(0, 0), b(0, 2));
  const Matrix after = m.encode(x).frame_logits;
  for (std::size_t t = 0; t < 10; ++t) {
    CHECK(after(t, 0) == before(t, 2));
    CHECK(after(t, 2) == before(t, 0));
    CHECK(after(t, 1) == before(t, 1));
  }
}

TEST_CASE("decoder determinism, causality and step equivalence") {
  const Model m(toy(), 11);
  Rng rng(6);
  const Matrix e = m.encode(oracle::random_matrix(rng, 15, 16)).features;
  const std::vector<ClassId> segs{3, 0, 2, 1, 0};
  const DecoderOutput full = m.decode(e, segs);

  std::vector<int> prefix{m.sos_token()};
  for (std::size_t i = 0; i <= segs.size(); ++i) {
    const DecodeStep a = m.decode_step(e, prefix);
    const DecodeStep b = m.decode_step(e, prefix);
    CHECK(a.logits == b.logits);
    for (std::size_t c = 0; c < a.logits.size(); ++c) {
      CHECK(a.logits[c] == doctest::Approx(full.segment_logits(i, c)).epsilon(1e-12));
    }
    CHECK(a.cross_attention.rows() == prefix.size() - 1);
    if (i < segs.size()) prefix.push_back(segs[i]);
  }

  // Logits of earlier positions ignore later tokens.
  const DecoderOutput other = m.decode(e, std::vector<ClassId>{3, 0, 1, 1, 3});
  for (std::size_t i = 0; i <= 2; ++i)
    for (std::size_t c = 0; c < 5; ++c) CHECK(other.segment_logits(i, c) == full.segment_logits(i, c));
}

TEST_CASE("greedy decoding is non-empty and capped") {
  ModelConfig c = toy();
  c.max_decode_len = 4;
  Model m(c, 13);
  // Force EOS to win at every step.
  Matrix& b = m.params().at("dec.head.b").value;
  b(0, 4) = 1e6;
  Rng rng(7);
  const Matrix e = m.encode(oracle::random_matrix(rng, 8, 16)).features;
  CHECK(m.greedy_decode(e).size() == 1);

  b(0, 4) = -1e6;
  b(0, 1) = 1e6;
  const std::vector<ClassId> out = m.greedy_decode(e);
  CHECK(out.size() == 3);
  std::vector<int> long_prefix{m.sos_token(), 1, 1, 1, 1};
  CHECK_THROWS_AS(m.decode_step(e, long_prefix), DecodeOverflow);
  std::vector<int> no_sos{1};
  CHECK_THROWS_AS(m.decode_step(e, no_sos), InvalidArgument);
}

TEST_CASE("single frame input") {
  const Model m(toy(), 17);
  const Matrix x(1, 16, 0.5);
  const EncoderOutput e = m.encode(x);
  CHECK(e.features.rows() == 1);
  const DecoderOutput d = m.decode(e.features, std::vector<ClassId>{1});
  CHECK(d.cross_attention(0, 0) == 1.0);
}

TEST_CASE("encoder frame loss gradient on sampled parameters") {
  const Model base(toy(), 19);
  Rng rng(8);
  const Matrix x = oracle::random_matrix(rng, 12, 16);
  std::vector<int> labels(12);
  for (int& l : labels) l = rng.uniform_int(0, 3);
  const FrameLabeling gt(labels);

  Model m = base;
  nn::Graph g;
  const EncoderVars ev = m.build_encoder(g, x, {});
  g.backward(g.loss(ev.frame_logits, [&](const Matrix& z) { return losses::frame_ce(z, gt); }));

  auto value = [&] {
    return losses::frame_ce(m.encode(x).frame_logits, gt).value;
  };
  int checked = 0;
  for (nn::Parameter& p : m.params().all()) {
    if (p.name.rfind("enc.", 0) != 0) continue;
    const Matrix* grad = g.param_grad(p);
    REQUIRE(grad != nullptr);
    // Roughly one percent of each tensor, at least one entry.
    const std::size_t n = std::max<std::size_t>(1, p.value.size() / 100);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(p.value.size()) - 1));
      const auto num = oracle::numeric_gradient(value, {&p.value.data()[i]}, 1e-4);
      CHECK(oracle::relative_error(grad->data()[i], num[0]) <= 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 20);
}
