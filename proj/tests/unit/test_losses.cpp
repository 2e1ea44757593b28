#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tas/errors.hpp"
#include "tas/losses.hpp"

using namespace tas;
using namespace tas::losses;

namespace {

double naive_ce(const Matrix& logits, const std::vector<int>& targets) {
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) z += std::exp(logits(r, c));
    total += -std::log(std::exp(logits(r, static_cast<std::size_t>(targets[r]))) / z);
  }
  return total / static_cast<double>(logits.rows());
}

double naive_group(const Matrix& logits, const std::vector<int>& labels, GroupVariant v) {
  const Matrix p = softmax_rows(logits);
  double total = 0.0;
  int groups = 0;
  for (int c = 0; c < static_cast<int>(logits.cols()); ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < labels.size(); ++r)
      if (labels[r] == c) rows.push_back(r);
    if (rows.empty()) continue;
    ++groups;
    if (v == GroupVariant::kAvgProbability) {
      double mean = 0.0;
      for (std::size_t r : rows) mean += p(r, static_cast<std::size_t>(c));
      total += -std::log(mean / static_cast<double>(rows.size()));
    } else {
      std::vector<double> z(logits.cols(), 0.0);
      for (std::size_t r : rows)
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += logits(r, k) / static_cast<double>(rows.size());
      double s = 0.0;
      for (double zk : z) s += std::exp(zk);
      total += -std::log(std::exp(z[static_cast<std::size_t>(c)]) / s);
    }
  }
  return total / groups;
}

void check_gradient(const std::function<LossGrad(const Matrix&)>& fn, Matrix x, double h = 1e-4) {
  const LossGrad lg = fn(x);
  std::vector<double*> coords;
  for (double& v : x.data()) coords.push_back(&v);
  const std::vector<double> num = oracle::numeric_gradient([&] { return fn(x).value; }, coords, h);
  for (std::size_t i = 0; i < num.size(); ++i) {
    INFO("coord ", i, " x ", x.data()[i], " analytic ", lg.grad.data()[i], " numeric ", num[i]);
    CHECK(oracle::relative_error(lg.grad.data()[i], num[i]) <= 1e-4);
  }
}

std::vector<int> random_labels(Rng& rng, std::size_t n, int classes) {
  std::vector<int> out(n);
  for (int& v : out) v = rng.uniform_int(0, classes - 1);
  return out;
}

Matrix one_hot(const std::vector<int>& targets, std::size_t cols) {
  Matrix m(targets.size(), cols);
  for (std::size_t r = 0; r < targets.size(); ++r) m(r, static_cast<std::size_t>(targets[r])) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("frame cross-entropy") {
  const std::vector<int> gt{0, 2, 1};
  CHECK(frame_ce_probs(one_hot(gt, 3), FrameLabeling(gt)) == 0.0);
  CHECK(frame_ce_probs(Matrix(3, 4, 0.25), FrameLabeling(gt)) == doctest::Approx(std::log(4.0)));
  CHECK(frame_ce(Matrix(3, 4, 0.0), FrameLabeling(gt)).value == doctest::Approx(std::log(4.0)));

  Rng rng(1);
  const Matrix z = oracle::random_matrix(rng, 5, 3);
  const std::vector<int> t = random_labels(rng, 5, 3);
  CHECK(std::abs(frame_ce(z, FrameLabeling(t)).value - naive_ce(z, t)) <= 1e-9);
  CHECK(std::abs(frame_ce_probs(softmax_rows(z), FrameLabeling(t)) - naive_ce(z, t)) <= 1e-9);
}

TEST_CASE("group cross-entropy variants") {
  const std::vector<int> labels{0, 0, 1, 2};
  const GroupIndex g = make_groups(labels);
  CHECK(g.classes == std::vector<ClassId>{0, 1, 2});
  CHECK(g.rows[0] == std::vector<int>{0, 1});

  // Large one-hot logits approach zero loss for both variants.
  Matrix hot(4, 3, 0.0);
  for (std::size_t r = 0; r < 4; ++r) hot(r, static_cast<std::size_t>(labels[r])) = 60.0;
  CHECK(std::abs(group_ce(hot, g, GroupVariant::kAvgProbability).value) < 1e-12);
  CHECK(std::abs(group_ce(hot, g, GroupVariant::kAvgLogit).value) < 1e-12);
  CHECK(group_ce_probs(one_hot(labels, 3), g) == 0.0);

  const GroupIndex single = make_groups(std::vector<int>{1, 1, 1});
  CHECK(group_ce(Matrix(3, 5, 0.0), single, GroupVariant::kAvgProbability).value == doctest::Approx(std::log(5.0)));
  CHECK(group_ce_probs(Matrix(3, 5, 0.2), single) == doctest::Approx(std::log(5.0)));

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = oracle::random_matrix(rng, 4, 3, 2.0);
    const std::vector<int> lab = random_labels(rng, 4, 3);
    const GroupIndex gi = make_groups(lab);
    for (GroupVariant v : {GroupVariant::kAvgProbability, GroupVariant::kAvgLogit}) {
      CHECK(std::abs(group_ce(z, gi, v).value - naive_group(z, lab, v)) <= 1e-9);
    }
    CHECK(std::abs(group_ce_probs(softmax_rows(z), gi) - naive_group(z, lab, GroupVariant::kAvgProbability)) <= 1e-9);
  }
}

TEST_CASE("cross-attention loss") {
  const std::vector<int> f2s{0, 0, 1, 2, 2};
  CHECK(cross_attention_loss_probs(one_hot(f2s, 3), f2s).value == 0.0);
  CHECK(cross_attention_loss_probs(Matrix(5, 3, 1.0 / 3.0), f2s).value == doctest::Approx(std::log(3.0)));
  CHECK(cross_attention_loss(Matrix(5, 3, 0.7), f2s).value == doctest::Approx(std::log(3.0)));

  Rng rng(3);
  const Matrix s = oracle::random_matrix(rng, 8, 3);
  const std::vector<int> t{0, 0, 0, 1, 1, 2, 2, 2};
  CHECK(std::abs(cross_attention_loss(s, t).value - naive_ce(s, t)) <= 1e-9);
  CHECK(std::abs(cross_attention_loss_probs(softmax_rows(s), t).value - naive_ce(s, t)) <= 1e-9);
}

TEST_CASE("losses are non-negative") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix z = oracle::random_matrix(rng, 6, 4, 3.0);
    const std::vector<int> t = random_labels(rng, 6, 4);
    CHECK(ce_logits(z, t).value >= 0.0);
    CHECK(group_ce(z, make_groups(t), GroupVariant::kAvgLogit).value >= 0.0);
    CHECK(group_ce(z, make_groups(t), GroupVariant::kAvgProbability).value >= 0.0);
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t R = static_cast<std::size_t>(rng.uniform_int(1, 7));
    const std::size_t C = static_cast<std::size_t>(rng.uniform_int(2, 5));
    const std::vector<int> t = random_labels(rng, R, static_cast<int>(C));
    const GroupIndex g = make_groups(t);
    const Matrix z = oracle::random_matrix(rng, R, C, 2.0);
    check_gradient([&](const Matrix& m) { return ce_logits(m, t); }, z);
    check_gradient([&](const Matrix& m) { return cross_attention_loss(m, t); }, z);
    check_gradient([&](const Matrix& m) { return group_ce(m, g, GroupVariant::kAvgProbability); }, z);
    check_gradient([&](const Matrix& m) { return group_ce(m, g, GroupVariant::kAvgLogit); }, z);

    Matrix p = softmax_rows(z);
    // Probabilities can be far below 1e-4, so the step has to be smaller still.
    check_gradient([&](const Matrix& m) { return ce_probs(m, t); }, p, 1e-7);
  }
}

TEST_CASE("total loss") {
  LossParts p{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(total_loss(p) == 15.0);
  LossWeights w;
  w.cross_attention = 0.0;
  CHECK(total_loss(p, w) == 10.0);
  p.segment = NAN;
  CHECK_THROWS_AS(total_loss(p), NumericError);
}

TEST_CASE("durations from an assignment matrix") {
  const Matrix hot{{1, 0}, {1, 0}, {1, 0}, {0, 1}, {0, 1}};
  CHECK(durations_from_assignment(hot) == std::vector<double>{3.0, 2.0});
  const std::vector<double> u = durations_from_assignment(Matrix(6, 3, 1.0 / 3.0));
  for (double v : u) CHECK(v == doctest::Approx(2.0));

  Rng rng(6);
  const Matrix m = softmax_rows(oracle::random_matrix(rng, 50, 4));
  const std::vector<double> d = durations_from_assignment(m);
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double col = 0.0;
    for (std::size_t t = 0; t < 50; ++t) col += m(t, i);
    CHECK(std::abs(d[i] - col) <= 1e-12);
    total += d[i];
  }
  CHECK(std::abs(total - 50.0) <= 1e-9);
  CHECK_THROWS_AS(durations_from_assignment(Matrix(2, 2, 0.3)), InvalidArgument);
}
