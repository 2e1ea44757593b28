#pragma once

#include <span>
#include <vector>

#include "tas/segcore.hpp"
#include "tas/tensor.hpp"

// Loss terms of the segment-level objective. Functions taking logits return
// the loss together with its exact gradient with respect to those logits;
// the probability-domain overloads exist for inspecting a given ProbMatrix
// or AttentionMatrix directly.
namespace tas::losses {

struct LossGrad {
  double value = 0.0;
  Matrix grad;  // same shape as the input
};

// Smallest probability ever fed to log().
inline constexpr double kProbFloor = 1e-38;

// Rows of `logits` grouped by ground-truth class. Groups are ordered by class
// id; rows keep their original order inside a group.
struct GroupIndex {
  std::vector<ClassId> classes;
  std::vector<std::vector<int>> rows;

  std::size_t size() const { return classes.size(); }
};

GroupIndex make_groups(std::span<const int> row_labels);

enum class GroupVariant {
  kAvgProbability,  // -log(mean_r p[r][c])
  kAvgLogit,        // -log(softmax(mean_r z[r])[c])
};

// Mean negative log-likelihood of `targets` under row-wise softmax(logits).
LossGrad ce_logits(const Matrix& logits, std::span<const int> targets);

LossGrad frame_ce(const Matrix& logits, const FrameLabeling& gt);
LossGrad segment_ce(const Matrix& logits, std::span<const int> targets);
LossGrad group_ce(const Matrix& logits, const GroupIndex& groups, GroupVariant variant);
// Scores are pre-softmax attention logits, rows = frames, cols = segments.
LossGrad cross_attention_loss(const Matrix& scores, std::span<const int> frame_to_segment);

// Probability-domain forms. Gradients are with respect to the probabilities.
LossGrad ce_probs(const Matrix& probs, std::span<const int> targets);
double frame_ce_probs(const Matrix& probs, const FrameLabeling& gt);
double group_ce_probs(const Matrix& probs, const GroupIndex& groups);
LossGrad cross_attention_loss_probs(const Matrix& attention, std::span<const int> frame_to_segment);

struct LossParts {
  double frame = 0.0;
  double segment = 0.0;
  double group_frame = 0.0;
  double group_segment = 0.0;
  double cross_attention = 0.0;
};

struct LossWeights {
  double frame = 1.0;
  double segment = 1.0;
  double group_frame = 1.0;
  double group_segment = 1.0;
  double cross_attention = 1.0;
};

// Weighted sum; the default weights give the plain sum. Throws NumericError
// if any part is not finite.
double total_loss(const LossParts& parts, const LossWeights& weights = {});

// Column sums of a row-stochastic T x N assignment matrix.
std::vector<double> durations_from_assignment(const Matrix& assignment);

}  // namespace tas::losses
