#pragma once

#include <optional>
#include <vector>

#include "tas/segcore.hpp"
#include "tas/tensor.hpp"

// Duration inference for a known transcript. Both aligners return one
// segment per transcript entry, so pass a merged transcript when the output
// should have distinct neighbours.
namespace tas::align {

struct AlignmentProblem {
  Matrix log_probs;  // T x C
  Transcript transcript;
  int stride = 1;

  void validate() const;
};

// Sum over frames of log_probs[t][class at t], accumulated in frame order.
double score(const Matrix& log_probs, const Segmentation& seg);

// Exact maximiser of score() over segmentations with the given action
// sequence and at least one (strided) block per segment. With stride s the
// frames are grouped into blocks of s (the last block may be shorter) and
// boundaries fall on block edges. Throws Infeasible if there are fewer
// blocks than transcript entries. Among equal-scoring paths the one with the
// earliest boundaries wins.
Segmentation viterbi_align(const AlignmentProblem& p);

struct FifaConfig {
  int epochs = 3000;
  double sharpness = 80.0;
  double step_size = 0.01;
  std::optional<std::vector<double>> init_durations;

  void validate() const;
};

struct FifaResult {
  Segmentation segmentation;
  std::vector<double> durations;      // continuous, sum to T
  std::vector<double> energy_trace;   // accepted energies, starting with the initial one
  int halvings = 0;
};

// Soft energy -sum_t sum_i mask[t][i] * log_probs[t][a_i] for continuous
// durations; boundary sigmoids use time normalised to [0, 1].
double fifa_energy(const Matrix& log_probs, const Transcript& tr, std::span<const double> durations,
                   double sharpness, std::vector<double>* grad_durations = nullptr);

// Gradient descent on durations 1 + (T - N) softmax(l). A step that raises the
// energy is rejected and the step size halved. Rounds with largest remainders,
// then moves frames from the longest segments so every segment is non-empty.
FifaResult fifa_align_full(const AlignmentProblem& p, const FifaConfig& cfg = {});
Segmentation fifa_align(const AlignmentProblem& p, const FifaConfig& cfg = {});

// Argmax per frame (lowest index on ties), merged into a transcript.
Transcript extract_transcript(const Matrix& frame_logits);

// Integer durations summing to `total` with every entry >= 1.
std::vector<int> round_durations_nonempty(std::span<const double> durations, int total);

}  // namespace tas::align
