#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tas/segcore.hpp"

namespace tas::metrics {

inline constexpr std::array<double, 3> kF1Thresholds{0.10, 0.25, 0.50};

// Percentages in [0, 100].
struct MetricReport {
  double acc = 0.0;
  double edit = 0.0;
  std::map<double, double> f1;  // keyed by IoU threshold

  // "acc=..\nedit=..\nf1@10=..\n..." with two decimals.
  std::string to_key_value() const;
  std::string to_json() const;
};

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

double f1_from_counts(const MatchCounts& c);

double levenshtein(const std::vector<ClassId>& a, const std::vector<ClassId>& b);

double frame_accuracy(const FrameLabeling& pred, const FrameLabeling& gt);

// Empty pred is allowed and scores 0.
double edit_score(const std::vector<ClassId>& pred, const Transcript& gt);
double edit_score(const Transcript& pred, const Transcript& gt);

double iou(int a_start, int a_end, int b_start, int b_end);

// Maximum-cardinality one-to-one matching between predicted and ground-truth
// segments of the same class with IoU >= threshold.
MatchCounts match_segments(const Segmentation& pred, const Segmentation& gt, double threshold);

double f1_at(const Segmentation& pred, const Segmentation& gt, double threshold);

// Background handling: when `ignore` is set, frames whose ground truth is the
// ignored class are skipped by accuracy, and segments of that class are
// dropped before Edit and F1.
struct EvalOptions {
  std::optional<ClassId> ignore;
};

struct VideoScores {
  int frames = 0;
  int correct = 0;
  double edit = 0.0;
  std::array<MatchCounts, kF1Thresholds.size()> counts{};

  MetricReport report() const;
};

VideoScores score_video(const FrameLabeling& pred, const FrameLabeling& gt, const EvalOptions& opt = {});

// Dataset aggregate: frame-weighted Acc, per-video mean Edit, F1 from summed
// TP/FP/FN.
class Aggregate {
 public:
  void add(const VideoScores& v);
  MetricReport report() const;
  int videos() const { return videos_; }

 private:
  long frames_ = 0;
  long correct_ = 0;
  double edit_sum_ = 0.0;
  int videos_ = 0;
  std::array<MatchCounts, kF1Thresholds.size()> counts_{};
};

}  // namespace tas::metrics
