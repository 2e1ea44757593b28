#pragma once

#include <string_view>
#include <vector>

#include "tas/segcore.hpp"
#include "tas/tensor.hpp"

namespace tas::pseudolabel {

struct Timestamp {
  int frame = 0;  // 0-indexed
  ClassId action = 0;

  bool operator==(const Timestamp&) const = default;
};

// One annotated frame per segment, strictly increasing frame indices.
class TimestampAnnotation {
 public:
  explicit TimestampAnnotation(std::vector<Timestamp> entries);

  const std::vector<Timestamp>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const Timestamp& operator[](std::size_t i) const { return entries_[i]; }

  // Throws InvalidArgument unless every frame index is in [0, total_frames).
  void check_frames(int total_frames) const;

 private:
  std::vector<Timestamp> entries_;
};

enum class Distance { kEuclidean, kCosine, kL1 };

Distance parse_distance(std::string_view name);
double distance(Distance kind, std::span<const double> a, std::span<const double> b);

// Cluster i covers frames [boundaries[i], boundaries[i+1]).
struct ClusterState {
  std::vector<int> medoid_frames;
  std::vector<int> boundaries;  // size n + 1, boundaries.front() == 0, back() == T
};

struct KMedoidsResult {
  Segmentation segmentation;
  ClusterState state;
  // Objective sum_i sum_{j in cluster i} dist(medoid_i, x_j), recorded after
  // every boundary step and every medoid step.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
};

struct KMedoidsOptions {
  Distance dist = Distance::kEuclidean;
  int max_iters = 50;
};

// Temporally continuous clustering seeded by timestamps. Each cluster keeps
// its own annotated frame, so the output transcript is the timestamp classes
// in order. Throws std::logic_error if the objective ever increases.
KMedoidsResult constrained_kmedoids_full(const FeatureSequence& feats, const TimestampAnnotation& ts,
                                         const KMedoidsOptions& opt = {});

Segmentation constrained_kmedoids(const FeatureSequence& feats, const TimestampAnnotation& ts,
                                  const KMedoidsOptions& opt = {});

// Plain k-medoids (nearest-medoid assignment) initialised at the timestamp
// frames; cluster i is labelled with timestamp i's class.
FrameLabeling unconstrained_kmedoids(const FeatureSequence& feats, const TimestampAnnotation& ts,
                                     const KMedoidsOptions& opt = {});

}  // namespace tas::pseudolabel
