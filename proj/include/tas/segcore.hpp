#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tas {

using ClassId = int;

// Per-frame class ids. Never empty.
class FrameLabeling {
 public:
  explicit FrameLabeling(std::vector<ClassId> labels);

  const std::vector<ClassId>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  ClassId operator[](std::size_t t) const { return labels_[t]; }

  // Throws InvalidArgument if any label is outside [0, num_classes).
  void check_classes(int num_classes) const;

  bool operator==(const FrameLabeling&) const = default;

 private:
  std::vector<ClassId> labels_;
};

struct Segment {
  ClassId action = 0;
  int duration = 0;

  bool operator==(const Segment&) const = default;
};

// Ordered (action, duration) pairs covering total_frames() frames.
// Adjacent equal actions are allowed (split-segment output); see merge_repeats.
class Segmentation {
 public:
  explicit Segmentation(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  const Segment& operator[](std::size_t i) const { return segments_[i]; }
  int total_frames() const { return total_frames_; }

  // Frame index where segment i starts.
  std::vector<int> starts() const;

  bool operator==(const Segmentation&) const = default;

 private:
  std::vector<Segment> segments_;
  int total_frames_ = 0;
};

class Transcript {
 public:
  explicit Transcript(std::vector<ClassId> actions);

  const std::vector<ClassId>& actions() const { return actions_; }
  std::size_t size() const { return actions_.size(); }
  ClassId operator[](std::size_t i) const { return actions_[i]; }

  bool operator==(const Transcript&) const = default;

 private:
  std::vector<ClassId> actions_;
};

class ClassCatalog {
 public:
  ClassCatalog() = default;
  explicit ClassCatalog(std::vector<std::string> names,
                        std::optional<ClassId> background = std::nullopt);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(ClassId id) const;
  ClassId id(std::string_view name) const;
  std::optional<ClassId> find(std::string_view name) const;
  std::optional<ClassId> background() const { return background_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ClassId> index_;
  std::optional<ClassId> background_;
};

Segmentation to_segments(const FrameLabeling& labels);
FrameLabeling to_frames(const Segmentation& seg);

// Segment actions in order, with adjacent repeats kept.
std::vector<ClassId> actions_of(const Segmentation& seg);
// Transcript of the merged segmentation.
Transcript transcript_of(const Segmentation& seg);

// Collapses adjacent equal actions, summing their durations. Idempotent.
Segmentation merge_repeats(const Segmentation& seg);
Transcript merge_repeats(const Transcript& tr);

// Upper bound on piece length used by split_segments:
// ceil(max_fraction * total_frames), at least 1.
int split_limit(double max_fraction, int total_frames);

// Splits every segment longer than split_limit() into ceil(u / limit) pieces
// whose lengths differ by at most one (longer pieces first).
Segmentation split_segments(const Segmentation& seg, double max_fraction);

// Largest-remainder rounding of non-negative real durations to integers that
// sum to `total`. Inputs are rescaled to sum to `total` first; ties go to the
// earlier segment. Results may be zero.
std::vector<int> round_durations(std::span<const double> durations, int total);

// For every frame, the index of the segment that contains it.
std::vector<int> frame_to_segment(const Segmentation& seg);

}  // namespace tas
