#pragma once

#include <optional>
#include <string_view>

#include "tas/align.hpp"
#include "tas/model.hpp"
#include "tas/segcore.hpp"

namespace tas::inference {

enum class DurationMode { kNone, kAlignment, kViterbi, kFifa };

DurationMode parse_duration_mode(std::string_view name);

struct Options {
  DurationMode mode = DurationMode::kAlignment;
  int viterbi_stride = 1;
  align::FifaConfig fifa;
};

struct Result {
  Transcript transcript;                  // greedy decoder output, repeats merged
  std::optional<Segmentation> segmentation;  // absent for kNone
};

// Alignment-decoder durations summed over runs of repeated tokens, one entry
// per entry of the merged transcript.
std::vector<double> merged_alignment_durations(const model::Model& m, const Matrix& encoded,
                                               const std::vector<ClassId>& decoded);

// The transcript never depends on the duration mode. Alignment and FIFA
// durations keep every segment at least one frame long; FIFA starts from the
// alignment decoder's durations.
Result infer_video(const model::Model& m, const FeatureSequence& features, const Options& opt);

}  // namespace tas::inference
