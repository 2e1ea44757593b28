#include "tas/inference.hpp"

#include <string>

#include "tas/errors.hpp"
#include "tas/losses.hpp"

namespace tas::inference {

DurationMode parse_duration_mode(std::string_view name) {
  if (name == "none") return DurationMode::kNone;
  if (name == "alignment") return DurationMode::kAlignment;
  if (name == "viterbi") return DurationMode::kViterbi;
  if (name == "fifa") return DurationMode::kFifa;
  throw InvalidArgument("unknown duration mode: " + std::string(name));
}

std::vector<double> merged_alignment_durations(const model::Model& m, const Matrix& encoded,
                                               const std::vector<ClassId>& decoded) {
  const model::DecoderOutput dec = m.decode(encoded, decoded);
  const model::AlignmentOutput al = m.align(encoded, dec.features, m.config().tau_infer);
  const std::vector<double> u = losses::durations_from_assignment(al.assignment);
  std::vector<double> merged;
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    if (i > 0 && decoded[i] == decoded[i - 1]) {
      merged.back() += u[i];
    } else {
      merged.push_back(u[i]);
    }
  }
  return merged;
}

Result infer_video(const model::Model& m, const FeatureSequence& features, const Options& opt) {
  const model::EncoderOutput enc = m.encode(features);
  const std::vector<ClassId> decoded = m.greedy_decode(enc.features);
  Transcript transcript = merge_repeats(Transcript(decoded));
  const int T = static_cast<int>(features.rows());

  auto build = [&](const std::vector<int>& durations) {
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < durations.size(); ++i) segs.push_back({transcript[i], durations[i]});
    return Segmentation(std::move(segs));
  };

  switch (opt.mode) {
    case DurationMode::kNone:
      return {std::move(transcript), std::nullopt};
    case DurationMode::kAlignment: {
      const std::vector<double> u = merged_alignment_durations(m, enc.features, decoded);
      Segmentation seg = build(align::round_durations_nonempty(u, T));
      return {std::move(transcript), std::move(seg)};
    }
    case DurationMode::kViterbi: {
      align::AlignmentProblem p{log_softmax_rows(enc.frame_logits), transcript, opt.viterbi_stride};
      Segmentation seg = align::viterbi_align(p);
      return {std::move(transcript), std::move(seg)};
    }
    case DurationMode::kFifa: {
      align::FifaConfig cfg = opt.fifa;
      if (!cfg.init_durations) {
        std::vector<double> u = merged_alignment_durations(m, enc.features, decoded);
        // Keep the initial durations strictly positive.
        for (double& v : u) v = std::max(v, 1e-3);
        cfg.init_durations = std::move(u);
      }
      align::AlignmentProblem p{log_softmax_rows(enc.frame_logits), transcript, 1};
      Segmentation seg = align::fifa_align(p, cfg);
      return {std::move(transcript), std::move(seg)};
    }
  }
  throw InvalidArgument("unknown duration mode");
}

}  // namespace tas::inference
