#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tas/pseudolabel.hpp"
#include "tas/segcore.hpp"
#include "tas/tensor.hpp"

namespace tas::synth {

struct SynthConfig {
  int num_classes = 4;
  int feature_dim = 16;
  double prototype_scale = 1.0;
  double noise_sigma = 0.1;
  // Features move linearly by up to this much (in prototype units) along one
  // random direction over the course of each video.
  double temporal_drift = 0.0;
  int min_segments = 3;
  int max_segments = 6;
  int min_duration = 10;
  int max_duration = 50;
  // Row-stochastic C x C; diagonal entries are ignored. Uniform when absent.
  std::optional<Matrix> transitions;
  std::uint64_t seed = 0;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static SynthConfig from_map(const std::map<std::string, std::string>& kv);
};

struct SynthVideo {
  std::string name;
  FeatureSequence features;
  Segmentation gt;
  pseudolabel::TimestampAnnotation timestamps;
};

// Class prototypes: orthonormal directions (while C <= d) times the scale.
Matrix prototypes(const SynthConfig& cfg);

SynthVideo generate_one(const SynthConfig& cfg, int index);
std::vector<SynthVideo> generate(const SynthConfig& cfg, int n_videos);

}  // namespace tas::synth
