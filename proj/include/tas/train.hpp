#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tas/losses.hpp"
#include "tas/model.hpp"
#include "tas/segcore.hpp"

namespace tas::train {

struct TrainConfig {
  int epochs = 200;
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Rescales the step's gradient to this global L2 norm when larger; 0 disables.
  double clip_norm = 0.0;
  std::uint64_t seed = 0;
  // Maximum segment length as a fraction of the video; 0 disables splitting.
  double split_fraction = 0.17;
  losses::GroupVariant g_frame = losses::GroupVariant::kAvgLogit;
  losses::GroupVariant g_segment = losses::GroupVariant::kAvgProbability;
  losses::LossWeights weights;
  bool augment = true;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  // Unknown keys are ignored.
  static TrainConfig from_map(const std::map<std::string, std::string>& kv);
};

struct TrainingVideo {
  std::string name;
  FeatureSequence features;
  FrameLabeling labels;  // ground truth or pseudo-labels
};

// Segmentation the decoder is trained against: merged runs, then split.
Segmentation target_segments(const FrameLabeling& labels, double split_fraction);

struct EpochLog {
  int stage = 1;
  int epoch = 0;  // 1-based
  double loss = 0.0;
  losses::LossParts parts;  // means over videos
};

using Gradients = std::map<std::string, Matrix>;

// Stage-1 objective for one video without augmentation. Fills `grads` with
// the gradient of every encoder/decoder parameter if non-null.
double stage1_loss(const model::Model& m, const TrainingVideo& v, const TrainConfig& cfg,
                   losses::LossParts* parts = nullptr, Gradients* grads = nullptr);

// Stage-2 objective: cross-entropy of the alignment assignment (at tau_train)
// against the frame-to-segment targets. Gradients cover alignment parameters.
double stage2_loss(const model::Model& m, const TrainingVideo& v, const TrainConfig& cfg,
                   Gradients* grads = nullptr);

struct TrainResult {
  std::vector<EpochLog> log;
  int max_transcript_len = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains encoder and decoder. Sets the model's decode cap to twice the
// longest target transcript (plus SOS). On a non-finite loss the parameters
// are restored to the last finite epoch and NumericError is thrown.
TrainResult train_stage1(model::Model& m, const std::vector<TrainingVideo>& videos, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

// Trains only the alignment decoder on frozen encoder/decoder outputs.
TrainResult train_stage2(model::Model& m, const std::vector<TrainingVideo>& videos, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

}  // namespace tas::train
