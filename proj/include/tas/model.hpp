#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tas/autograd.hpp"
#include "tas/rng.hpp"
#include "tas/segcore.hpp"
#include "tas/tensor.hpp"

namespace tas::model {

struct ModelConfig {
  int input_dim = 16;     // d
  int d_model = 16;       // d'
  int num_classes = 4;    // C, excluding the EOS output
  int enc_layers = 4;
  int dec_layers = 2;
  int align_layers = 1;
  int heads = 1;
  int ffn_dim = 32;
  int align_ffn_dim = 32;
  int window = 31;        // encoder attention band, odd
  int conv_kernel = 3;    // odd
  double tau_prime = 0.1;    // cross-attention loss temperature
  double tau_train = 1.0;    // alignment assignment temperature, training
  double tau_infer = 1e-4;   // alignment assignment temperature, inference
  double dropout = 0.0;
  double feature_drop = 0.01;
  int ca_smoothing_kernel = 0;  // 0 disables; otherwise odd
  int max_decode_len = 64;      // cap on tokens including SOS

  // Full-size settings used for the benchmark runs (Breakfast-style).
  static ModelConfig benchmark_defaults();

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  // Unknown keys are ignored so one file can carry training keys as well.
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
};

struct EncoderOutput {
  Matrix features;      // T x d'
  Matrix frame_logits;  // T x C
};

struct DecoderOutput {
  Matrix features;         // N x d', one row per segment
  Matrix segment_logits;   // (N+1) x (C+1); last row predicts EOS
  Matrix cross_attention;  // T x N, rows stochastic over segments
};

struct DecodeStep {
  std::vector<double> logits;  // C + 1 entries, index C is EOS
  // (prefix_len - 1) x T: final-layer attention of the positions that emitted
  // the prefix's segments, rows over frames.
  Matrix cross_attention;
};

struct AlignmentOutput {
  Matrix aligned;     // T x d'
  Matrix assignment;  // T x N
};

// Sinusoidal position table, len x dim.
Matrix positional_encoding(std::size_t len, std::size_t dim);

// Graph handles produced by the builders below.
struct EncoderVars {
  nn::Var features;
  nn::Var frame_logits;
};

struct DecoderVars {
  nn::Var features;        // (N+1) x d', includes the EOS position
  nn::Var logits;          // (N+1) x (C+1)
  nn::Var ca_scores;       // T x N, pre-softmax and already divided by tau'
  nn::Var ca_probs;        // T x N, smoothed attention when smoothing is on
};

// Training-time randomness; a null rng means deterministic evaluation.
struct ForwardContext {
  Rng* rng = nullptr;
  bool augment = false;
};

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);
  Model(ModelConfig cfg, nn::ParameterSet params);

  const ModelConfig& config() const { return cfg_; }
  void set_max_decode_len(int n);
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  int sos_token() const { return cfg_.num_classes; }
  int eos_class() const { return cfg_.num_classes; }

  EncoderOutput encode(const FeatureSequence& x) const;
  // Teacher-forced pass over [SOS, segments...].
  DecoderOutput decode(const Matrix& encoded, std::span<const ClassId> segments) const;
  // prefix[0] must be the SOS token.
  DecodeStep decode_step(const Matrix& encoded, std::span<const int> prefix) const;
  // Greedy argmax decoding until EOS or the length cap; never empty.
  std::vector<ClassId> greedy_decode(const Matrix& encoded) const;
  // `segment_features` is the decoder's N x d' output.
  AlignmentOutput align(const Matrix& encoded, const Matrix& segment_features, double tau) const;

  EncoderVars build_encoder(nn::Graph& g, const FeatureSequence& x, const ForwardContext& ctx) const;
  DecoderVars build_decoder(nn::Graph& g, nn::Var encoded, std::span<const int> tokens,
                            const ForwardContext& ctx) const;
  // Pre-softmax assignment scores A (D + PE)^T / tau, T x N.
  nn::Var build_alignment(nn::Graph& g, nn::Var encoded, nn::Var segment_features, double tau,
                          nn::Var* aligned = nullptr) const;

 private:
  void init_parameters(std::uint64_t seed);
  nn::Var dropout(nn::Graph& g, nn::Var x, const ForwardContext& ctx) const;

  ModelConfig cfg_;
  nn::ParameterSet params_;
};

}  // namespace tas::model
