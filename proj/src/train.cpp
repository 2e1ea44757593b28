#include "tas/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tas/errors.hpp"
#include "tas/rng.hpp"

namespace tas::train {

using model::Model;
using nn::Graph;
using nn::Var;

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("train config: epochs must be >= 0");
  if (!(lr >= 0.0)) throw InvalidArgument("train config: lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw InvalidArgument("train config: bad Adam settings");
  }
  if (!(clip_norm >= 0.0)) throw InvalidArgument("train config: clip_norm must be >= 0");
  if (split_fraction < 0.0 || split_fraction > 1.0) throw InvalidArgument("train config: split_fraction in [0, 1]");
}

namespace {

std::string variant_name(losses::GroupVariant v) {
  return v == losses::GroupVariant::kAvgLogit ? "avg_logit" : "avg_probability";
}

losses::GroupVariant parse_variant(const std::string& s) {
  if (s == "avg_logit") return losses::GroupVariant::kAvgLogit;
  if (s == "avg_probability") return losses::GroupVariant::kAvgProbability;
  throw InvalidArgument("unknown group loss variant: " + s);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double read_double(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("config: bad number for " + key);
}

}  // namespace

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"epochs", std::to_string(epochs)},
      {"lr", num(lr)},
      {"beta1", num(beta1)},
      {"beta2", num(beta2)},
      {"adam_eps", num(adam_eps)},
      {"clip_norm", num(clip_norm)},
      {"seed", std::to_string(seed)},
      {"split_fraction", num(split_fraction)},
      {"g_frame", variant_name(g_frame)},
      {"g_segment", variant_name(g_segment)},
      {"w_frame", num(weights.frame)},
      {"w_segment", num(weights.segment)},
      {"w_group_frame", num(weights.group_frame)},
      {"w_group_segment", num(weights.group_segment)},
      {"w_cross_attention", num(weights.cross_attention)},
      {"augment", augment ? "1" : "0"},
  };
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  const double epochs = read_double(kv, "epochs", c.epochs);
  if (epochs != std::floor(epochs)) throw InvalidArgument("config: epochs must be an integer");
  c.epochs = static_cast<int>(epochs);
  c.lr = read_double(kv, "lr", c.lr);
  c.beta1 = read_double(kv, "beta1", c.beta1);
  c.beta2 = read_double(kv, "beta2", c.beta2);
  c.adam_eps = read_double(kv, "adam_eps", c.adam_eps);
  c.clip_norm = read_double(kv, "clip_norm", c.clip_norm);
  if (auto it = kv.find("seed"); it != kv.end()) {
    try {
      c.seed = std::stoull(it->second);
    } catch (const std::logic_error&) {
      throw InvalidArgument("config: bad seed");
    }
  }
  c.split_fraction = read_double(kv, "split_fraction", c.split_fraction);
  if (auto it = kv.find("g_frame"); it != kv.end()) c.g_frame = parse_variant(it->second);
  if (auto it = kv.find("g_segment"); it != kv.end()) c.g_segment = parse_variant(it->second);
  c.weights.frame = read_double(kv, "w_frame", c.weights.frame);
  c.weights.segment = read_double(kv, "w_segment", c.weights.segment);
  c.weights.group_frame = read_double(kv, "w_group_frame", c.weights.group_frame);
  c.weights.group_segment = read_double(kv, "w_group_segment", c.weights.group_segment);
  c.weights.cross_attention = read_double(kv, "w_cross_attention", c.weights.cross_attention);
  c.augment = read_double(kv, "augment", c.augment ? 1.0 : 0.0) != 0.0;
  c.validate();
  return c;
}

Segmentation target_segments(const FrameLabeling& labels, double split_fraction) {
  Segmentation merged = to_segments(labels);
  if (split_fraction <= 0.0) return merged;
  return split_segments(merged, split_fraction);
}

namespace {

struct Stage1Graph {
  Var root;
  losses::LossParts parts;
};

Stage1Graph build_stage1(Graph& g, const Model& m, const TrainingVideo& v, const TrainConfig& cfg,
                         const model::ForwardContext& ctx) {
  const int C = m.config().num_classes;
  v.labels.check_classes(C);
  if (v.labels.size() != v.features.rows()) {
    throw InvalidArgument(v.name + ": " + std::to_string(v.labels.size()) + " labels for " +
                          std::to_string(v.features.rows()) + " frames");
  }
  const Segmentation seg = target_segments(v.labels, cfg.split_fraction);
  const std::vector<ClassId> actions = actions_of(seg);
  const std::size_t N = actions.size();

  const model::EncoderVars enc = m.build_encoder(g, v.features, ctx);
  std::vector<int> tokens{m.sos_token()};
  tokens.insert(tokens.end(), actions.begin(), actions.end());
  const model::DecoderVars dec = m.build_decoder(g, enc.features, tokens, ctx);

  std::vector<int> seg_targets(actions.begin(), actions.end());
  seg_targets.push_back(m.eos_class());
  const std::vector<int> f2s = frame_to_segment(seg);
  const losses::GroupIndex frame_groups = losses::make_groups(v.labels.labels());
  const losses::GroupIndex seg_groups = losses::make_groups(actions);

  const Var l_frame = g.loss(enc.frame_logits, [&](const Matrix& z) { return losses::frame_ce(z, v.labels); });
  const Var l_seg = g.loss(dec.logits, [&](const Matrix& z) { return losses::segment_ce(z, seg_targets); });
  const Var l_gframe = g.loss(enc.frame_logits, [&](const Matrix& z) {
    return losses::group_ce(z, frame_groups, cfg.g_frame);
  });
  const Var seg_rows = g.slice_rows(dec.logits, 0, N);
  const Var l_gseg = g.loss(seg_rows, [&](const Matrix& z) { return losses::group_ce(z, seg_groups, cfg.g_segment); });
  Var l_ca;
  if (m.config().ca_smoothing_kernel > 0) {
    l_ca = g.loss(dec.ca_probs, [&](const Matrix& a) { return losses::cross_attention_loss_probs(a, f2s); });
  } else {
    l_ca = g.loss(dec.ca_scores, [&](const Matrix& s) { return losses::cross_attention_loss(s, f2s); });
  }

  Stage1Graph out;
  out.parts = {g.scalar(l_frame), g.scalar(l_seg), g.scalar(l_gframe), g.scalar(l_gseg), g.scalar(l_ca)};
  const std::vector<Var> terms{l_frame, l_seg, l_gframe, l_gseg, l_ca};
  const std::vector<double> w{cfg.weights.frame, cfg.weights.segment, cfg.weights.group_frame,
                              cfg.weights.group_segment, cfg.weights.cross_attention};
  out.root = g.sum(terms, w);
  return out;
}

struct AlignTargets {
  Matrix encoded;
  Matrix segment_features;
  std::vector<int> f2s;
};

AlignTargets alignment_inputs(const Model& m, const TrainingVideo& v, const TrainConfig& cfg) {
  const Segmentation seg = target_segments(v.labels, cfg.split_fraction);
  const std::vector<ClassId> actions = actions_of(seg);
  const model::EncoderOutput enc = m.encode(v.features);
  model::DecoderOutput dec = m.decode(enc.features, actions);
  return {enc.features, std::move(dec.features), frame_to_segment(seg)};
}

Var build_stage2(Graph& g, const Model& m, const AlignTargets& in, double tau) {
  const Var scores = m.build_alignment(g, g.constant(in.encoded), g.constant(in.segment_features), tau);
  return g.loss(scores, [&](const Matrix& s) { return losses::cross_attention_loss(s, in.f2s); });
}

bool in_stage(const std::string& name, int stage) {
  if (stage == 1) return name.rfind("enc.", 0) == 0 || name.rfind("dec.", 0) == 0;
  return name.rfind("align.", 0) == 0;
}

void collect(const Graph& g, const Model& m, int stage, Gradients& out) {
  for (const auto& p : m.params().all()) {
    if (!in_stage(p.name, stage)) continue;
    const Matrix* gp = g.param_grad(p);
    out[p.name] = gp ? *gp : Matrix(p.value.rows(), p.value.cols());
  }
}

class Adam {
 public:
  explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(nn::ParameterSet& ps, const Graph& g, int stage) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    double scale = 1.0;
    if (cfg_.clip_norm > 0.0) {
      double sq = 0.0;
      for (const auto& p : ps.all()) {
        if (!in_stage(p.name, stage)) continue;
        if (const Matrix* grad = g.param_grad(p))
          for (double v : grad->data()) sq += v * v;
      }
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
    }
    for (auto& p : ps.all()) {
      if (!in_stage(p.name, stage)) continue;
      const Matrix* grad = g.param_grad(p);
      if (!grad) continue;
      auto& [mo, ve] = state_[p.name];
      if (mo.empty()) {
        mo.assign(p.value.size(), 0.0);
        ve.assign(p.value.size(), 0.0);
      }
      auto& w = p.value.data();
      const auto& gr = grad->data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = gr[i] * scale;
        mo[i] = cfg_.beta1 * mo[i] + (1.0 - cfg_.beta1) * gi;
        ve[i] = cfg_.beta2 * ve[i] + (1.0 - cfg_.beta2) * gi * gi;
        w[i] -= cfg_.lr * (mo[i] / c1) / (std::sqrt(ve[i] / c2) + cfg_.adam_eps);
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  int t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> state_;
};

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<Matrix> snapshot(const nn::ParameterSet& ps) {
  std::vector<Matrix> out;
  for (const auto& p : ps.all()) out.push_back(p.value);
  return out;
}

void restore(nn::ParameterSet& ps, const std::vector<Matrix>& snap) {
  for (std::size_t i = 0; i < snap.size(); ++i) ps.all()[i].value = snap[i];
}

}  // namespace

double stage1_loss(const Model& m, const TrainingVideo& v, const TrainConfig& cfg, losses::LossParts* parts,
                   Gradients* grads) {
  Graph g;
  const Stage1Graph s = build_stage1(g, m, v, cfg, {});
  if (parts) *parts = s.parts;
  if (grads) {
    g.backward(s.root);
    collect(g, m, 1, *grads);
  }
  return g.scalar(s.root);
}

double stage2_loss(const Model& m, const TrainingVideo& v, const TrainConfig& cfg, Gradients* grads) {
  const AlignTargets in = alignment_inputs(m, v, cfg);
  Graph g;
  const Var root = build_stage2(g, m, in, m.config().tau_train);
  if (grads) {
    g.backward(root);
    collect(g, m, 2, *grads);
  }
  return g.scalar(root);
}

TrainResult train_stage1(Model& m, const std::vector<TrainingVideo>& videos, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
  cfg.validate();
  if (videos.empty()) throw InvalidArgument("train: no videos");
  TrainResult result;
  for (const auto& v : videos) {
    const auto n = static_cast<int>(target_segments(v.labels, cfg.split_fraction).size());
    result.max_transcript_len = std::max(result.max_transcript_len, n);
  }
  m.set_max_decode_len(2 * result.max_transcript_len + 1);

  Rng rng(splitmix64(cfg.seed ^ 0x51a9e1ULL));
  Adam adam(cfg);
  std::vector<Matrix> good = snapshot(m.params());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog log;
    log.stage = 1;
    log.epoch = epoch;
    for (std::size_t idx : epoch_order(videos.size(), rng)) {
      model::ForwardContext ctx{&rng, cfg.augment};
      Graph g;
      const Stage1Graph s = build_stage1(g, m, videos[idx], cfg, ctx);
      const double value = g.scalar(s.root);
      if (!std::isfinite(value)) {
        restore(m.params(), good);
        throw NumericError("stage 1: non-finite loss at epoch " + std::to_string(epoch) + " on " + videos[idx].name);
      }
      g.backward(s.root);
      adam.step(m.params(), g, 1);
      log.loss += value;
      log.parts.frame += s.parts.frame;
      log.parts.segment += s.parts.segment;
      log.parts.group_frame += s.parts.group_frame;
      log.parts.group_segment += s.parts.group_segment;
      log.parts.cross_attention += s.parts.cross_attention;
    }
    const double n = static_cast<double>(videos.size());
    log.loss /= n;
    log.parts.frame /= n;
    log.parts.segment /= n;
    log.parts.group_frame /= n;
    log.parts.group_segment /= n;
    log.parts.cross_attention /= n;
    good = snapshot(m.params());
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

TrainResult train_stage2(Model& m, const std::vector<TrainingVideo>& videos, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
  cfg.validate();
  if (videos.empty()) throw InvalidArgument("train: no videos");
  TrainResult result;
  std::vector<AlignTargets> inputs;
  for (const auto& v : videos) {
    inputs.push_back(alignment_inputs(m, v, cfg));
    result.max_transcript_len =
        std::max(result.max_transcript_len, static_cast<int>(inputs.back().segment_features.rows()));
  }

  Rng rng(splitmix64(cfg.seed ^ 0xa11ULL));
  Adam adam(cfg);
  std::vector<Matrix> good = snapshot(m.params());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog log;
    log.stage = 2;
    log.epoch = epoch;
    for (std::size_t idx : epoch_order(videos.size(), rng)) {
      Graph g;
      const Var root = build_stage2(g, m, inputs[idx], m.config().tau_train);
      const double value = g.scalar(root);
      if (!std::isfinite(value)) {
        restore(m.params(), good);
        throw NumericError("stage 2: non-finite loss at epoch " + std::to_string(epoch) + " on " + videos[idx].name);
      }
      g.backward(root);
      adam.step(m.params(), g, 2);
      log.loss += value;
    }
    log.loss /= static_cast<double>(videos.size());
    log.parts.cross_attention = log.loss;
    good = snapshot(m.params());
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace tas::train
