#include "tas/synth.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "tas/errors.hpp"
#include "tas/rng.hpp"

namespace tas::synth {

void SynthConfig::validate() const {
  if (num_classes < 1 || feature_dim < 1) throw InvalidArgument("synth: num_classes and feature_dim must be >= 1");
  if (!(noise_sigma >= 0.0) || !(prototype_scale >= 0.0) || !(temporal_drift >= 0.0)) {
    throw InvalidArgument("synth: scale, sigma and drift must be >= 0");
  }
  if (min_segments < 1 || max_segments < min_segments) throw InvalidArgument("synth: bad segment count bounds");
  if (min_duration < 1 || max_duration < min_duration) throw InvalidArgument("synth: bad duration bounds");
  if (num_classes < 2 && max_segments > 1) {
    throw InvalidArgument("synth: more than one segment needs at least two classes");
  }
  if (transitions) {
    const auto C = static_cast<std::size_t>(num_classes);
    if (transitions->rows() != C || transitions->cols() != C) throw InvalidArgument("synth: transition matrix must be C x C");
    for (std::size_t a = 0; a < C; ++a) {
      double off = 0.0;
      for (std::size_t b = 0; b < C; ++b) {
        if ((*transitions)(a, b) < 0.0) throw InvalidArgument("synth: negative transition probability");
        if (a != b) off += (*transitions)(a, b);
      }
      if (max_segments > 1 && !(off > 0.0)) {
        throw InvalidArgument("synth: class " + std::to_string(a) + " has no outgoing transition");
      }
    }
  }
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double get(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("synth config: bad number for " + key);
}

int get_int(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  const double v = get(kv, key, fallback);
  if (v != std::floor(v)) throw InvalidArgument("synth config: " + key + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

std::map<std::string, std::string> SynthConfig::to_map() const {
  return {
      {"num_classes", std::to_string(num_classes)},
      {"feature_dim", std::to_string(feature_dim)},
      {"prototype_scale", num(prototype_scale)},
      {"noise_sigma", num(noise_sigma)},
      {"temporal_drift", num(temporal_drift)},
      {"min_segments", std::to_string(min_segments)},
      {"max_segments", std::to_string(max_segments)},
      {"min_duration", std::to_string(min_duration)},
      {"max_duration", std::to_string(max_duration)},
      {"seed", std::to_string(seed)},
  };
}

SynthConfig SynthConfig::from_map(const std::map<std::string, std::string>& kv) {
  SynthConfig c;
  c.num_classes = get_int(kv, "num_classes", c.num_classes);
  c.feature_dim = get_int(kv, "feature_dim", c.feature_dim);
  c.prototype_scale = get(kv, "prototype_scale", c.prototype_scale);
  c.noise_sigma = get(kv, "noise_sigma", c.noise_sigma);
  c.temporal_drift = get(kv, "temporal_drift", c.temporal_drift);
  c.min_segments = get_int(kv, "min_segments", c.min_segments);
  c.max_segments = get_int(kv, "max_segments", c.max_segments);
  c.min_duration = get_int(kv, "min_duration", c.min_duration);
  c.max_duration = get_int(kv, "max_duration", c.max_duration);
  if (auto it = kv.find("seed"); it != kv.end()) {
    try {
      c.seed = std::stoull(it->second);
    } catch (const std::logic_error&) {
      throw InvalidArgument("synth config: bad seed");
    }
  }
  c.validate();
  return c;
}

Matrix prototypes(const SynthConfig& cfg) {
  cfg.validate();
  const auto C = static_cast<std::size_t>(cfg.num_classes);
  const auto d = static_cast<std::size_t>(cfg.feature_dim);
  Rng rng(splitmix64(cfg.seed) ^ 0x9f07ULL);
  Matrix p(C, d);
  for (std::size_t c = 0; c < C; ++c) {
    auto row = p.row(c);
    for (double& v : row) v = rng.normal();
    // Gram-Schmidt against earlier rows while there is room.
    if (c < d) {
      for (std::size_t k = 0; k < c; ++k) {
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += row[j] * p(k, j);
        for (std::size_t j = 0; j < d; ++j) row[j] -= dot * p(k, j);
      }
    }
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : row) v /= norm;
  }
  for (double& v : p.data()) v *= cfg.prototype_scale;
  return p;
}

namespace {

ClassId next_class(const SynthConfig& cfg, Rng& rng, std::optional<ClassId> prev) {
  const int C = cfg.num_classes;
  if (!prev) return rng.uniform_int(0, C - 1);
  if (!cfg.transitions) {
    const int k = rng.uniform_int(0, C - 2);
    return k >= *prev ? k + 1 : k;
  }
  const auto a = static_cast<std::size_t>(*prev);
  double total = 0.0;
  for (int b = 0; b < C; ++b)
    if (b != *prev) total += (*cfg.transitions)(a, static_cast<std::size_t>(b));
  double r = rng.uniform() * total;
  ClassId last = -1;
  for (int b = 0; b < C; ++b) {
    if (b == *prev) continue;
    const double w = (*cfg.transitions)(a, static_cast<std::size_t>(b));
    if (w <= 0.0) continue;
    last = b;
    if (r < w) return b;
    r -= w;
  }
  return last;
}

}  // namespace

SynthVideo generate_one(const SynthConfig& cfg, int index) {
  const Matrix protos = prototypes(cfg);
  Rng rng(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
  const auto d = static_cast<std::size_t>(cfg.feature_dim);

  const int n = rng.uniform_int(cfg.min_segments, cfg.max_segments);
  std::vector<Segment> segs;
  std::optional<ClassId> prev;
  for (int i = 0; i < n; ++i) {
    const ClassId a = next_class(cfg, rng, prev);
    segs.push_back({a, rng.uniform_int(cfg.min_duration, cfg.max_duration)});
    prev = a;
  }
  Segmentation gt(std::move(segs));
  const auto T = static_cast<std::size_t>(gt.total_frames());

  std::vector<pseudolabel::Timestamp> stamps;
  {
    int start = 0;
    for (const Segment& s : gt.segments()) {
      stamps.push_back({start + rng.uniform_int(0, s.duration - 1), s.action});
      start += s.duration;
    }
  }

  std::vector<double> direction(d);
  double norm = 0.0;
  for (double& v : direction) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : direction) v /= norm;

  Matrix feats(T, d);
  const FrameLabeling labels = to_frames(gt);
  for (std::size_t t = 0; t < T; ++t) {
    const double progress = T > 1 ? static_cast<double>(t) / static_cast<double>(T - 1) : 0.0;
    const double shift = cfg.temporal_drift * cfg.prototype_scale * progress;
    const auto proto = protos.row(static_cast<std::size_t>(labels[t]));
    auto row = feats.row(t);
    for (std::size_t j = 0; j < d; ++j) row[j] = proto[j] + shift * direction[j] + cfg.noise_sigma * rng.normal();
  }

  char name[32];
  std::snprintf(name, sizeof name, "video_%03d", index);
  return {name, std::move(feats), std::move(gt), pseudolabel::TimestampAnnotation(std::move(stamps))};
}

std::vector<SynthVideo> generate(const SynthConfig& cfg, int n_videos) {
  cfg.validate();
  if (n_videos < 0) throw InvalidArgument("synth: negative video count");
  std::vector<SynthVideo> out;
  out.reserve(static_cast<std::size_t>(n_videos));
  for (int i = 0; i < n_videos; ++i) out.push_back(generate_one(cfg, i));
  return out;
}

}  // namespace tas::synth
