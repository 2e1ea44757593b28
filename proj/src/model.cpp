#include "tas/model.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "tas/errors.hpp"

namespace tas::model {

using nn::Graph;
using nn::Var;

ModelConfig ModelConfig::benchmark_defaults() {
  ModelConfig c;
  c.input_dim = 2048;
  c.d_model = 64;
  c.num_classes = 48;
  c.enc_layers = 10;
  c.dec_layers = 2;
  c.align_layers = 1;
  c.heads = 1;
  c.ffn_dim = 2048;
  c.align_ffn_dim = 1024;
  c.tau_prime = 0.001;
  c.tau_train = 1.0;
  c.tau_infer = 0.0001;
  c.feature_drop = 0.01;
  c.ca_smoothing_kernel = 0;
  return c;
}

void ModelConfig::validate() const {
  if (input_dim < 1 || d_model < 1 || num_classes < 1 || enc_layers < 1 || dec_layers < 1 || align_layers < 1 ||
      ffn_dim < 1 || align_ffn_dim < 1 || max_decode_len < 2) {
    throw InvalidArgument("model config: dimensions must be >= 1 (max_decode_len >= 2)");
  }
  if (heads != 1) throw InvalidArgument("model config: only single-head attention is supported");
  if (window < 1 || window % 2 == 0) throw InvalidArgument("model config: window must be odd");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) throw InvalidArgument("model config: conv_kernel must be odd");
  if (!(tau_prime > 0.0) || !(tau_train > 0.0) || !(tau_infer > 0.0)) {
    throw InvalidArgument("model config: temperatures must be > 0");
  }
  if (dropout < 0.0 || dropout >= 1.0 || feature_drop < 0.0 || feature_drop >= 1.0) {
    throw InvalidArgument("model config: drop rates must be in [0, 1)");
  }
  if (ca_smoothing_kernel < 0 || (ca_smoothing_kernel > 0 && ca_smoothing_kernel % 2 == 0)) {
    throw InvalidArgument("model config: ca_smoothing_kernel must be 0 or odd");
  }
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
void read_key(const std::map<std::string, std::string>& kv, const std::string& key, T& out) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  const std::string& s = it->second;
  if constexpr (std::is_same_v<T, int>) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) throw InvalidArgument("config: bad integer for " + key);
  } else {
    try {
      std::size_t used = 0;
      out = std::stod(s, &used);
      if (used != s.size()) throw InvalidArgument("config: bad number for " + key);
    } catch (const std::logic_error&) {
      throw InvalidArgument("config: bad number for " + key);
    }
  }
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {
      {"input_dim", std::to_string(input_dim)},
      {"d_model", std::to_string(d_model)},
      {"num_classes", std::to_string(num_classes)},
      {"enc_layers", std::to_string(enc_layers)},
      {"dec_layers", std::to_string(dec_layers)},
      {"align_layers", std::to_string(align_layers)},
      {"heads", std::to_string(heads)},
      {"ffn_dim", std::to_string(ffn_dim)},
      {"align_ffn_dim", std::to_string(align_ffn_dim)},
      {"window", std::to_string(window)},
      {"conv_kernel", std::to_string(conv_kernel)},
      {"tau_prime", fmt_double(tau_prime)},
      {"tau_train", fmt_double(tau_train)},
      {"tau_infer", fmt_double(tau_infer)},
      {"dropout", fmt_double(dropout)},
      {"feature_drop", fmt_double(feature_drop)},
      {"ca_smoothing_kernel", std::to_string(ca_smoothing_kernel)},
      {"max_decode_len", std::to_string(max_decode_len)},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  read_key(kv, "input_dim", c.input_dim);
  read_key(kv, "d_model", c.d_model);
  read_key(kv, "num_classes", c.num_classes);
  read_key(kv, "enc_layers", c.enc_layers);
  read_key(kv, "dec_layers", c.dec_layers);
  read_key(kv, "align_layers", c.align_layers);
  read_key(kv, "heads", c.heads);
  read_key(kv, "ffn_dim", c.ffn_dim);
  read_key(kv, "align_ffn_dim", c.align_ffn_dim);
  read_key(kv, "window", c.window);
  read_key(kv, "conv_kernel", c.conv_kernel);
  read_key(kv, "tau_prime", c.tau_prime);
  read_key(kv, "tau_train", c.tau_train);
  read_key(kv, "tau_infer", c.tau_infer);
  read_key(kv, "dropout", c.dropout);
  read_key(kv, "feature_drop", c.feature_drop);
  read_key(kv, "ca_smoothing_kernel", c.ca_smoothing_kernel);
  read_key(kv, "max_decode_len", c.max_decode_len);
  c.validate();
  return c;
}

Matrix positional_encoding(std::size_t len, std::size_t dim) {
  Matrix pe(len, dim);
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  init_parameters(seed);
}

Model::Model(ModelConfig cfg, nn::ParameterSet params) : cfg_(std::move(cfg)) {
  cfg_.validate();
  // Shapes must match a freshly initialised model.
  Model reference(cfg_, 0);
  const auto& want = reference.params().all();
  if (want.size() != params.all().size()) throw InvalidArgument("parameter count does not match config");
  for (const auto& p : want) {
    if (!params.contains(p.name)) throw InvalidArgument("missing parameter: " + p.name);
    if (!params.at(p.name).value.same_shape(p.value)) throw InvalidArgument("parameter shape mismatch: " + p.name);
  }
  // Re-add in canonical order.
  for (const auto& p : want) params_.add(p.name, params.at(p.name).value);
}

void Model::set_max_decode_len(int n) {
  if (n < 2) throw InvalidArgument("max_decode_len must be >= 2");
  cfg_.max_decode_len = n;
}

void Model::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  const auto D = static_cast<std::size_t>(cfg_.d_model);
  const auto C = static_cast<std::size_t>(cfg_.num_classes);
  auto weight = [&](const std::string& name, std::size_t in, std::size_t out, std::size_t fan_in = 0) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in ? fan_in : in));
    Matrix m(in, out);
    for (double& v : m.data()) v = rng.uniform(-a, a);
    params_.add(name, std::move(m));
  };
  auto bias = [&](const std::string& name, std::size_t n) { params_.add(name, Matrix(1, n)); };
  auto norm = [&](const std::string& name) {
    params_.add(name + ".g", Matrix(1, D, 1.0));
    params_.add(name + ".b", Matrix(1, D));
  };
  auto attention = [&](const std::string& name) {
    for (const char* w : {"Wq", "Wk", "Wv", "Wo"}) weight(name + "." + w, D, D);
  };
  auto ffn = [&](const std::string& name, std::size_t hidden) {
    weight(name + ".W1", D, hidden);
    bias(name + ".b1", hidden);
    weight(name + ".W2", hidden, D);
    bias(name + ".b2", D);
  };
  auto conv = [&](const std::string& name) {
    for (int k = 0; k < cfg_.conv_kernel; ++k) weight(name + ".W" + std::to_string(k), D, D, D * static_cast<std::size_t>(cfg_.conv_kernel));
    bias(name + ".b", D);
  };

  weight("enc.in.W", static_cast<std::size_t>(cfg_.input_dim), D);
  bias("enc.in.b", D);
  for (int i = 0; i < cfg_.enc_layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    conv(p + ".conv1");
    attention(p + ".att");
    conv(p + ".conv2");
  }
  weight("enc.head.W", D, C);
  bias("enc.head.b", C);

  {
    Matrix emb(C + 1, D);
    for (double& v : emb.data()) v = rng.uniform(-1.0, 1.0);
    params_.add("dec.emb", std::move(emb));
  }
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    attention(p + ".self");
    norm(p + ".ln1");
    attention(p + ".cross");
    norm(p + ".ln2");
    ffn(p + ".ffn", static_cast<std::size_t>(cfg_.ffn_dim));
    norm(p + ".ln3");
  }
  weight("dec.head.W", D, C + 1);
  bias("dec.head.b", C + 1);

  for (int l = 0; l < cfg_.align_layers; ++l) {
    const std::string p = "align." + std::to_string(l);
    attention(p + ".cross");
    norm(p + ".ln1");
    ffn(p + ".ffn", static_cast<std::size_t>(cfg_.align_ffn_dim));
    norm(p + ".ln2");
  }
}

namespace {

struct Attention {
  Var out;
  Var scores;  // pre-softmax, masked
};

Attention attend(Graph& g, const nn::ParameterSet& ps, const std::string& name, Var queries, Var keys,
                 const Matrix* mask) {
  const Var q = g.matmul(queries, g.param(ps.at(name + ".Wq")));
  const Var k = g.matmul(keys, g.param(ps.at(name + ".Wk")));
  const Var v = g.matmul(keys, g.param(ps.at(name + ".Wv")));
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.value(q).cols()));
  Var s = g.scale(g.matmul_nt(q, k), scale);
  if (mask) s = g.add_const(s, *mask);
  const Var p = g.softmax_rows(s);
  return {g.matmul(g.matmul(p, v), g.param(ps.at(name + ".Wo"))), s};
}

Var layer_norm(Graph& g, const nn::ParameterSet& ps, const std::string& name, Var x) {
  return g.layer_norm(x, g.param(ps.at(name + ".g")), g.param(ps.at(name + ".b")));
}

Var feed_forward(Graph& g, const nn::ParameterSet& ps, const std::string& name, Var x) {
  Var h = g.add_row(g.matmul(x, g.param(ps.at(name + ".W1"))), g.param(ps.at(name + ".b1")));
  h = g.gelu(h);
  return g.add_row(g.matmul(h, g.param(ps.at(name + ".W2"))), g.param(ps.at(name + ".b2")));
}

Var linear(Graph& g, const nn::ParameterSet& ps, const std::string& name, Var x) {
  return g.add_row(g.matmul(x, g.param(ps.at(name + ".W"))), g.param(ps.at(name + ".b")));
}

// Same-length dilated temporal convolution with zero padding:
// out[t] = b + sum_k x[t + (k - K/2) * dilation] W_k.
Var dilated_conv(Graph& g, const nn::ParameterSet& ps, const std::string& name, Var x, int kernel, int dilation) {
  Var acc;
  for (int k = 0; k < kernel; ++k) {
    const int offset = (k - kernel / 2) * dilation;
    const Var shifted = offset == 0 ? x : g.shift_rows(x, offset);
    const Var term = g.matmul(shifted, g.param(ps.at(name + ".W" + std::to_string(k))));
    acc = acc.valid() ? g.add(acc, term) : term;
  }
  return g.add_row(acc, g.param(ps.at(name + ".b")));
}

Matrix band_mask(std::size_t T, int window) {
  const long half = window / 2;
  Matrix m(T, T, -std::numeric_limits<double>::infinity());
  for (long t = 0; t < static_cast<long>(T); ++t) {
    const long lo = std::max(0L, t - half), hi = std::min(static_cast<long>(T) - 1, t + half);
    for (long s = lo; s <= hi; ++s) m(static_cast<std::size_t>(t), static_cast<std::size_t>(s)) = 0.0;
  }
  return m;
}

Matrix causal_mask(std::size_t L) {
  Matrix m(L, L, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) m(i, j) = -std::numeric_limits<double>::infinity();
  return m;
}

}  // namespace

Var Model::dropout(Graph& g, Var x, const ForwardContext& ctx) const {
  if (!ctx.augment || !ctx.rng || cfg_.dropout <= 0.0) return x;
  const Matrix& v = g.value(x);
  Matrix mask(v.rows(), v.cols());
  const double keep = 1.0 - cfg_.dropout;
  for (double& m : mask.data()) m = ctx.rng->bernoulli(keep) ? 1.0 / keep : 0.0;
  return g.mul_const(x, mask);
}

EncoderVars Model::build_encoder(Graph& g, const FeatureSequence& x, const ForwardContext& ctx) const {
  if (x.rows() == 0) throw InvalidArgument("encode: empty feature sequence");
  if (x.cols() != static_cast<std::size_t>(cfg_.input_dim)) {
    throw InvalidArgument("encode: expected " + std::to_string(cfg_.input_dim) + " feature columns, got " +
                          std::to_string(x.cols()));
  }
  Matrix input = x;
  if (ctx.augment && ctx.rng && cfg_.feature_drop > 0.0) {
    // Zero whole frames so labels stay aligned.
    for (std::size_t t = 0; t < input.rows(); ++t)
      if (ctx.rng->bernoulli(cfg_.feature_drop))
        for (double& v : input.row(t)) v = 0.0;
  }
  const std::size_t T = x.rows();
  const Matrix mask = band_mask(T, cfg_.window);

  Var h = linear(g, params_, "enc.in", g.constant(std::move(input)));
  for (int i = 0; i < cfg_.enc_layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    const int dilation = 1 << i;
    Var out = g.gelu(dilated_conv(g, params_, p + ".conv1", h, cfg_.conv_kernel, dilation));
    out = g.add(out, attend(g, params_, p + ".att", out, out, &mask).out);
    out = dilated_conv(g, params_, p + ".conv2", out, cfg_.conv_kernel, dilation);
    h = g.add(h, dropout(g, out, ctx));
  }
  return {h, linear(g, params_, "enc.head", h)};
}

DecoderVars Model::build_decoder(Graph& g, Var encoded, std::span<const int> tokens,
                                 const ForwardContext& ctx) const {
  if (tokens.empty() || tokens[0] != sos_token()) throw InvalidArgument("decoder input must start with SOS");
  const std::size_t L = tokens.size();
  const auto D = static_cast<std::size_t>(cfg_.d_model);
  for (int tok : tokens.subspan(1)) {
    if (tok < 0 || tok >= cfg_.num_classes) throw InvalidArgument("decoder token outside class range");
  }

  Var y = g.add_const(g.gather_rows(g.param(params_.at("dec.emb")), tokens), positional_encoding(L, D));
  const Matrix mask = causal_mask(L);
  Var last_cross_scores;
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    Var s = attend(g, params_, p + ".self", y, y, &mask).out;
    y = layer_norm(g, params_, p + ".ln1", g.add(y, dropout(g, s, ctx)));
    Attention cross = attend(g, params_, p + ".cross", y, encoded, nullptr);
    last_cross_scores = cross.scores;
    y = layer_norm(g, params_, p + ".ln2", g.add(y, dropout(g, cross.out, ctx)));
    Var f = feed_forward(g, params_, p + ".ffn", y);
    y = layer_norm(g, params_, p + ".ln3", g.add(y, dropout(g, f, ctx)));
  }
  DecoderVars out;
  out.features = y;
  out.logits = linear(g, params_, "dec.head", y);

  const std::size_t N = L - 1;  // segments; the last position predicts EOS
  if (N > 0) {
    // Final-layer cross-attention, re-oriented to frames x segments.
    const Var frames_by_segments = g.transpose(g.slice_rows(last_cross_scores, 0, N));
    out.ca_scores = g.scale(frames_by_segments, 1.0 / cfg_.tau_prime);
    out.ca_probs = g.softmax_rows(out.ca_scores);
    if (cfg_.ca_smoothing_kernel > 0) {
      out.ca_probs = g.normalize_rows(g.avg_pool_rows(out.ca_probs, cfg_.ca_smoothing_kernel));
    }
  }
  return out;
}

Var Model::build_alignment(Graph& g, Var encoded, Var segment_features, double tau, Var* aligned) const {
  if (!(tau > 0.0)) throw InvalidArgument("align: tau must be > 0");
  // Copy shapes: adding nodes may move earlier values.
  const std::size_t T = g.value(encoded).rows(), N = g.value(segment_features).rows();
  if (N == 0) throw InvalidArgument("align: no segments");
  const auto D = static_cast<std::size_t>(cfg_.d_model);
  if (g.value(encoded).cols() != D || g.value(segment_features).cols() != D) {
    throw InvalidArgument("align: feature width mismatch");
  }

  Var q = g.add_const(encoded, positional_encoding(T, D));
  const Var kv = g.add_const(segment_features, positional_encoding(N, D));
  for (int l = 0; l < cfg_.align_layers; ++l) {
    const std::string p = "align." + std::to_string(l);
    Var a = layer_norm(g, params_, p + ".ln1", g.add(q, attend(g, params_, p + ".cross", q, kv, nullptr).out));
    q = layer_norm(g, params_, p + ".ln2", g.add(a, feed_forward(g, params_, p + ".ffn", a)));
  }
  if (aligned) *aligned = q;
  return g.scale(g.matmul_nt(q, kv), 1.0 / tau);
}

EncoderOutput Model::encode(const FeatureSequence& x) const {
  Graph g;
  const EncoderVars v = build_encoder(g, x, {});
  return {g.value(v.features), g.value(v.frame_logits)};
}

DecoderOutput Model::decode(const Matrix& encoded, std::span<const ClassId> segments) const {
  std::vector<int> tokens{sos_token()};
  tokens.insert(tokens.end(), segments.begin(), segments.end());
  Graph g;
  const DecoderVars v = build_decoder(g, g.constant(encoded), tokens, {});
  DecoderOutput out;
  const std::size_t N = segments.size();
  const Matrix& feats = g.value(v.features);
  out.features = Matrix(N, feats.cols(),
                        std::vector<double>(feats.data().begin(), feats.data().begin() + static_cast<long>(N * feats.cols())));
  out.segment_logits = g.value(v.logits);
  out.cross_attention = N > 0 ? g.value(v.ca_probs) : Matrix(encoded.rows(), 0);
  return out;
}

DecodeStep Model::decode_step(const Matrix& encoded, std::span<const int> prefix) const {
  if (prefix.size() > static_cast<std::size_t>(cfg_.max_decode_len)) {
    throw DecodeOverflow("decode prefix of length " + std::to_string(prefix.size()) + " exceeds max_decode_len " +
                         std::to_string(cfg_.max_decode_len));
  }
  Graph g;
  const Var e = g.constant(encoded);
  const DecoderVars v = build_decoder(g, e, prefix, {});
  const Matrix& logits = g.value(v.logits);
  DecodeStep step;
  const auto last = logits.row(logits.rows() - 1);
  step.logits.assign(last.begin(), last.end());
  step.cross_attention = Matrix(prefix.size() - 1, encoded.rows());
  if (prefix.size() > 1) {
    const Matrix ca = transpose(g.value(v.ca_scores));  // N x T, divided by tau'
    for (std::size_t i = 0; i + 1 < prefix.size(); ++i) {
      auto row = step.cross_attention.row(i);
      for (std::size_t t = 0; t < encoded.rows(); ++t) row[t] = ca(i, t) * cfg_.tau_prime;
      softmax_inplace(row);
    }
  }
  return step;
}

std::vector<ClassId> Model::greedy_decode(const Matrix& encoded) const {
  std::vector<int> prefix{sos_token()};
  std::vector<ClassId> out;
  while (true) {
    const DecodeStep step = decode_step(encoded, prefix);
    std::size_t best = argmax(step.logits);
    if (static_cast<int>(best) == eos_class()) {
      if (!out.empty()) break;
      // An empty transcript is not a segmentation; take the best real class.
      best = argmax(std::span<const double>(step.logits).first(static_cast<std::size_t>(cfg_.num_classes)));
    }
    out.push_back(static_cast<ClassId>(best));
    prefix.push_back(static_cast<int>(best));
    if (prefix.size() >= static_cast<std::size_t>(cfg_.max_decode_len)) break;
  }
  return out;
}

AlignmentOutput Model::align(const Matrix& encoded, const Matrix& segment_features, double tau) const {
  if (segment_features.rows() == 0) throw InvalidArgument("align: N must be >= 1");
  Graph g;
  Var aligned;
  const Var scores = build_alignment(g, g.constant(encoded), g.constant(segment_features), tau, &aligned);
  return {g.value(aligned), softmax_rows(g.value(scores))};
}

}  // namespace tas::model
