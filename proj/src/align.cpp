#include "tas/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tas/errors.hpp"

namespace tas::align {

void AlignmentProblem::validate() const {
  if (log_probs.rows() == 0 || log_probs.cols() == 0) throw InvalidArgument("alignment: empty log-prob matrix");
  if (stride < 1) throw InvalidArgument("alignment: stride must be >= 1");
  for (ClassId a : transcript.actions()) {
    if (a < 0 || static_cast<std::size_t>(a) >= log_probs.cols()) {
      throw InvalidArgument("alignment: transcript class " + std::to_string(a) + " outside log-prob columns");
    }
  }
  for (double v : log_probs.data()) {
    if (std::isnan(v)) throw NumericError("alignment: NaN in log-probs");
  }
}

double score(const Matrix& log_probs, const Segmentation& seg) {
  if (static_cast<std::size_t>(seg.total_frames()) != log_probs.rows()) {
    throw InvalidArgument("score: segmentation length does not match log-probs");
  }
  double total = 0.0;
  std::size_t t = 0;
  for (const Segment& s : seg.segments()) {
    for (int k = 0; k < s.duration; ++k, ++t) total += log_probs(t, static_cast<std::size_t>(s.action));
  }
  return total;
}

Segmentation viterbi_align(const AlignmentProblem& p) {
  p.validate();
  const std::size_t T = p.log_probs.rows();
  const std::size_t N = p.transcript.size();
  const auto stride = static_cast<std::size_t>(p.stride);
  const std::size_t B = (T + stride - 1) / stride;
  if (N > B) {
    throw Infeasible("transcript of " + std::to_string(N) + " segments does not fit " + std::to_string(B) +
                     " frame blocks");
  }

  // Block sums per transcript entry.
  Matrix block(B, N);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto c = static_cast<std::size_t>(p.transcript[i]);
      double s = 0.0;
      for (std::size_t t = b * stride; t < std::min(T, (b + 1) * stride); ++t) s += p.log_probs(t, c);
      block(b, i) = s;
    }
  }

  // value(b, i): best score with block b inside segment i. `entered(b, i)`
  // records that segment i starts at block b.
  const double kNegInf = -std::numeric_limits<double>::infinity();
  Matrix value(B, N, kNegInf);
  std::vector<char> entered(B * N, 0);
  value(0, 0) = block(0, 0);
  entered[0] = 1;
  for (std::size_t b = 1; b < B; ++b) {
    const std::size_t hi = std::min(N - 1, b);
    // Segment i needs at least N - 1 - i blocks after it.
    const std::size_t lo = (B - b < N) ? N - (B - b) : 0;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double stay = value(b - 1, i);
      const double enter = i > 0 ? value(b - 1, i - 1) : kNegInf;
      // On ties stay, which keeps the boundary earlier.
      if (enter > stay) {
        value(b, i) = enter + block(b, i);
        entered[b * N + i] = 1;
      } else {
        value(b, i) = stay + block(b, i);
      }
    }
  }
  if (!std::isfinite(value(B - 1, N - 1))) throw NumericError("viterbi: no finite path");

  std::vector<std::size_t> start_block(N, 0);
  std::size_t i = N - 1;
  for (std::size_t b = B; b-- > 0;) {
    if (entered[b * N + i]) {
      start_block[i] = b;
      if (i == 0) break;
      --i;
    }
  }
  std::vector<Segment> segs;
  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t begin = start_block[k] * stride;
    const std::size_t end = k + 1 < N ? start_block[k + 1] * stride : T;
    segs.push_back({p.transcript[k], static_cast<int>(end - begin)});
  }
  return Segmentation(std::move(segs));
}

void FifaConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("fifa: epochs must be >= 0");
  if (!(sharpness > 0.0) || !(step_size > 0.0)) throw InvalidArgument("fifa: sharpness and step size must be > 0");
  if (init_durations) {
    for (double u : *init_durations) {
      if (!(u > 0.0) || !std::isfinite(u)) throw InvalidArgument("fifa: initial durations must be positive");
    }
  }
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double fifa_energy(const Matrix& log_probs, const Transcript& tr, std::span<const double> durations,
                   double sharpness, std::vector<double>* grad_durations) {
  const std::size_t T = log_probs.rows();
  const std::size_t N = tr.size();
  if (durations.size() != N) throw InvalidArgument("fifa: one duration per transcript entry required");
  const double inv_t = 1.0 / static_cast<double>(T);

  std::vector<double> g_start(N, 0.0), g_end(N, 0.0);
  double energy = 0.0;
  double start = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double end = start + durations[i];
    const auto c = static_cast<std::size_t>(tr[i]);
    for (std::size_t t = 0; t < T; ++t) {
      const double time = (static_cast<double>(t) + 0.5) * inv_t;
      const double sa = sigmoid(sharpness * (time - start * inv_t));
      const double sb = sigmoid(sharpness * (time - end * inv_t));
      const double lp = log_probs(t, c);
      energy -= (sa - sb) * lp;
      // d(mask)/d(start) = -k/T sa(1-sa); d(mask)/d(end) = k/T sb(1-sb)
      g_start[i] += lp * sharpness * inv_t * sa * (1.0 - sa);
      g_end[i] -= lp * sharpness * inv_t * sb * (1.0 - sb);
    }
    start = end;
  }
  if (grad_durations) {
    // start_i = sum_{j<i} u_j, end_i = sum_{j<=i} u_j
    grad_durations->assign(N, 0.0);
    double suffix_start = 0.0, suffix_end = 0.0;
    for (std::size_t j = N; j-- > 0;) {
      suffix_end += g_end[j];
      (*grad_durations)[j] = suffix_start + suffix_end;
      suffix_start += g_start[j];
    }
  }
  return energy;
}

std::vector<int> round_durations_nonempty(std::span<const double> durations, int total) {
  if (static_cast<int>(durations.size()) > total) throw Infeasible("more segments than frames");
  std::vector<int> out = round_durations(durations, total);
  for (int& d : out) {
    if (d > 0) continue;
    const auto donor = std::max_element(out.begin(), out.end());  // first maximum
    --*donor;
    d = 1;
  }
  return out;
}

FifaResult fifa_align_full(const AlignmentProblem& p, const FifaConfig& cfg) {
  p.validate();
  cfg.validate();
  const std::size_t T = p.log_probs.rows();
  const std::size_t N = p.transcript.size();
  if (N > T) throw Infeasible("transcript of " + std::to_string(N) + " segments does not fit " + std::to_string(T) + " frames");
  const double Td = static_cast<double>(T);

  // Every segment keeps one frame; the rest is shared out by softmax.
  const double free = Td - static_cast<double>(N);
  std::vector<double> logits(N, 0.0);
  if (cfg.init_durations) {
    if (cfg.init_durations->size() != N) throw InvalidArgument("fifa: init_durations size mismatch");
    double sum = 0.0;
    for (double u : *cfg.init_durations) sum += u;
    for (std::size_t i = 0; i < N; ++i) {
      const double share = (*cfg.init_durations)[i] * Td / sum - 1.0;
      logits[i] = std::log(std::max(share, 1e-3));
    }
  }
  auto durations_of = [&](const std::vector<double>& l) {
    std::vector<double> u = l;
    softmax_inplace(u);
    for (double& v : u) v = 1.0 + free * v;
    return u;
  };

  std::vector<double> trace;
  int halvings = 0;
  std::vector<double> u = durations_of(logits);
  std::vector<double> g;
  double energy = fifa_energy(p.log_probs, p.transcript, u, cfg.sharpness, &g);
  if (!std::isfinite(energy)) throw NumericError("fifa: non-finite energy");
  trace.push_back(energy);
  double step = cfg.step_size;
  for (int it = 0; it < cfg.epochs; ++it) {
    if (free <= 0.0) break;
    // Chain rule through u = 1 + (T - N) softmax(l).
    double mean = 0.0;
    for (std::size_t k = 0; k < N; ++k) mean += ((u[k] - 1.0) / free) * g[k];
    std::vector<double> candidate = logits;
    for (std::size_t k = 0; k < N; ++k) candidate[k] -= step * (u[k] - 1.0) * (g[k] - mean);
    std::vector<double> u_new = durations_of(candidate);
    std::vector<double> g_new;
    const double e_new = fifa_energy(p.log_probs, p.transcript, u_new, cfg.sharpness, &g_new);
    if (std::isnan(e_new)) throw NumericError("fifa: NaN energy");
    if (e_new > energy) {
      step *= 0.5;
      ++halvings;
      if (step < 1e-12) break;
      continue;
    }
    logits = std::move(candidate);
    u = std::move(u_new);
    g = std::move(g_new);
    energy = e_new;
    trace.push_back(energy);
  }

  const std::vector<int> ints = round_durations_nonempty(u, static_cast<int>(T));
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < N; ++i) segs.push_back({p.transcript[i], ints[i]});
  return {Segmentation(std::move(segs)), std::move(u), std::move(trace), halvings};
}

Segmentation fifa_align(const AlignmentProblem& p, const FifaConfig& cfg) { return fifa_align_full(p, cfg).segmentation; }

Transcript extract_transcript(const Matrix& frame_logits) {
  if (frame_logits.rows() == 0 || frame_logits.cols() == 0) throw InvalidArgument("extract_transcript: empty logits");
  std::vector<ClassId> labels;
  for (std::size_t t = 0; t < frame_logits.rows(); ++t) labels.push_back(static_cast<ClassId>(argmax(frame_logits.row(t))));
  return transcript_of(to_segments(FrameLabeling(std::move(labels))));
}

}  // namespace tas::align
