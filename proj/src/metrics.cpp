#include "tas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include <json.hpp>

#include "tas/errors.hpp"

namespace tas::metrics {
namespace {

std::string f1_key(double threshold) {
  return "f1@" + std::to_string(static_cast<int>(std::lround(threshold * 100.0)));
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Drops segments of the ignored class; the remaining segments keep their
// absolute frame positions.
struct Span {
  ClassId action;
  int start;
  int end;  // exclusive
};

std::vector<Span> spans_of(const Segmentation& seg, std::optional<ClassId> ignore) {
  std::vector<Span> out;
  int pos = 0;
  const Segmentation merged = merge_repeats(seg);
  for (const Segment& s : merged.segments()) {
    if (!ignore || s.action != *ignore) out.push_back({s.action, pos, pos + s.duration});
    pos += s.duration;
  }
  return out;
}

MatchCounts match_spans(const std::vector<Span>& pred, const std::vector<Span>& gt, double threshold) {
  // Bipartite graph pred -> gt, edges where classes agree and IoU clears the bar.
  std::vector<std::vector<int>> adj(pred.size());
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (pred[p].action != gt[g].action) continue;
      if (iou(pred[p].start, pred[p].end, gt[g].start, gt[g].end) >= threshold) {
        adj[p].push_back(static_cast<int>(g));
      }
    }
  }
  // Kuhn's augmenting paths; visiting order is index order, so the result is
  // deterministic.
  std::vector<int> owner(gt.size(), -1);
  std::vector<char> seen;
  std::function<bool(int)> augment = [&](int p) {
    for (int g : adj[static_cast<std::size_t>(p)]) {
      if (seen[static_cast<std::size_t>(g)]) continue;
      seen[static_cast<std::size_t>(g)] = 1;
      if (owner[static_cast<std::size_t>(g)] < 0 || augment(owner[static_cast<std::size_t>(g)])) {
        owner[static_cast<std::size_t>(g)] = p;
        return true;
      }
    }
    return false;
  };
  int matched = 0;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    seen.assign(gt.size(), 0);
    if (augment(static_cast<int>(p))) ++matched;
  }
  MatchCounts c;
  c.tp = matched;
  c.fp = static_cast<int>(pred.size()) - matched;
  c.fn = static_cast<int>(gt.size()) - matched;
  return c;
}

}  // namespace

std::string MetricReport::to_key_value() const {
  std::string out = "acc=" + fmt2(acc) + "\nedit=" + fmt2(edit) + "\n";
  for (const auto& [k, v] : f1) out += f1_key(k) + "=" + fmt2(v) + "\n";
  return out;
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["acc"] = round2(acc);
  j["edit"] = round2(edit);
  nlohmann::ordered_json f;
  for (const auto& [k, v] : f1) f[f1_key(k)] = round2(v);
  j["f1"] = f;
  return j.dump(2) + "\n";
}

double f1_from_counts(const MatchCounts& c) {
  const double p_den = c.tp + c.fp;
  const double r_den = c.tp + c.fn;
  const double precision = p_den > 0 ? c.tp / p_den : 0.0;
  const double recall = r_den > 0 ? c.tp / r_den : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double levenshtein(const std::vector<ClassId>& a, const std::vector<ClassId>& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double frame_accuracy(const FrameLabeling& pred, const FrameLabeling& gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("frame_accuracy: length mismatch");
  std::size_t hit = 0;
  for (std::size_t t = 0; t < gt.size(); ++t) hit += pred[t] == gt[t];
  return 100.0 * static_cast<double>(hit) / static_cast<double>(gt.size());
}

double edit_score(const std::vector<ClassId>& pred, const Transcript& gt) {
  const double denom = static_cast<double>(std::max(pred.size(), gt.size()));
  const double score = 100.0 * (1.0 - levenshtein(pred, gt.actions()) / denom);
  return std::clamp(score, 0.0, 100.0);
}

double edit_score(const Transcript& pred, const Transcript& gt) { return edit_score(pred.actions(), gt); }

double iou(int a_start, int a_end, int b_start, int b_end) {
  const int inter = std::max(0, std::min(a_end, b_end) - std::max(a_start, b_start));
  const int uni = std::max(a_end, b_end) - std::min(a_start, b_start);
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

MatchCounts match_segments(const Segmentation& pred, const Segmentation& gt, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("IoU threshold must be in (0,1)");
  if (pred.total_frames() != gt.total_frames()) throw InvalidArgument("f1: total_frames mismatch");
  return match_spans(spans_of(pred, std::nullopt), spans_of(gt, std::nullopt), threshold);
}

double f1_at(const Segmentation& pred, const Segmentation& gt, double threshold) {
  return f1_from_counts(match_segments(pred, gt, threshold));
}

MetricReport VideoScores::report() const {
  MetricReport r;
  r.acc = frames > 0 ? 100.0 * correct / frames : 0.0;
  r.edit = edit;
  for (std::size_t k = 0; k < kF1Thresholds.size(); ++k) r.f1[kF1Thresholds[k]] = f1_from_counts(counts[k]);
  return r;
}

VideoScores score_video(const FrameLabeling& pred, const FrameLabeling& gt, const EvalOptions& opt) {
  if (pred.size() != gt.size()) throw InvalidArgument("score_video: length mismatch");
  VideoScores v;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    if (opt.ignore && gt[t] == *opt.ignore) continue;
    ++v.frames;
    v.correct += pred[t] == gt[t];
  }
  const auto pspans = spans_of(to_segments(pred), opt.ignore);
  const auto gspans = spans_of(to_segments(gt), opt.ignore);
  std::vector<ClassId> ptr, gtr;
  for (const Span& s : pspans) ptr.push_back(s.action);
  for (const Span& s : gspans) gtr.push_back(s.action);
  if (gtr.empty()) {
    v.edit = ptr.empty() ? 100.0 : 0.0;
  } else {
    v.edit = edit_score(ptr, Transcript(gtr));
  }
  for (std::size_t k = 0; k < kF1Thresholds.size(); ++k) v.counts[k] = match_spans(pspans, gspans, kF1Thresholds[k]);
  return v;
}

void Aggregate::add(const VideoScores& v) {
  frames_ += v.frames;
  correct_ += v.correct;
  edit_sum_ += v.edit;
  ++videos_;
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += v.counts[k];
}

MetricReport Aggregate::report() const {
  MetricReport r;
  r.acc = frames_ > 0 ? 100.0 * static_cast<double>(correct_) / static_cast<double>(frames_) : 0.0;
  r.edit = videos_ > 0 ? edit_sum_ / videos_ : 0.0;
  for (std::size_t k = 0; k < kF1Thresholds.size(); ++k) r.f1[kF1Thresholds[k]] = f1_from_counts(counts_[k]);
  return r;
}

}  // namespace tas::metrics
