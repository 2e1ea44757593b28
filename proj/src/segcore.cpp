#include "tas/segcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tas/errors.hpp"

namespace tas {

FrameLabeling::FrameLabeling(std::vector<ClassId> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw InvalidArgument("frame labeling is empty");
  for (ClassId c : labels_) {
    if (c < 0) throw InvalidArgument("negative class id in frame labeling");
  }
}

void FrameLabeling::check_classes(int num_classes) const {
  for (ClassId c : labels_) {
    if (c >= num_classes) {
      throw InvalidArgument("class id " + std::to_string(c) + " >= number of classes " +
                            std::to_string(num_classes));
    }
  }
}

Segmentation::Segmentation(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw InvalidArgument("segmentation is empty");
  long total = 0;
  for (const Segment& s : segments_) {
    if (s.duration < 1) throw InvalidArgument("segment duration must be >= 1");
    if (s.action < 0) throw InvalidArgument("negative class id in segmentation");
    total += s.duration;
  }
  total_frames_ = static_cast<int>(total);
}

std::vector<int> Segmentation::starts() const {
  std::vector<int> out;
  out.reserve(segments_.size());
  int pos = 0;
  for (const Segment& s : segments_) {
    out.push_back(pos);
    pos += s.duration;
  }
  return out;
}

Transcript::Transcript(std::vector<ClassId> actions) : actions_(std::move(actions)) {
  if (actions_.empty()) throw InvalidArgument("transcript is empty");
  for (ClassId c : actions_) {
    if (c < 0) throw InvalidArgument("negative class id in transcript");
  }
}

ClassCatalog::ClassCatalog(std::vector<std::string> names, std::optional<ClassId> background)
    : names_(std::move(names)), background_(background) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw InvalidArgument("empty class name in catalog");
    if (!index_.emplace(names_[i], static_cast<ClassId>(i)).second) {
      throw InvalidArgument("duplicate class name in catalog: " + names_[i]);
    }
  }
  if (background_ && (*background_ < 0 || static_cast<std::size_t>(*background_) >= names_.size())) {
    throw InvalidArgument("background id outside catalog");
  }
}

const std::string& ClassCatalog::name(ClassId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
    throw InvalidArgument("class id " + std::to_string(id) + " not in catalog");
  }
  return names_[static_cast<std::size_t>(id)];
}

std::optional<ClassId> ClassCatalog::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ClassId ClassCatalog::id(std::string_view name) const {
  auto found = find(name);
  if (!found) throw InvalidArgument("unknown class name: " + std::string(name));
  return *found;
}

Segmentation to_segments(const FrameLabeling& labels) {
  const auto& y = labels.labels();
  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < y.size()) {
    std::size_t j = i;
    while (j < y.size() && y[j] == y[i]) ++j;
    out.push_back({y[i], static_cast<int>(j - i)});
    i = j;
  }
  return Segmentation(std::move(out));
}

FrameLabeling to_frames(const Segmentation& seg) {
  std::vector<ClassId> y;
  y.reserve(static_cast<std::size_t>(seg.total_frames()));
  for (const Segment& s : seg.segments()) y.insert(y.end(), static_cast<std::size_t>(s.duration), s.action);
  return FrameLabeling(std::move(y));
}

std::vector<ClassId> actions_of(const Segmentation& seg) {
  std::vector<ClassId> out;
  out.reserve(seg.size());
  for (const Segment& s : seg.segments()) out.push_back(s.action);
  return out;
}

Transcript transcript_of(const Segmentation& seg) { return Transcript(actions_of(merge_repeats(seg))); }

Segmentation merge_repeats(const Segmentation& seg) {
  std::vector<Segment> out;
  for (const Segment& s : seg.segments()) {
    if (!out.empty() && out.back().action == s.action) {
      out.back().duration += s.duration;
    } else {
      out.push_back(s);
    }
  }
  return Segmentation(std::move(out));
}

Transcript merge_repeats(const Transcript& tr) {
  std::vector<ClassId> out;
  for (ClassId c : tr.actions()) {
    if (out.empty() || out.back() != c) out.push_back(c);
  }
  return Transcript(std::move(out));
}

int split_limit(double max_fraction, int total_frames) {
  if (!(max_fraction > 0.0)) throw InvalidArgument("split fraction must be > 0");
  // The epsilon absorbs products like 0.17 * 100 = 17.000000000000004.
  const double raw = max_fraction * static_cast<double>(total_frames);
  const int limit = static_cast<int>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::max(1, limit);
}

Segmentation split_segments(const Segmentation& seg, double max_fraction) {
  const int limit = split_limit(max_fraction, seg.total_frames());
  std::vector<Segment> out;
  out.reserve(seg.size());
  for (const Segment& s : seg.segments()) {
    const int pieces = (s.duration + limit - 1) / limit;
    const int base = s.duration / pieces;
    const int extra = s.duration % pieces;
    for (int k = 0; k < pieces; ++k) out.push_back({s.action, base + (k < extra ? 1 : 0)});
  }
  return Segmentation(std::move(out));
}

std::vector<int> round_durations(std::span<const double> durations, int total) {
  if (durations.empty()) throw InvalidArgument("round_durations: no durations");
  if (total < 0) throw InvalidArgument("round_durations: negative total");
  double sum = 0.0;
  for (double d : durations) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("round_durations: invalid duration");
    sum += d;
  }
  const std::size_t n = durations.size();
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = sum > 0.0 ? durations[i] * total / sum : static_cast<double>(total) / static_cast<double>(n);
  }
  std::vector<int> out(n);
  std::vector<std::size_t> order(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(std::floor(scaled[i]));
    assigned += out[i];
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scaled[a] - std::floor(scaled[a]) > scaled[b] - std::floor(scaled[b]);
  });
  // Sum of floors never exceeds total; hand out the remainder.
  for (std::size_t k = 0; assigned < total; k = (k + 1) % n, ++assigned) ++out[order[k]];
  return out;
}

std::vector<int> frame_to_segment(const Segmentation& seg) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(seg.total_frames()));
  for (std::size_t i = 0; i < seg.size(); ++i) {
    out.insert(out.end(), static_cast<std::size_t>(seg[i].duration), static_cast<int>(i));
  }
  return out;
}

}  // namespace tas
