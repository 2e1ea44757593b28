#include "tas/pseudolabel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tas/errors.hpp"

namespace tas::pseudolabel {

TimestampAnnotation::TimestampAnnotation(std::vector<Timestamp> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw InvalidArgument("timestamp annotation is empty");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].frame < 0) throw InvalidArgument("negative timestamp frame");
    if (entries_[i].action < 0) throw InvalidArgument("negative class id in timestamps");
    if (i > 0 && entries_[i].frame <= entries_[i - 1].frame) {
      throw InvalidArgument("timestamps must be strictly increasing");
    }
  }
}

void TimestampAnnotation::check_frames(int total_frames) const {
  if (static_cast<int>(entries_.size()) > total_frames) {
    throw InvalidArgument("more timestamps than frames");
  }
  if (entries_.back().frame >= total_frames) {
    throw InvalidArgument("timestamp frame " + std::to_string(entries_.back().frame) + " outside [0, " +
                          std::to_string(total_frames) + ")");
  }
}

Distance parse_distance(std::string_view name) {
  if (name == "euclidean" || name == "l2") return Distance::kEuclidean;
  if (name == "cosine") return Distance::kCosine;
  if (name == "l1" || name == "manhattan") return Distance::kL1;
  throw InvalidArgument("unknown distance: " + std::string(name));
}

double distance(Distance kind, std::span<const double> a, std::span<const double> b) {
  switch (kind) {
    case Distance::kEuclidean: {
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case Distance::kL1: {
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
      return s;
    }
    case Distance::kCosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
      }
      if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
      return std::max(0.0, 1.0 - dot / std::sqrt(na * nb));
    }
  }
  return 0.0;
}

namespace {

void check_inputs(const FeatureSequence& feats, const TimestampAnnotation& ts, const KMedoidsOptions& opt) {
  if (feats.rows() == 0 || feats.cols() == 0) throw InvalidArgument("empty feature sequence");
  if (opt.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  ts.check_frames(static_cast<int>(feats.rows()));
}

// Row i holds dist(x_{medoid_i}, x_j) for every frame j.
Matrix medoid_distances(const FeatureSequence& x, const std::vector<int>& medoids, Distance kind) {
  Matrix d(medoids.size(), x.rows());
  for (std::size_t i = 0; i < medoids.size(); ++i) {
    const auto m = x.row(static_cast<std::size_t>(medoids[i]));
    for (std::size_t j = 0; j < x.rows(); ++j) d(i, j) = distance(kind, m, x.row(j));
  }
  return d;
}

double objective(const Matrix& d, const std::vector<int>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i)
    for (int j = b[i]; j < b[i + 1]; ++j) total += d(i, static_cast<std::size_t>(j));
  return total;
}

// Frame in `frames` minimising the summed distance to all of `frames`.
int best_medoid(const FeatureSequence& x, const std::vector<int>& frames, Distance kind) {
  const std::size_t s = frames.size();
  std::vector<double> cost(s, 0.0);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = a + 1; b < s; ++b) {
      const double dab = distance(kind, x.row(static_cast<std::size_t>(frames[a])),
                                  x.row(static_cast<std::size_t>(frames[b])));
      cost[a] += dab;
      cost[b] += dab;
    }
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < s; ++a)
    if (cost[a] < cost[best]) best = a;
  return frames[best];
}

void assert_non_increasing(double before, double after, const char* step) {
  if (after > before + 1e-9 * (1.0 + std::abs(before))) {
    throw std::logic_error(std::string("k-medoids objective increased during ") + step + " step");
  }
}

}  // namespace

KMedoidsResult constrained_kmedoids_full(const FeatureSequence& feats, const TimestampAnnotation& ts,
                                         const KMedoidsOptions& opt) {
  check_inputs(feats, ts, opt);
  const int T = static_cast<int>(feats.rows());
  const std::size_t n = ts.size();

  ClusterState st;
  for (const Timestamp& e : ts.entries()) st.medoid_frames.push_back(e.frame);
  st.boundaries.assign(n + 1, 0);
  st.boundaries.back() = T;

  KMedoidsResult res{Segmentation({{ts[0].action, T}}), st, {}, 0, false};
  if (n == 1) {
    res.converged = true;
    res.objective_trace.push_back(objective(medoid_distances(feats, st.medoid_frames, opt.dist), st.boundaries));
    return res;
  }

  // Any boundaries that keep every timestamp in its own cluster are a valid
  // starting point; start each cut right after the timestamp.
  for (std::size_t i = 1; i < n; ++i) st.boundaries[i] = ts[i - 1].frame + 1;

  Matrix d = medoid_distances(feats, st.medoid_frames, opt.dist);
  double obj = objective(d, st.boundaries);

  for (int it = 1; it <= opt.max_iters; ++it) {
    const ClusterState before = st;

    // Boundary step: the cut between clusters i and i+1 only moves inside
    // [t_i, t_{i+1}); each cut is independent given the medoids.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const int lo = ts[i].frame;
      const int hi = ts[i + 1].frame;
      // Running sums over the window: cost(l) = sum_{lo..l} D_i + sum_{l+1..hi} D_{i+1}
      double left = 0.0;
      double right = 0.0;
      for (int j = lo + 1; j <= hi; ++j) right += d(i + 1, static_cast<std::size_t>(j));
      double best_cost = std::numeric_limits<double>::infinity();
      int best_l = lo;
      for (int l = lo; l < hi; ++l) {
        left += d(i, static_cast<std::size_t>(l));
        if (l > lo) right -= d(i + 1, static_cast<std::size_t>(l));
        const double c = left + right;
        if (c < best_cost) {
          best_cost = c;
          best_l = l;
        }
      }
      st.boundaries[i + 1] = best_l + 1;
    }
    const double after_boundaries = objective(d, st.boundaries);
    assert_non_increasing(obj, after_boundaries, "boundary");
    res.objective_trace.push_back(after_boundaries);

    // Medoid step.
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> frames;
      for (int j = st.boundaries[i]; j < st.boundaries[i + 1]; ++j) frames.push_back(j);
      st.medoid_frames[i] = best_medoid(feats, frames, opt.dist);
    }
    d = medoid_distances(feats, st.medoid_frames, opt.dist);
    obj = objective(d, st.boundaries);
    assert_non_increasing(after_boundaries, obj, "medoid");
    res.objective_trace.push_back(obj);

    res.iterations = it;
    if (st.boundaries == before.boundaries && st.medoid_frames == before.medoid_frames) {
      res.converged = true;
      break;
    }
  }

  std::vector<Segment> segs;
  for (std::size_t i = 0; i < n; ++i) segs.push_back({ts[i].action, st.boundaries[i + 1] - st.boundaries[i]});
  res.segmentation = Segmentation(std::move(segs));
  res.state = std::move(st);
  return res;
}

Segmentation constrained_kmedoids(const FeatureSequence& feats, const TimestampAnnotation& ts,
                                  const KMedoidsOptions& opt) {
  return constrained_kmedoids_full(feats, ts, opt).segmentation;
}

FrameLabeling unconstrained_kmedoids(const FeatureSequence& feats, const TimestampAnnotation& ts,
                                     const KMedoidsOptions& opt) {
  check_inputs(feats, ts, opt);
  const std::size_t T = feats.rows();
  const std::size_t n = ts.size();
  std::vector<int> medoids;
  for (const Timestamp& e : ts.entries()) medoids.push_back(e.frame);

  std::vector<int> assign(T, 0);
  for (int it = 0; it < opt.max_iters; ++it) {
    const Matrix d = medoid_distances(feats, medoids, opt.dist);
    for (std::size_t j = 0; j < T; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (d(i, j) < d(best, j)) best = i;
      assign[j] = static_cast<int>(best);
    }
    std::vector<int> next = medoids;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> frames;
      for (std::size_t j = 0; j < T; ++j)
        if (assign[j] == static_cast<int>(i)) frames.push_back(static_cast<int>(j));
      if (!frames.empty()) next[i] = best_medoid(feats, frames, opt.dist);
    }
    if (next == medoids) break;
    medoids = std::move(next);
  }

  std::vector<ClassId> labels(T);
  for (std::size_t j = 0; j < T; ++j) labels[j] = ts[static_cast<std::size_t>(assign[j])].action;
  return FrameLabeling(std::move(labels));
}

}  // namespace tas::pseudolabel
