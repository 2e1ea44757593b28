#include "tas/losses.hpp"

#include <cmath>
#include <map>
#include <string>

#include "tas/errors.hpp"

namespace tas::losses {
namespace {

void check_targets(const Matrix& m, std::span<const int> targets, const char* what) {
  if (m.rows() != targets.size()) {
    throw InvalidArgument(std::string(what) + ": " + std::to_string(m.rows()) + " rows but " +
                          std::to_string(targets.size()) + " targets");
  }
  if (m.rows() == 0) throw InvalidArgument(std::string(what) + ": no rows");
  for (int c : targets) {
    if (c < 0 || static_cast<std::size_t>(c) >= m.cols()) {
      throw InvalidArgument(std::string(what) + ": target index " + std::to_string(c) + " out of range");
    }
  }
}

void check_groups(const Matrix& m, const GroupIndex& groups) {
  if (groups.size() == 0) throw InvalidArgument("group_ce: no groups");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups.rows[g].empty()) throw InvalidArgument("group_ce: empty group");
    if (groups.classes[g] < 0 || static_cast<std::size_t>(groups.classes[g]) >= m.cols()) {
      throw InvalidArgument("group_ce: class outside matrix columns");
    }
    for (int r : groups.rows[g]) {
      if (r < 0 || static_cast<std::size_t>(r) >= m.rows()) throw InvalidArgument("group_ce: row out of range");
    }
  }
}

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

}  // namespace

GroupIndex make_groups(std::span<const int> row_labels) {
  std::map<ClassId, std::vector<int>> by_class;
  for (std::size_t r = 0; r < row_labels.size(); ++r) by_class[row_labels[r]].push_back(static_cast<int>(r));
  GroupIndex g;
  for (auto& [c, rows] : by_class) {
    g.classes.push_back(c);
    g.rows.push_back(std::move(rows));
  }
  return g;
}

LossGrad ce_logits(const Matrix& logits, std::span<const int> targets) {
  check_targets(logits, targets, "cross-entropy");
  const double inv = 1.0 / static_cast<double>(logits.rows());
  LossGrad out{0.0, softmax_rows(logits)};
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto c = static_cast<std::size_t>(targets[r]);
    out.value -= (logits(r, c) - logsumexp(logits.row(r))) * inv;
    for (double& g : out.grad.row(r)) g *= inv;
    out.grad(r, c) -= inv;
  }
  return out;
}

LossGrad frame_ce(const Matrix& logits, const FrameLabeling& gt) { return ce_logits(logits, gt.labels()); }

LossGrad segment_ce(const Matrix& logits, std::span<const int> targets) { return ce_logits(logits, targets); }

LossGrad cross_attention_loss(const Matrix& scores, std::span<const int> frame_to_segment) {
  return ce_logits(scores, frame_to_segment);
}

LossGrad group_ce(const Matrix& logits, const GroupIndex& groups, GroupVariant variant) {
  check_groups(logits, groups);
  const double inv_l = 1.0 / static_cast<double>(groups.size());
  LossGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  const std::size_t C = logits.cols();

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto c = static_cast<std::size_t>(groups.classes[g]);
    const auto& rows = groups.rows[g];
    const double inv_n = 1.0 / static_cast<double>(rows.size());

    if (variant == GroupVariant::kAvgProbability) {
      // log mean_r p[r][c] = logsumexp_r(log p[r][c]) - log |g|, which never
      // forms a tiny probability explicitly.
      std::vector<double> logp(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = static_cast<std::size_t>(rows[k]);
        logp[k] = logits(r, c) - logsumexp(logits.row(r));
      }
      const double lse = logsumexp(logp);
      out.value -= inv_l * (lse + std::log(inv_n));
      // d/dz[r][k] = -inv_l * w_r * (delta_kc - p[r][k]), w = softmax_r(logp)
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = static_cast<std::size_t>(rows[k]);
        const double w = std::exp(logp[k] - lse);
        std::vector<double> p(logits.row(r).begin(), logits.row(r).end());
        softmax_inplace(p);
        for (std::size_t j = 0; j < C; ++j) out.grad(r, j) -= inv_l * w * ((j == c ? 1.0 : 0.0) - p[j]);
      }
    } else {
      std::vector<double> mean(C, 0.0);
      for (int r : rows)
        for (std::size_t j = 0; j < C; ++j) mean[j] += logits(static_cast<std::size_t>(r), j) * inv_n;
      out.value -= inv_l * (mean[c] - logsumexp(mean));
      softmax_inplace(mean);
      mean[c] -= 1.0;
      for (int r : rows)
        for (std::size_t j = 0; j < C; ++j) out.grad(static_cast<std::size_t>(r), j) += inv_l * inv_n * mean[j];
    }
  }
  return out;
}

LossGrad ce_probs(const Matrix& probs, std::span<const int> targets) {
  check_targets(probs, targets, "cross-entropy");
  const double inv = 1.0 / static_cast<double>(probs.rows());
  LossGrad out{0.0, Matrix(probs.rows(), probs.cols())};
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto c = static_cast<std::size_t>(targets[r]);
    const double p = std::max(probs(r, c), kProbFloor);
    out.value -= std::log(p) * inv;
    out.grad(r, c) = -inv / p;
  }
  return out;
}

double frame_ce_probs(const Matrix& probs, const FrameLabeling& gt) { return ce_probs(probs, gt.labels()).value; }

double group_ce_probs(const Matrix& probs, const GroupIndex& groups) {
  check_groups(probs, groups);
  double total = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto c = static_cast<std::size_t>(groups.classes[g]);
    double mean = 0.0;
    for (int r : groups.rows[g]) mean += probs(static_cast<std::size_t>(r), c);
    mean /= static_cast<double>(groups.rows[g].size());
    total -= safe_log(mean);
  }
  return total / static_cast<double>(groups.size());
}

LossGrad cross_attention_loss_probs(const Matrix& attention, std::span<const int> frame_to_segment) {
  return ce_probs(attention, frame_to_segment);
}

double total_loss(const LossParts& p, const LossWeights& w) {
  const double parts[] = {p.frame, p.segment, p.group_frame, p.group_segment, p.cross_attention};
  for (double v : parts) {
    if (!std::isfinite(v)) throw NumericError("loss part is not finite");
  }
  return w.frame * p.frame + w.segment * p.segment + w.group_frame * p.group_frame +
         w.group_segment * p.group_segment + w.cross_attention * p.cross_attention;
}

std::vector<double> durations_from_assignment(const Matrix& assignment) {
  if (assignment.rows() == 0 || assignment.cols() == 0) throw InvalidArgument("empty assignment matrix");
  if (row_stochastic_error(assignment) > 1e-6) throw InvalidArgument("assignment rows are not stochastic");
  for (double v : assignment.data()) {
    if (v < 0.0) throw InvalidArgument("negative assignment entry");
  }
  std::vector<double> u(assignment.cols(), 0.0);
  for (std::size_t t = 0; t < assignment.rows(); ++t)
    for (std::size_t i = 0; i < assignment.cols(); ++i) u[i] += assignment(t, i);
  return u;
}

}  // namespace tas::losses
