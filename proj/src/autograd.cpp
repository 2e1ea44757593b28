#include "tas/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tas/errors.hpp"

namespace tas::nn {

Parameter& ParameterSet::add(const std::string& name, Matrix init) {
  if (index_.count(name)) throw InvalidArgument("duplicate parameter name: " + name);
  index_[name] = params_.size();
  Matrix grad(init.rows(), init.cols());
  params_.push_back({name, std::move(init), std::move(grad)});
  return params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("unknown parameter: " + name);
  return params_[it->second];
}

std::size_t ParameterSet::count_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
}

Var Graph::push(Matrix value, std::function<void(Graph&, const Matrix&)> bw) {
  nodes_.push_back({std::move(value), Matrix(), std::move(bw)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Graph::grad_of(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Graph::constant(Matrix m) { return push(std::move(m)); }

Var Graph::param(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Var v = push(p.value);
  param_nodes_[&p] = v.id;
  return v;
}

const Matrix* Graph::param_grad(const Parameter& p) const {
  auto it = param_nodes_.find(&p);
  if (it == param_nodes_.end()) return nullptr;
  const Matrix& g = nodes_[static_cast<std::size_t>(it->second)].grad;
  return g.empty() ? nullptr : &g;
}

namespace {

void add_into(Matrix& dst, const Matrix& src) {
  auto& d = dst.data();
  const auto& s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void check_same(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) throw InvalidArgument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var Graph::matmul(Var a, Var b) {
  return push(tas::matmul(value(a), value(b)), [a, b](Graph& g, const Matrix& gr) {
    add_into(g.grad_of(a), tas::matmul_nt(gr, g.value(b)));
    add_into(g.grad_of(b), tas::matmul_tn(g.value(a), gr));
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  return push(tas::matmul_nt(value(a), value(b)), [a, b](Graph& g, const Matrix& gr) {
    add_into(g.grad_of(a), tas::matmul(gr, g.value(b)));
    add_into(g.grad_of(b), tas::matmul_tn(gr, g.value(a)));
  });
}

Var Graph::add(Var a, Var b) {
  check_same(value(a), value(b), "add");
  Matrix out = value(a);
  add_into(out, value(b));
  return push(std::move(out), [a, b](Graph& g, const Matrix& gr) {
    add_into(g.grad_of(a), gr);
    add_into(g.grad_of(b), gr);
  });
}

Var Graph::add_row(Var a, Var bias) {
  const Matrix& bv = value(bias);
  if (bv.rows() != 1 || bv.cols() != value(a).cols()) throw InvalidArgument("add_row: bias shape mismatch");
  Matrix out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  return push(std::move(out), [a, bias](Graph& g, const Matrix& gr) {
    add_into(g.grad_of(a), gr);
    Matrix& gb = g.grad_of(bias);
    for (std::size_t r = 0; r < gr.rows(); ++r)
      for (std::size_t c = 0; c < gr.cols(); ++c) gb(0, c) += gr(r, c);
  });
}

Var Graph::add_const(Var a, const Matrix& c) {
  check_same(value(a), c, "add_const");
  Matrix out = value(a);
  add_into(out, c);
  return push(std::move(out), [a](Graph& g, const Matrix& gr) { add_into(g.grad_of(a), gr); });
}

Var Graph::mul_const(Var a, const Matrix& c) {
  check_same(value(a), c, "mul_const");
  Matrix out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c.data()[i];
  return push(std::move(out), [a, c](Graph& g, const Matrix& gr) {
    Matrix& ga = g.grad_of(a);
    for (std::size_t i = 0; i < gr.size(); ++i) ga.data()[i] += gr.data()[i] * c.data()[i];
  });
}

Var Graph::scale(Var a, double s) {
  Matrix out = value(a);
  for (double& x : out.data()) x *= s;
  return push(std::move(out), [a, s](Graph& g, const Matrix& gr) {
    Matrix& ga = g.grad_of(a);
    for (std::size_t i = 0; i < gr.size(); ++i) ga.data()[i] += s * gr.data()[i];
  });
}

Var Graph::gelu(Var a) {
  // Exact erf form.
  Matrix out = value(a);
  for (double& x : out.data()) x = 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  return push(std::move(out), [a](Graph& g, const Matrix& gr) {
    const Matrix& x = g.value(a);
    Matrix& ga = g.grad_of(a);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = x.data()[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      ga.data()[i] += gr.data()[i] * (cdf + v * pdf);
    }
  });
}

Var Graph::softmax_rows(Var a) {
  Var out = push(tas::softmax_rows(value(a)));
  const Var self = out;
  nodes_.back().backward = [a, self](Graph& g, const Matrix& gr) {
    const Matrix& p = g.value(self);
    Matrix& ga = g.grad_of(a);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < p.cols(); ++c) dot += gr(r, c) * p(r, c);
      for (std::size_t c = 0; c < p.cols(); ++c) ga(r, c) += p(r, c) * (gr(r, c) - dot);
    }
  };
  return out;
}

Var Graph::layer_norm(Var a, Var gamma, Var beta, double eps) {
  const Matrix& x = value(a);
  const std::size_t R = x.rows(), C = x.cols();
  if (value(gamma).cols() != C || value(beta).cols() != C) throw InvalidArgument("layer_norm: affine shape");
  Matrix xhat(R, C);
  std::vector<double> inv_std(R);
  for (std::size_t r = 0; r < R; ++r) {
    double mean = 0.0;
    for (double v : x.row(r)) mean += v;
    mean /= static_cast<double>(C);
    double var = 0.0;
    for (double v : x.row(r)) var += (v - mean) * (v - mean);
    var /= static_cast<double>(C);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < C; ++c) xhat(r, c) = (x(r, c) - mean) * inv_std[r];
  }
  Matrix out(R, C);
  const Matrix& gv = value(gamma);
  const Matrix& bv = value(beta);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out(r, c) = xhat(r, c) * gv(0, c) + bv(0, c);
  return push(std::move(out), [a, gamma, beta, xhat, inv_std](Graph& g, const Matrix& gr) {
    const std::size_t R = gr.rows(), C = gr.cols();
    const Matrix& gv = g.value(gamma);
    Matrix& ga = g.grad_of(a);
    Matrix& gg = g.grad_of(gamma);
    Matrix& gb = g.grad_of(beta);
    std::vector<double> dxhat(C);
    for (std::size_t r = 0; r < R; ++r) {
      double mean_d = 0.0, mean_dx = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        dxhat[c] = gr(r, c) * gv(0, c);
        mean_d += dxhat[c];
        mean_dx += dxhat[c] * xhat(r, c);
        gg(0, c) += gr(r, c) * xhat(r, c);
        gb(0, c) += gr(r, c);
      }
      mean_d /= static_cast<double>(C);
      mean_dx /= static_cast<double>(C);
      for (std::size_t c = 0; c < C; ++c) ga(r, c) += inv_std[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
    }
  });
}

Var Graph::shift_rows(Var a, int offset) {
  const Matrix& x = value(a);
  const long T = static_cast<long>(x.rows());
  Matrix out(x.rows(), x.cols());
  for (long t = 0; t < T; ++t) {
    const long s = t + offset;
    if (s < 0 || s >= T) continue;
    std::copy(x.row(static_cast<std::size_t>(s)).begin(), x.row(static_cast<std::size_t>(s)).end(),
              out.row(static_cast<std::size_t>(t)).begin());
  }
  return push(std::move(out), [a, offset](Graph& g, const Matrix& gr) {
    Matrix& ga = g.grad_of(a);
    const long T = static_cast<long>(gr.rows());
    for (long t = 0; t < T; ++t) {
      const long s = t + offset;
      if (s < 0 || s >= T) continue;
      for (std::size_t c = 0; c < gr.cols(); ++c) ga(static_cast<std::size_t>(s), c) += gr(static_cast<std::size_t>(t), c);
    }
  });
}

Var Graph::slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Matrix& x = value(a);
  if (begin + count > x.rows()) throw InvalidArgument("slice_rows: out of range");
  Matrix out(count, x.cols());
  std::copy(x.data().begin() + static_cast<long>(begin * x.cols()),
            x.data().begin() + static_cast<long>((begin + count) * x.cols()), out.data().begin());
  return push(std::move(out), [a, begin](Graph& g, const Matrix& gr) {
    Matrix& ga = g.grad_of(a);
    for (std::size_t r = 0; r < gr.rows(); ++r)
      for (std::size_t c = 0; c < gr.cols(); ++c) ga(begin + r, c) += gr(r, c);
  });
}

Var Graph::transpose(Var a) {
  return push(tas::transpose(value(a)),
              [a](Graph& g, const Matrix& gr) { add_into(g.grad_of(a), tas::transpose(gr)); });
}

Var Graph::gather_rows(Var table, std::span<const int> ids) {
  const Matrix& tv = value(table);
  Matrix out(ids.size(), tv.cols());
  std::vector<int> idx(ids.begin(), ids.end());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= tv.rows()) throw InvalidArgument("gather_rows: bad id");
    std::copy(tv.row(static_cast<std::size_t>(idx[i])).begin(), tv.row(static_cast<std::size_t>(idx[i])).end(),
              out.row(i).begin());
  }
  return push(std::move(out), [table, idx](Graph& g, const Matrix& gr) {
    Matrix& gt = g.grad_of(table);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < gr.cols(); ++c) gt(static_cast<std::size_t>(idx[i]), c) += gr(i, c);
  });
}

Var Graph::avg_pool_rows(Var a, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("avg_pool_rows: kernel must be odd and positive");
  const Matrix& x = value(a);
  const long T = static_cast<long>(x.rows());
  const long half = kernel / 2;
  Matrix out(x.rows(), x.cols());
  for (long t = 0; t < T; ++t) {
    const long lo = std::max(0L, t - half), hi = std::min(T - 1, t + half);
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (long s = lo; s <= hi; ++s)
      for (std::size_t c = 0; c < x.cols(); ++c)
        out(static_cast<std::size_t>(t), c) += inv * x(static_cast<std::size_t>(s), c);
  }
  return push(std::move(out), [a, half](Graph& g, const Matrix& gr) {
    Matrix& ga = g.grad_of(a);
    const long T = static_cast<long>(gr.rows());
    for (long t = 0; t < T; ++t) {
      const long lo = std::max(0L, t - half), hi = std::min(T - 1, t + half);
      const double inv = 1.0 / static_cast<double>(hi - lo + 1);
      for (long s = lo; s <= hi; ++s)
        for (std::size_t c = 0; c < gr.cols(); ++c)
          ga(static_cast<std::size_t>(s), c) += inv * gr(static_cast<std::size_t>(t), c);
    }
  });
}

Var Graph::normalize_rows(Var a) {
  const Matrix& x = value(a);
  Matrix out = x;
  std::vector<double> sums(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (double v : x.row(r)) s += v;
    if (!(s > 0.0)) throw NumericError("normalize_rows: non-positive row sum");
    sums[r] = s;
    for (double& v : out.row(r)) v /= s;
  }
  Var self = push(std::move(out));
  nodes_.back().backward = [a, self, sums](Graph& g, const Matrix& gr) {
    const Matrix& y = g.value(self);
    Matrix& ga = g.grad_of(a);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += gr(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += (gr(r, c) - dot) / sums[r];
    }
  };
  return self;
}

Var Graph::loss(Var input, const std::function<losses::LossGrad(const Matrix&)>& fn) {
  losses::LossGrad lg = fn(value(input));
  Matrix grad = std::move(lg.grad);
  return push(Matrix(1, 1, lg.value), [input, grad](Graph& g, const Matrix& gr) {
    Matrix& gi = g.grad_of(input);
    const double s = gr(0, 0);
    for (std::size_t i = 0; i < grad.size(); ++i) gi.data()[i] += s * grad.data()[i];
  });
}

Var Graph::sum(std::span<const Var> scalars, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != scalars.size()) throw InvalidArgument("sum: weight count mismatch");
  std::vector<Var> vs(scalars.begin(), scalars.end());
  std::vector<double> ws(scalars.size(), 1.0);
  if (!weights.empty()) ws.assign(weights.begin(), weights.end());
  double total = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) total += ws[i] * scalar(vs[i]);
  return push(Matrix(1, 1, total), [vs, ws](Graph& g, const Matrix& gr) {
    for (std::size_t i = 0; i < vs.size(); ++i) g.grad_of(vs[i])(0, 0) += ws[i] * gr(0, 0);
  });
}

void Graph::backward(Var root) {
  if (value(root).rows() != 1 || value(root).cols() != 1) throw InvalidArgument("backward: root must be 1x1");
  grad_of(root)(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.grad);
  }
}

}  // namespace tas::nn
