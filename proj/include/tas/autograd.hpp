#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tas/losses.hpp"
#include "tas/tensor.hpp"

// Minimal tape-based reverse-mode differentiation over Matrix values. A Graph
// records one forward pass; backward() walks it in reverse creation order,
// which is a valid topological order because every node only refers to
// earlier nodes.
namespace tas::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Named parameters in insertion order. Names are unique.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  std::size_t count_scalars() const;

  void zero_grad();

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  Var constant(Matrix m);
  // Leaf bound to a parameter; one node per parameter per graph.
  Var param(const Parameter& p);
  // Gradient reaching `p` after backward(), or nullptr if p was not used.
  const Matrix* param_grad(const Parameter& p) const;

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  double scalar(Var v) const { return value(v)(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
  Var add_const(Var a, const Matrix& c);
  Var mul_const(Var a, const Matrix& c);  // elementwise
  Var scale(Var a, double s);
  Var gelu(Var a);
  Var softmax_rows(Var a);
  Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
  // out[t] = a[t + offset], zero outside the sequence.
  Var shift_rows(Var a, int offset);
  Var slice_rows(Var a, std::size_t begin, std::size_t count);
  Var transpose(Var a);
  Var gather_rows(Var table, std::span<const int> ids);
  // Mean over the window [t - k/2, t + k/2] clipped to the sequence.
  Var avg_pool_rows(Var a, int kernel);
  Var normalize_rows(Var a);

  // Wraps a closed-form loss: `fn` maps the input value to value + gradient.
  Var loss(Var input, const std::function<losses::LossGrad(const Matrix&)>& fn);
  Var sum(std::span<const Var> scalars, std::span<const double> weights = {});

  // Seeds d(root)/d(root) = 1 for a 1x1 root and propagates.
  void backward(Var root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Graph&, const Matrix& grad)> backward;
  };

  Var push(Matrix value, std::function<void(Graph&, const Matrix&)> bw = {});
  Matrix& grad_of(Var v);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

}  // namespace tas::nn
