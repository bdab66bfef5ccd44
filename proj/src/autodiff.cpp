#include "dpgn/autodiff.hpp"

#include <cmath>

#include "dpgn/errors.hpp"
#include "dpgn/kernels.hpp"

namespace dpgn {
namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void check_finite(const Tensor& t, const char* what) {
  for (double v : t.data)
    if (!std::isfinite(v)) fail(Errc::non_finite_value, std::string(what) + " produced a non-finite value");
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && a.rows() > 1 && a.cols() == b.cols();
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || v.id >= size()) fail(Errc::out_of_range_index, "invalid tape handle");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Var Tape::push(Node n) {
  compute(n);
  check_finite(n.value, "tape op");
  nodes_.push_back(std::move(n));
  return Var{size() - 1};
}

Var Tape::input(const std::string& name, Tensor value) {
  if (name.empty()) fail(Errc::config_error, "input leaf needs a non-empty name");
  if (input_ids_.count(name)) fail(Errc::config_error, "duplicate input leaf '" + name + "'");
  Node n;
  n.kind = OpKind::leaf;
  n.needs_grad = value.requires_grad;
  n.value = std::move(value);
  n.name = name;
  check_finite(n.value, "input leaf");
  nodes_.push_back(std::move(n));
  input_ids_[name] = size() - 1;
  return Var{size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.kind = OpKind::leaf;
  n.value = std::move(value);
  n.value.requires_grad = false;
  check_finite(n.value, "constant leaf");
  nodes_.push_back(std::move(n));
  return Var{size() - 1};
}

Var Tape::matmul(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.value.cols() != nb.value.rows())
    fail(Errc::shape_mismatch,
         "matmul: " + shape_str(na.value) + " times " + shape_str(nb.value));
  Node n;
  n.kind = OpKind::matmul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (!na.value.same_shape(nb.value) && !is_row_broadcast(na.value, nb.value))
    fail(Errc::shape_mismatch, "add: " + shape_str(na.value) + " plus " + shape_str(nb.value));
  Node n;
  n.kind = OpKind::add;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (!na.value.same_shape(nb.value))
    fail(Errc::shape_mismatch, "sub: " + shape_str(na.value) + " minus " + shape_str(nb.value));
  Node n;
  n.kind = OpKind::sub;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::scalar_mul(Var a, double s) {
  if (!std::isfinite(s)) fail(Errc::non_finite_value, "scalar_mul: non-finite factor");
  Node n;
  n.kind = OpKind::scalar_mul;
  n.a = a.id;
  n.scalar = s;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.kind = OpKind::relu;
  n.a = a.id;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::concat(const std::vector<Var>& xs) {
  if (xs.empty()) fail(Errc::shape_mismatch, "concat: no inputs");
  Node n;
  n.kind = OpKind::concat;
  int rows = node(xs[0]).value.rows();
  for (Var v : xs) {
    const Node& nv = node(v);
    if (nv.value.rows() != rows)
      fail(Errc::shape_mismatch, "concat: row counts differ (" + std::to_string(rows) + " vs " +
                                     std::to_string(nv.value.rows()) + ")");
    n.more.push_back(v.id);
    n.needs_grad = n.needs_grad || nv.needs_grad;
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  const Node& na = node(a);
  for (int i : idx)
    if (i < 0 || i >= na.value.rows())
      fail(Errc::out_of_range_index, "gather_rows: index " + std::to_string(i) + " out of range");
  Node n;
  n.kind = OpKind::gather_rows;
  n.a = a.id;
  n.index = std::move(idx);
  n.needs_grad = na.needs_grad;
  return push(std::move(n));
}

Var Tape::segment_sum(Var a, std::vector<int> seg, int n_segments) {
  const Node& na = node(a);
  if (static_cast<int>(seg.size()) != na.value.rows())
    fail(Errc::length_mismatch, "segment_sum: one segment id per row required");
  if (n_segments <= 0) fail(Errc::config_error, "segment_sum: n_segments must be positive");
  for (int s : seg)
    if (s < 0 || s >= n_segments)
      fail(Errc::out_of_range_index, "segment_sum: segment id " + std::to_string(s) + " out of range");
  Node n;
  n.kind = OpKind::segment_sum;
  n.a = a.id;
  n.index = std::move(seg);
  n.n_segments = n_segments;
  n.needs_grad = na.needs_grad;
  return push(std::move(n));
}

Var Tape::segment_mean(Var a, std::vector<int> seg, int n_segments) {
  const Node& na = node(a);
  if (static_cast<int>(seg.size()) != na.value.rows())
    fail(Errc::length_mismatch, "segment_mean: one segment id per row required");
  if (n_segments <= 0) fail(Errc::config_error, "segment_mean: n_segments must be positive");
  for (int s : seg)
    if (s < 0 || s >= n_segments)
      fail(Errc::out_of_range_index, "segment_mean: segment id " + std::to_string(s) + " out of range");
  Node n;
  n.kind = OpKind::segment_mean;
  n.a = a.id;
  n.index = std::move(seg);
  n.n_segments = n_segments;
  n.needs_grad = na.needs_grad;
  return push(std::move(n));
}

Var Tape::mean_all(Var a) {
  if (node(a).value.numel() == 0) fail(Errc::shape_mismatch, "mean_all: empty tensor");
  Node n;
  n.kind = OpKind::mean_all;
  n.a = a.id;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::sum_all(Var a) {
  Node n;
  n.kind = OpKind::sum_all;
  n.a = a.id;
  n.needs_grad = node(a).needs_grad;
  return push(std::move(n));
}

Var Tape::squared_error(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (!na.value.same_shape(nb.value))
    fail(Errc::shape_mismatch,
         "squared_error: " + shape_str(na.value) + " vs " + shape_str(nb.value));
  Node n;
  n.kind = OpKind::squared_error;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

void Tape::compute(Node& n) {
  switch (n.kind) {
    case OpKind::leaf:
      break;
    case OpKind::matmul: {
      const Tensor &a = nodes_[n.a].value, &b = nodes_[n.b].value;
      n.value = Tensor(a.rows(), b.cols());
      kernels::matmul(a.data.data(), b.data.data(), n.value.data.data(), a.rows(), a.cols(),
                      b.cols());
      break;
    }
    case OpKind::add: {
      const Tensor &a = nodes_[n.a].value, &b = nodes_[n.b].value;
      n.value = Tensor(a.rows(), a.cols());
      if (is_row_broadcast(a, b))
        kernels::add_rowvec(a.data.data(), b.data.data(), n.value.data.data(), a.rows(), a.cols());
      else
        kernels::add(a.data.data(), b.data.data(), n.value.data.data(), a.numel());
      break;
    }
    case OpKind::sub: {
      const Tensor &a = nodes_[n.a].value, &b = nodes_[n.b].value;
      n.value = Tensor(a.rows(), a.cols());
      kernels::sub(a.data.data(), b.data.data(), n.value.data.data(), a.numel());
      break;
    }
    case OpKind::scalar_mul: {
      const Tensor& a = nodes_[n.a].value;
      n.value = Tensor(a.rows(), a.cols());
      kernels::scale(a.data.data(), n.scalar, n.value.data.data(), a.numel());
      break;
    }
    case OpKind::relu: {
      const Tensor& a = nodes_[n.a].value;
      n.value = Tensor(a.rows(), a.cols());
      kernels::relu(a.data.data(), n.value.data.data(), a.numel());
      break;
    }
    case OpKind::concat: {
      int rows = nodes_[n.more[0]].value.rows();
      int cols = 0;
      for (int id : n.more) cols += nodes_[id].value.cols();
      n.value = Tensor(rows, cols);
      int off = 0;
      for (int id : n.more) {
        const Tensor& x = nodes_[id].value;
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < x.cols(); ++c) n.value.at(r, off + c) = x.at(r, c);
        off += x.cols();
      }
      break;
    }
    case OpKind::gather_rows: {
      const Tensor& a = nodes_[n.a].value;
      n.value = Tensor(static_cast<int>(n.index.size()), a.cols());
      kernels::gather_rows(a.data.data(), n.index.data(), n.value.data.data(),
                           static_cast<int>(n.index.size()), a.cols());
      break;
    }
    case OpKind::segment_sum: {
      const Tensor& a = nodes_[n.a].value;
      n.value = Tensor(n.n_segments, a.cols());
      kernels::segment_sum(a.data.data(), n.index.data(), n.value.data.data(), a.rows(),
                           n.n_segments, a.cols());
      break;
    }
    case OpKind::segment_mean: {
      const Tensor& a = nodes_[n.a].value;
      n.value = Tensor(n.n_segments, a.cols());
      kernels::segment_mean(a.data.data(), n.index.data(), n.value.data.data(), a.rows(),
                            n.n_segments, a.cols());
      break;
    }
    case OpKind::mean_all: {
      const Tensor& a = nodes_[n.a].value;
      n.value = Tensor::scalar(kernels::sum_all(a.data.data(), a.rows(), a.cols()) / a.numel());
      break;
    }
    case OpKind::sum_all: {
      const Tensor& a = nodes_[n.a].value;
      n.value = Tensor::scalar(kernels::sum_all(a.data.data(), a.rows(), a.cols()));
      break;
    }
    case OpKind::squared_error: {
      const Tensor &a = nodes_[n.a].value, &b = nodes_[n.b].value;
      n.value =
          Tensor::scalar(kernels::sumsq_diff(a.data.data(), b.data.data(), a.rows(), a.cols()));
      break;
    }
  }
}

void Tape::bind(const ParamMap& inputs) {
  for (const auto& [name, tensor] : inputs) {
    auto it = input_ids_.find(name);
    if (it == input_ids_.end()) continue;
    Node& n = nodes_[it->second];
    if (!n.value.same_shape(tensor))
      fail(Errc::shape_mismatch, "bind: input '" + name + "' expects " + shape_str(n.value) +
                                     ", got " + shape_str(tensor));
    bool grad = n.value.requires_grad;
    n.value = tensor;
    n.value.requires_grad = grad;
    check_finite(n.value, "bound input");
  }
}

void Tape::forward() {
  for (Node& n : nodes_) {
    if (n.kind == OpKind::leaf) continue;
    compute(n);
    check_finite(n.value, "tape op");
  }
}

ParamMap Tape::gradients(Var root) const {
  const Node& r = node(root);
  if (r.value.rows() != 1 || r.value.cols() != 1)
    fail(Errc::non_scalar_output, "gradients: root is " + shape_str(r.value) + ", expected 1x1");

  std::vector<Tensor> grad(nodes_.size());
  std::vector<bool> has_grad(nodes_.size(), false);
  auto accum = [&](int id, int rows, int cols) -> Tensor& {
    if (!has_grad[id]) {
      grad[id] = Tensor(rows, cols);
      has_grad[id] = true;
    }
    return grad[id];
  };

  accum(root.id, 1, 1).data[0] = 1.0;

  for (int id = root.id; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!has_grad[id] || !n.needs_grad || n.kind == OpKind::leaf) continue;
    const Tensor& g = grad[id];
    switch (n.kind) {
      case OpKind::leaf:
        break;
      case OpKind::matmul: {
        const Tensor &a = nodes_[n.a].value, &b = nodes_[n.b].value;
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = accum(n.a, a.rows(), a.cols());
          Tensor tmp(a.rows(), a.cols());
          kernels::matmul_nt(g.data.data(), b.data.data(), tmp.data.data(), g.rows(), g.cols(),
                             b.rows());
          kernels::add(ga.data.data(), tmp.data.data(), ga.data.data(), ga.numel());
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = accum(n.b, b.rows(), b.cols());
          Tensor tmp(b.rows(), b.cols());
          kernels::matmul_tn(a.data.data(), g.data.data(), tmp.data.data(), a.rows(), a.cols(),
                             g.cols());
          kernels::add(gb.data.data(), tmp.data.data(), gb.data.data(), gb.numel());
        }
        break;
      }
      case OpKind::add: {
        const Tensor &a = nodes_[n.a].value, &b = nodes_[n.b].value;
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = accum(n.a, a.rows(), a.cols());
          kernels::add(ga.data.data(), g.data.data(), ga.data.data(), ga.numel());
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = accum(n.b, b.rows(), b.cols());
          if (is_row_broadcast(a, b)) {
            // column sums of g: segment-sum of all rows into one segment
            std::vector<int> zero(g.rows(), 0);
            Tensor tmp(1, g.cols());
            kernels::segment_sum(g.data.data(), zero.data(), tmp.data.data(), g.rows(), 1,
                                 g.cols());
            kernels::add(gb.data.data(), tmp.data.data(), gb.data.data(), gb.numel());
          } else {
            kernels::add(gb.data.data(), g.data.data(), gb.data.data(), gb.numel());
          }
        }
        break;
      }
      case OpKind::sub: {
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = accum(n.a, g.rows(), g.cols());
          kernels::add(ga.data.data(), g.data.data(), ga.data.data(), ga.numel());
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = accum(n.b, g.rows(), g.cols());
          kernels::sub(gb.data.data(), g.data.data(), gb.data.data(), gb.numel());
        }
        break;
      }
      case OpKind::scalar_mul: {
        Tensor& ga = accum(n.a, g.rows(), g.cols());
        Tensor tmp(g.rows(), g.cols());
        kernels::scale(g.data.data(), n.scalar, tmp.data.data(), g.numel());
        kernels::add(ga.data.data(), tmp.data.data(), ga.data.data(), ga.numel());
        break;
      }
      case OpKind::relu: {
        const Tensor& a = nodes_[n.a].value;
        Tensor& ga = accum(n.a, a.rows(), a.cols());
        Tensor tmp(a.rows(), a.cols());
        kernels::relu_backward(a.data.data(), g.data.data(), tmp.data.data(), a.numel());
        kernels::add(ga.data.data(), tmp.data.data(), ga.data.data(), ga.numel());
        break;
      }
      case OpKind::concat: {
        int off = 0;
        for (int cid : n.more) {
          const Tensor& x = nodes_[cid].value;
          if (nodes_[cid].needs_grad) {
            Tensor& gx = accum(cid, x.rows(), x.cols());
            for (int r = 0; r < x.rows(); ++r)
              for (int c = 0; c < x.cols(); ++c) gx.at(r, c) += g.at(r, off + c);
          }
          off += x.cols();
        }
        break;
      }
      case OpKind::gather_rows: {
        const Tensor& a = nodes_[n.a].value;
        Tensor& ga = accum(n.a, a.rows(), a.cols());
        Tensor tmp(a.rows(), a.cols());
        kernels::segment_sum(g.data.data(), n.index.data(), tmp.data.data(), g.rows(), a.rows(),
                             g.cols());
        kernels::add(ga.data.data(), tmp.data.data(), ga.data.data(), ga.numel());
        break;
      }
      case OpKind::segment_sum: {
        const Tensor& a = nodes_[n.a].value;
        Tensor& ga = accum(n.a, a.rows(), a.cols());
        Tensor tmp(a.rows(), a.cols());
        kernels::gather_rows(g.data.data(), n.index.data(), tmp.data.data(), a.rows(), g.cols());
        kernels::add(ga.data.data(), tmp.data.data(), ga.data.data(), ga.numel());
        break;
      }
      case OpKind::segment_mean: {
        const Tensor& a = nodes_[n.a].value;
        Tensor& ga = accum(n.a, a.rows(), a.cols());
        Tensor tmp(a.rows(), a.cols());
        kernels::segment_mean_backward(g.data.data(), n.index.data(), tmp.data.data(), a.rows(),
                                       n.n_segments, g.cols());
        kernels::add(ga.data.data(), tmp.data.data(), ga.data.data(), ga.numel());
        break;
      }
      case OpKind::mean_all: {
        const Tensor& a = nodes_[n.a].value;
        Tensor& ga = accum(n.a, a.rows(), a.cols());
        double s = g.item() / a.numel();
        for (double& v : ga.data) v += s;
        break;
      }
      case OpKind::sum_all: {
        const Tensor& a = nodes_[n.a].value;
        Tensor& ga = accum(n.a, a.rows(), a.cols());
        double s = g.item();
        for (double& v : ga.data) v += s;
        break;
      }
      case OpKind::squared_error: {
        const Tensor &a = nodes_[n.a].value, &b = nodes_[n.b].value;
        double s = 2.0 * g.item();
        if (nodes_[n.a].needs_grad) {
          Tensor& ga = accum(n.a, a.rows(), a.cols());
          for (int i = 0; i < a.numel(); ++i) ga.data[i] += s * (a.data[i] - b.data[i]);
        }
        if (nodes_[n.b].needs_grad) {
          Tensor& gb = accum(n.b, b.rows(), b.cols());
          for (int i = 0; i < b.numel(); ++i) gb.data[i] -= s * (a.data[i] - b.data[i]);
        }
        break;
      }
    }
  }

  ParamMap out;
  for (const auto& [name, id] : input_ids_) {
    const Node& n = nodes_[id];
    if (!n.value.requires_grad) continue;
    out[name] = has_grad[id] ? grad[id] : Tensor(n.value.rows(), n.value.cols());
  }
  return out;
}

Tensor evaluate(Tape& tape, Var root, const ParamMap& inputs) {
  tape.bind(inputs);
  tape.forward();
  return tape.value(root);
}

ParamMap gradients(Tape& tape, Var root, const ParamMap& inputs) {
  tape.bind(inputs);
  tape.forward();
  return tape.gradients(root);
}

double grad_check(Tape& tape, Var root, const ParamMap& inputs, double eps) {
  if (eps <= 0) fail(Errc::config_error, "grad_check: eps must be positive");
  ParamMap analytic = gradients(tape, root, inputs);

  double max_rel = 0.0;
  for (const auto& [name, x] : inputs) {
    if (!x.requires_grad) continue;
    auto it = analytic.find(name);
    if (it == analytic.end()) continue;
    ParamMap probe = inputs;
    for (int i = 0; i < x.numel(); ++i) {
      probe[name].data[i] = x.data[i] + eps;
      double up = evaluate(tape, root, probe).item();
      probe[name].data[i] = x.data[i] - eps;
      double down = evaluate(tape, root, probe).item();
      probe[name].data[i] = x.data[i];
      double numeric = (up - down) / (2.0 * eps);
      double a = it->second.data[i];
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  tape.bind(inputs);
  tape.forward();
  return max_rel;
}

}  // namespace dpgn
