#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpgn/tensor.hpp"

namespace dpgn {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

using ParamMap = std::map<std::string, Tensor>;

enum class OpKind {
  leaf,
  matmul,
  add,          // elementwise, or second argument a 1 x c row broadcast
  sub,
  scalar_mul,
  relu,         // subgradient at 0 is 0
  concat,       // along columns
  gather_rows,
  segment_sum,
  segment_mean, // empty segments yield zero rows
  mean_all,     // 1 x 1
  sum_all,      // 1 x 1
  squared_error // 1 x 1 sum of squared differences
};

/// Reverse-mode tape over rank-2 double tensors. Recording an operation
/// computes its value immediately; leaves are named and can be re-bound, after
/// which forward() replays the whole tape. Gradients flow only from a 1x1
/// root and only into leaves whose Tensor had requires_grad set.
///
/// A Tape is single-threaded; distinct tapes may run concurrently.
class Tape {
 public:
  /// Named leaf. The tensor's requires_grad flag decides whether gradients()
  /// reports it. Re-registering a name is an error.
  Var input(const std::string& name, Tensor value);
  /// Anonymous non-differentiable leaf.
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scalar_mul(Var a, double s);
  Var relu(Var a);
  Var concat(const std::vector<Var>& xs);
  Var gather_rows(Var a, std::vector<int> idx);
  Var segment_sum(Var a, std::vector<int> seg, int n_segments);
  Var segment_mean(Var a, std::vector<int> seg, int n_segments);
  Var mean_all(Var a);
  Var sum_all(Var a);
  Var squared_error(Var a, Var b);

  const Tensor& value(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Replaces the values of named leaves; shapes must match the originals.
  /// Names not present on the tape are ignored (a tape built for one model
  /// configuration may not touch every parameter).
  void bind(const ParamMap& inputs);
  /// Recomputes every non-leaf value in recording order.
  void forward();
  /// d(root)/d(leaf) for every named requires_grad leaf, by reverse
  /// traversal. Root must be 1x1 (NonScalarOutput otherwise). Leaves the root
  /// never depends on get zero gradients.
  ParamMap gradients(Var root) const;

 private:
  struct Node {
    OpKind kind = OpKind::leaf;
    int a = -1, b = -1;          // input node ids
    std::vector<int> more;       // extra inputs (concat)
    Tensor value;
    bool needs_grad = false;
    double scalar = 0.0;         // scalar_mul factor
    std::vector<int> index;      // gather indices / segment ids
    int n_segments = 0;
    std::string name;            // leaves only
  };

  Var push(Node n);
  void compute(Node& n);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::map<std::string, int> input_ids_;
};

/// Binds inputs, replays the tape, returns the root value.
Tensor evaluate(Tape& tape, Var root, const ParamMap& inputs);

/// Binds inputs, replays, and runs the reverse pass from the scalar root.
ParamMap gradients(Tape& tape, Var root, const ParamMap& inputs);

/// Max relative error between reverse-mode and central-difference gradients
/// over every requires_grad input element, with denominator
/// max(|analytic|, |numeric|, 1e-8). Restores the original input values.
double grad_check(Tape& tape, Var root, const ParamMap& inputs, double eps = 1e-5);

}  // namespace dpgn
