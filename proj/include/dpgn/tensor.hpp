#pragma once

#include <vector>

namespace dpgn {

/// Dense row-major matrix of doubles. Every tensor in this codebase is rank 2;
/// scalars are 1x1 and vectors are single rows.
struct Tensor {
  std::vector<int> shape;  // {rows, cols}
  std::vector<double> data;
  bool requires_grad = false;

  Tensor() : shape{0, 0} {}
  Tensor(int rows, int cols, double fill = 0.0)
      : shape{rows, cols}, data(static_cast<std::size_t>(rows) * cols, fill) {}
  Tensor(int rows, int cols, std::vector<double> values)
      : shape{rows, cols}, data(std::move(values)) {}

  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
  }
  static Tensor row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(1, n, std::move(values));
  }

  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }
  int numel() const { return static_cast<int>(data.size()); }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  /// Value of a 1x1 tensor.
  double item() const { return data[0]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace dpgn
