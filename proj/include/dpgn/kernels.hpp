#pragma once

namespace dpgn::kernels {

// Dense numeric kernels behind the autodiff primitives and the graph
// operators. Every kernel exists twice: kernels::serial holds the plain-loop
// reference, and the same name at namespace scope is the OpenMP variant.
//
// The parallel variants partition work by output element only (one writer per
// element, inner accumulation in a fixed order), and the scalar reductions use
// a fixed row-partial summation tree in both variants, so serial and parallel
// results are bit-identical for all inputs and thread counts. Tests and the
// benchmark target rely on that.

namespace serial {

// c(n x m) = a(n x k) * b(k x m)
void matmul(const double* a, const double* b, double* c, int n, int k, int m);
// c(n x m) = a(n x k) * b(m x k)^T
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m);
// c(k x m) = a(n x k)^T * b(n x m)
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m);

void add(const double* a, const double* b, double* out, int n);
// out(rows x cols) = a + row vector broadcast down the rows
void add_rowvec(const double* a, const double* row, double* out, int rows, int cols);
void sub(const double* a, const double* b, double* out, int n);
void scale(const double* a, double s, double* out, int n);
void relu(const double* a, double* out, int n);
// out = grad where x > 0, else 0 (subgradient at 0 is 0)
void relu_backward(const double* x, const double* grad, double* out, int n);

// out(m x cols): row r = a[idx[r]]
void gather_rows(const double* a, const int* idx, double* out, int m, int cols);
// out(n_seg x cols): row s = sum of a rows r with seg[r] == s, ascending r.
// Also the adjoint of gather_rows (scatter-add). Empty segments are zero.
void segment_sum(const double* a, const int* seg, double* out, int m, int n_seg, int cols);
void segment_mean(const double* a, const int* seg, double* out, int m, int n_seg, int cols);
// grad of segment_mean w.r.t. a: out[r] = gout[seg[r]] / count(seg[r])
void segment_mean_backward(const double* gout, const int* seg, double* out, int m, int n_seg,
                           int cols);

// Fixed summation tree: per-row serial partials combined in row order.
double sum_all(const double* a, int rows, int cols);
double sumsq_diff(const double* a, const double* b, int rows, int cols);

// y(n x cols): y_i = sum_j w_ij (x_i - x_j) over the CSR neighborhood of i
void laplacian_apply(const int* offsets, const int* nbr, const double* w, const double* x,
                     double* y, int n, int cols);

}  // namespace serial

void matmul(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m);
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m);
void add(const double* a, const double* b, double* out, int n);
void add_rowvec(const double* a, const double* row, double* out, int rows, int cols);
void sub(const double* a, const double* b, double* out, int n);
void scale(const double* a, double s, double* out, int n);
void relu(const double* a, double* out, int n);
void relu_backward(const double* x, const double* grad, double* out, int n);
void gather_rows(const double* a, const int* idx, double* out, int m, int cols);
void segment_sum(const double* a, const int* seg, double* out, int m, int n_seg, int cols);
void segment_mean(const double* a, const int* seg, double* out, int m, int n_seg, int cols);
void segment_mean_backward(const double* gout, const int* seg, double* out, int m, int n_seg,
                           int cols);
double sum_all(const double* a, int rows, int cols);
double sumsq_diff(const double* a, const double* b, int rows, int cols);
void laplacian_apply(const int* offsets, const int* nbr, const double* w, const double* x,
                     double* y, int n, int cols);

}  // namespace dpgn::kernels
