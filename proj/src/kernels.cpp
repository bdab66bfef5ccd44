#include "dpgn/kernels.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpgn::kernels {

// Work (in flops) below which the parallel variants stay on one thread.
static constexpr long long kParCutoff = 1 << 16;

namespace serial {

void matmul(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    double* ci = c + static_cast<long long>(i) * m;
    for (int j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a + static_cast<long long>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + static_cast<long long>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<long long>(i) * k;
    double* ci = c + static_cast<long long>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* bj = b + static_cast<long long>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < k; ++i) {
    double* ci = c + static_cast<long long>(i) * m;
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int p = 0; p < n; ++p) acc += a[static_cast<long long>(p) * k + i] * b[static_cast<long long>(p) * m + j];
      ci[j] = acc;
    }
  }
}

void add(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void add_rowvec(const double* a, const double* row, double* out, int rows, int cols) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out[static_cast<long long>(i) * cols + j] = a[static_cast<long long>(i) * cols + j] + row[j];
}

void sub(const double* a, const double* b, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void scale(const double* a, double s, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] * s;
}

void relu(const double* a, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(const double* x, const double* grad, double* out, int n) {
  for (int i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? grad[i] : 0.0;
}

void gather_rows(const double* a, const int* idx, double* out, int m, int cols) {
  for (int r = 0; r < m; ++r) {
    const double* src = a + static_cast<long long>(idx[r]) * cols;
    double* dst = out + static_cast<long long>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = src[j];
  }
}

void segment_sum(const double* a, const int* seg, double* out, int m, int n_seg, int cols) {
  for (long long i = 0; i < static_cast<long long>(n_seg) * cols; ++i) out[i] = 0.0;
  for (int r = 0; r < m; ++r) {
    double* dst = out + static_cast<long long>(seg[r]) * cols;
    const double* src = a + static_cast<long long>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] += src[j];
  }
}

void segment_mean(const double* a, const int* seg, double* out, int m, int n_seg, int cols) {
  segment_sum(a, seg, out, m, n_seg, cols);
  std::vector<int> count(n_seg, 0);
  for (int r = 0; r < m; ++r) count[seg[r]]++;
  for (int s = 0; s < n_seg; ++s) {
    if (count[s] == 0) continue;  // empty segment stays zero
    const double inv = 1.0 / count[s];
    double* row = out + static_cast<long long>(s) * cols;
    for (int j = 0; j < cols; ++j) row[j] *= inv;
  }
}

void segment_mean_backward(const double* gout, const int* seg, double* out, int m, int n_seg,
                           int cols) {
  std::vector<int> count(n_seg, 0);
  for (int r = 0; r < m; ++r) count[seg[r]]++;
  for (int r = 0; r < m; ++r) {
    const double inv = 1.0 / count[seg[r]];
    const double* src = gout + static_cast<long long>(seg[r]) * cols;
    double* dst = out + static_cast<long long>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = src[j] * inv;
  }
}

double sum_all(const double* a, int rows, int cols) {
  double total = 0.0;
  for (int i = 0; i < rows; ++i) {
    const double* ai = a + static_cast<long long>(i) * cols;
    double partial = 0.0;
    for (int j = 0; j < cols; ++j) partial += ai[j];
    total += partial;
  }
  return total;
}

double sumsq_diff(const double* a, const double* b, int rows, int cols) {
  double total = 0.0;
  for (int i = 0; i < rows; ++i) {
    const long long off = static_cast<long long>(i) * cols;
    double partial = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double d = a[off + j] - b[off + j];
      partial += d * d;
    }
    total += partial;
  }
  return total;
}

void laplacian_apply(const int* offsets, const int* nbr, const double* w, const double* x,
                     double* y, int n, int cols) {
  for (int i = 0; i < n; ++i) {
    double* yi = y + static_cast<long long>(i) * cols;
    const double* xi = x + static_cast<long long>(i) * cols;
    for (int j = 0; j < cols; ++j) yi[j] = 0.0;
    for (int e = offsets[i]; e < offsets[i + 1]; ++e) {
      const double* xj = x + static_cast<long long>(nbr[e]) * cols;
      const double we = w[e];
      for (int j = 0; j < cols; ++j) yi[j] += we * (xi[j] - xj[j]);
    }
  }
}

}  // namespace serial

void matmul(const double* a, const double* b, double* c, int n, int k, int m) {
  const long long work = static_cast<long long>(n) * k * m;
#pragma omp parallel for if (work >= kParCutoff && n > 1) schedule(static)
  for (int i = 0; i < n; ++i) {
    double* ci = c + static_cast<long long>(i) * m;
    for (int j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a + static_cast<long long>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + static_cast<long long>(p) * m;
      for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, int n, int k, int m) {
  const long long work = static_cast<long long>(n) * k * m;
#pragma omp parallel for if (work >= kParCutoff && n > 1) schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<long long>(i) * k;
    double* ci = c + static_cast<long long>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* bj = b + static_cast<long long>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m) {
  const long long work = static_cast<long long>(n) * k * m;
#pragma omp parallel for if (work >= kParCutoff && k > 1) schedule(static)
  for (int i = 0; i < k; ++i) {
    double* ci = c + static_cast<long long>(i) * m;
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int p = 0; p < n; ++p) acc += a[static_cast<long long>(p) * k + i] * b[static_cast<long long>(p) * m + j];
      ci[j] = acc;
    }
  }
}

void add(const double* a, const double* b, double* out, int n) {
#pragma omp parallel for if (n >= kParCutoff) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void add_rowvec(const double* a, const double* row, double* out, int rows, int cols) {
#pragma omp parallel for if (static_cast<long long>(rows) * cols >= kParCutoff) schedule(static)
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out[static_cast<long long>(i) * cols + j] = a[static_cast<long long>(i) * cols + j] + row[j];
}

void sub(const double* a, const double* b, double* out, int n) {
#pragma omp parallel for if (n >= kParCutoff) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void scale(const double* a, double s, double* out, int n) {
#pragma omp parallel for if (n >= kParCutoff) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] * s;
}

void relu(const double* a, double* out, int n) {
#pragma omp parallel for if (n >= kParCutoff) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(const double* x, const double* grad, double* out, int n) {
#pragma omp parallel for if (n >= kParCutoff) schedule(static)
  for (int i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? grad[i] : 0.0;
}

void gather_rows(const double* a, const int* idx, double* out, int m, int cols) {
#pragma omp parallel for if (static_cast<long long>(m) * cols >= kParCutoff) schedule(static)
  for (int r = 0; r < m; ++r) {
    const double* src = a + static_cast<long long>(idx[r]) * cols;
    double* dst = out + static_cast<long long>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = src[j];
  }
}

// CSR buckets over the segment ids; counting sort is stable so each segment
// accumulates its rows in ascending order, matching the serial scatter.
static void build_buckets(const int* seg, int m, int n_seg, std::vector<int>& ptr,
                          std::vector<int>& rows) {
  ptr.assign(n_seg + 1, 0);
  for (int r = 0; r < m; ++r) ptr[seg[r] + 1]++;
  for (int s = 0; s < n_seg; ++s) ptr[s + 1] += ptr[s];
  rows.resize(m);
  std::vector<int> cursor(ptr.begin(), ptr.end() - 1);
  for (int r = 0; r < m; ++r) rows[cursor[seg[r]]++] = r;
}

void segment_sum(const double* a, const int* seg, double* out, int m, int n_seg, int cols) {
  const long long work = static_cast<long long>(m) * cols;
  if (work < kParCutoff || n_seg <= 1) {
    serial::segment_sum(a, seg, out, m, n_seg, cols);
    return;
  }
  std::vector<int> ptr, rows;
  build_buckets(seg, m, n_seg, ptr, rows);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n_seg; ++s) {
    double* dst = out + static_cast<long long>(s) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = 0.0;
    for (int p = ptr[s]; p < ptr[s + 1]; ++p) {
      const double* src = a + static_cast<long long>(rows[p]) * cols;
      for (int j = 0; j < cols; ++j) dst[j] += src[j];
    }
  }
}

void segment_mean(const double* a, const int* seg, double* out, int m, int n_seg, int cols) {
  segment_sum(a, seg, out, m, n_seg, cols);
  std::vector<int> count(n_seg, 0);
  for (int r = 0; r < m; ++r) count[seg[r]]++;
#pragma omp parallel for if (static_cast<long long>(n_seg) * cols >= kParCutoff) schedule(static)
  for (int s = 0; s < n_seg; ++s) {
    if (count[s] == 0) continue;
    const double inv = 1.0 / count[s];
    double* row = out + static_cast<long long>(s) * cols;
    for (int j = 0; j < cols; ++j) row[j] *= inv;
  }
}

void segment_mean_backward(const double* gout, const int* seg, double* out, int m, int n_seg,
                           int cols) {
  std::vector<int> count(n_seg, 0);
  for (int r = 0; r < m; ++r) count[seg[r]]++;
#pragma omp parallel for if (static_cast<long long>(m) * cols >= kParCutoff) schedule(static)
  for (int r = 0; r < m; ++r) {
    const double inv = 1.0 / count[seg[r]];
    const double* src = gout + static_cast<long long>(seg[r]) * cols;
    double* dst = out + static_cast<long long>(r) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = src[j] * inv;
  }
}

double sum_all(const double* a, int rows, int cols) {
  const long long work = static_cast<long long>(rows) * cols;
  if (work < kParCutoff || rows <= 1) return serial::sum_all(a, rows, cols);
  std::vector<double> partial(rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const double* ai = a + static_cast<long long>(i) * cols;
    double p = 0.0;
    for (int j = 0; j < cols; ++j) p += ai[j];
    partial[i] = p;
  }
  double total = 0.0;
  for (int i = 0; i < rows; ++i) total += partial[i];
  return total;
}

double sumsq_diff(const double* a, const double* b, int rows, int cols) {
  const long long work = static_cast<long long>(rows) * cols;
  if (work < kParCutoff || rows <= 1) return serial::sumsq_diff(a, b, rows, cols);
  std::vector<double> partial(rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const long long off = static_cast<long long>(i) * cols;
    double p = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double d = a[off + j] - b[off + j];
      p += d * d;
    }
    partial[i] = p;
  }
  double total = 0.0;
  for (int i = 0; i < rows; ++i) total += partial[i];
  return total;
}

void laplacian_apply(const int* offsets, const int* nbr, const double* w, const double* x,
                     double* y, int n, int cols) {
  const long long work = static_cast<long long>(offsets[n]) * cols;
#pragma omp parallel for if (work >= kParCutoff && n > 1) schedule(static)
  for (int i = 0; i < n; ++i) {
    double* yi = y + static_cast<long long>(i) * cols;
    const double* xi = x + static_cast<long long>(i) * cols;
    for (int j = 0; j < cols; ++j) yi[j] = 0.0;
    for (int e = offsets[i]; e < offsets[i + 1]; ++e) {
      const double* xj = x + static_cast<long long>(nbr[e]) * cols;
      const double we = w[e];
      for (int j = 0; j < cols; ++j) yi[j] += we * (xi[j] - xj[j]);
    }
  }
}

}  // namespace dpgn::kernels
