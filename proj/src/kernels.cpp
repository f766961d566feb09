#include "reopt/kernels.hpp"

#include <algorithm>

namespace reopt {

Adjacency build_adjacency(const std::vector<int>& src, const std::vector<int>& dst, int num_nodes) {
  Adjacency a;
  a.start.assign(num_nodes + 1, 0);
  for (int d : dst) ++a.start[d + 1];
  for (int k = 0; k < num_nodes; ++k) a.start[k + 1] += a.start[k];
  a.order.resize(src.size());
  std::vector<int> fill(a.start.begin(), a.start.end() - 1);
  for (std::size_t e = 0; e < src.size(); ++e) a.order[fill[dst[e]]++] = src[e];
  return a;
}

namespace {

inline void linear_row(const Matrix& X, const Matrix& W, const Matrix& b, Matrix& Y, int r) {
  const double* x = X.row(r);
  double* y = Y.row(r);
  for (int o = 0; o < W.rows; ++o) {
    const double* w = W.row(o);
    double s = b.v[o];
    for (int k = 0; k < W.cols; ++k) s += w[k] * x[k];
    y[o] = s;
  }
}

inline void input_row(const Matrix& dY, const Matrix& W, Matrix& dX, int r) {
  const double* g = dY.row(r);
  double* dx = dX.row(r);
  for (int o = 0; o < W.rows; ++o) {
    const double go = g[o];
    if (go == 0.0) continue;
    const double* w = W.row(o);
    for (int k = 0; k < W.cols; ++k) dx[k] += go * w[k];
  }
}

inline void param_row(const Matrix& dY, const Matrix& X, Matrix& dW, Matrix& db, int o) {
  double* dw = dW.row(o);
  double sb = 0.0;
  for (int r = 0; r < dY.rows; ++r) {
    const double g = dY(r, o);
    if (g == 0.0) continue;
    sb += g;
    const double* x = X.row(r);
    for (int k = 0; k < X.cols; ++k) dw[k] += g * x[k];
  }
  db.v[o] += sb;
}

inline void mean_row(const Adjacency& in, const Matrix& src, Matrix& out, int d) {
  double* o = out.row(d);
  std::fill(o, o + out.cols, 0.0);
  const int deg = in.degree(d);
  if (deg == 0) return;
  for (int e = in.start[d]; e < in.start[d + 1]; ++e) {
    const double* s = src.row(in.order[e]);
    for (int k = 0; k < out.cols; ++k) o[k] += s[k];
  }
  const double inv = 1.0 / deg;
  for (int k = 0; k < out.cols; ++k) o[k] *= inv;
}

inline void mean_back_row(const Adjacency& in, const Adjacency& out_adj, const Matrix& dout, Matrix& dsrc, int s) {
  double* g = dsrc.row(s);
  for (int e = out_adj.start[s]; e < out_adj.start[s + 1]; ++e) {
    const int d = out_adj.order[e];
    const double inv = 1.0 / in.degree(d);
    const double* go = dout.row(d);
    for (int k = 0; k < dsrc.cols; ++k) g[k] += go[k] * inv;
  }
}

}  // namespace

void linear_forward(const Matrix& X, const Matrix& W, const Matrix& b, Matrix& Y, Exec ex) {
  Y = Matrix(X.rows, W.rows);
  if (ex == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < X.rows; ++r) linear_row(X, W, b, Y, r);
  } else {
    for (int r = 0; r < X.rows; ++r) linear_row(X, W, b, Y, r);
  }
}

void linear_backward_input(const Matrix& dY, const Matrix& W, Matrix& dX, Exec ex) {
  if (ex == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < dY.rows; ++r) input_row(dY, W, dX, r);
  } else {
    for (int r = 0; r < dY.rows; ++r) input_row(dY, W, dX, r);
  }
}

void linear_backward_params(const Matrix& dY, const Matrix& X, Matrix& dW, Matrix& db, Exec ex) {
  if (ex == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < dW.rows; ++o) param_row(dY, X, dW, db, o);
  } else {
    for (int o = 0; o < dW.rows; ++o) param_row(dY, X, dW, db, o);
  }
}

void mean_aggregate(const Adjacency& in, const Matrix& src, Matrix& out, Exec ex) {
  const int n = static_cast<int>(in.start.size()) - 1;
  out = Matrix(n, src.cols);
  if (ex == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int d = 0; d < n; ++d) mean_row(in, src, out, d);
  } else {
    for (int d = 0; d < n; ++d) mean_row(in, src, out, d);
  }
}

void mean_aggregate_backward(const Adjacency& in, const Adjacency& out_adj, const Matrix& dout, Matrix& dsrc,
                             Exec ex) {
  const int n = static_cast<int>(out_adj.start.size()) - 1;
  if (ex == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) mean_back_row(in, out_adj, dout, dsrc, s);
  } else {
    for (int s = 0; s < n; ++s) mean_back_row(in, out_adj, dout, dsrc, s);
  }
}

}  // namespace reopt
