#pragma once

// Dense row-major matrices and the handful of kernels the GNN needs. Every
// kernel has a serial reference and an OpenMP variant; the OpenMP variants
// partition work by output element and keep each element's summation order,
// so both produce bitwise identical results.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace reopt {

enum class Exec { Serial, OpenMP };

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
  std::size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Incoming adjacency of one relation, grouped by destination. `order` lists
// source rows; the entries of destination d are order[start[d] .. start[d+1]).
struct Adjacency {
  std::vector<int> start;
  std::vector<int> order;
  int degree(int d) const { return start[d + 1] - start[d]; }
};

// Groups (src[e], dst[e]) by dst (stable in e). by_source swaps the roles.
Adjacency build_adjacency(const std::vector<int>& src, const std::vector<int>& dst, int num_nodes);

// Y = X W^T + b   (X: n x in, W: out x in, b: 1 x out)
void linear_forward(const Matrix& X, const Matrix& W, const Matrix& b, Matrix& Y, Exec ex);
// dX += dY W
void linear_backward_input(const Matrix& dY, const Matrix& W, Matrix& dX, Exec ex);
// dW += dY^T X,  db += column sums of dY
void linear_backward_params(const Matrix& dY, const Matrix& X, Matrix& dW, Matrix& db, Exec ex);

// out[d] = mean of src rows over the incoming edges of d; zero when d has none.
void mean_aggregate(const Adjacency& in, const Matrix& src, Matrix& out, Exec ex);
// dsrc[s] += sum over edges s -> d of dout[d] / deg(d). `out_adj` groups the
// same edges by source, listing destinations.
void mean_aggregate_backward(const Adjacency& in, const Adjacency& out_adj, const Matrix& dout, Matrix& dsrc,
                             Exec ex);

}  // namespace reopt
