#pragma once

#include <string>
#include <vector>

#include "esp/param.hpp"

namespace esp {

/// Define-by-run reverse-mode autodiff over row-major matrices (batch rows x
/// feature cols). Values are computed eagerly when a node is created;
/// backward() then accumulates d(loss)/d(parameter) into the gradient buffer
/// the graph was constructed with.
///
/// Dense layers reference parameter slices directly (no materialized copies)
/// so the forward/backward inner loops stay contiguous.
class Graph {
 public:
  Graph(const ParameterVector& params, std::vector<double>& param_grad);
  ~Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // ---- leaves ----
  int input(const double* data, int rows, int cols);
  int input(const std::vector<double>& m, int rows, int cols);
  /// Materializes a parameter slice as a node; backward flows into the slice.
  int param(const std::string& name);

  // ---- layers ----
  /// y = x * W^T + b, with W [out x in] and b [out x 1] parameter slices.
  int affine(int x, const std::string& w_name, const std::string& b_name);
  /// y[r,:] = M * x[r,:] for a constant 2x2 matrix (x must have 2 cols).
  int rotate2(int x, double m00, double m01, double m10, double m11);

  // ---- elementwise ----
  int tanh_(int x);
  int exp_(int x);
  int log_(int x);
  int square(int x);
  int neg(int x);
  int scale(int x, double c);
  int add_scalar(int x, double c);
  int clamp_(int x, double lo, double hi);
  int add(int x, int y);
  int sub(int x, int y);
  int mul(int x, int y);
  int min_(int x, int y);
  int max_(int x, int y);

  // ---- broadcasts ----
  /// x [r x c] + v [1 x c] per row.
  int add_rowvec(int x, int v);
  /// v [1 x c] replicated to [rows x c].
  int broadcast_rows(int v, int rows);
  /// x [r x c] * s [r x 1] per row.
  int mul_colvec(int x, int s);

  // ---- rows / reductions ----
  int log_softmax_rows(int x);
  /// y[r,0] = x[r, col_of_row[r]].
  int gather_cols(int x, const std::vector<int>& col_of_row);
  /// y[r, j] = x[r, perm[j]].
  int permute_cols(int x, const std::vector<int>& perm);
  /// y[r,0] = sum_j x[r,j].
  int row_sum(int x);
  /// y[r,0] = sum_j x[r,j] * y_in[r,j].
  int row_dot(int x, int y);
  int sum_all(int x);
  int mean_all(int x);

  // ---- access ----
  int rows(int n) const;
  int cols(int n) const;
  const std::vector<double>& value(int n) const;
  /// Scalar value of a [1 x 1] node.
  double scalar(int n) const;

  /// Reverse sweep from a scalar loss node; accumulates into param_grad.
  /// May be called once per graph.
  void backward(int loss_node);

 private:
  struct Node;
  int push(Node&& n);
  std::vector<Node> nodes_;
  const ParameterVector* params_;
  std::vector<double>* param_grad_;
  bool backward_done_ = false;
};

}  // namespace esp
