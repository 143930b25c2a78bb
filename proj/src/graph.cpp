#include "esp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "esp/nn_kernels.hpp"

namespace esp {

namespace {

enum class Op {
  kInput,
  kParam,
  kAffine,
  kRotate2,
  kTanh,
  kExp,
  kLog,
  kSquare,
  kNeg,
  kScale,
  kAddScalar,
  kClamp,
  kAdd,
  kSub,
  kMul,
  kMin,
  kMax,
  kAddRowvec,
  kBroadcastRows,
  kMulColvec,
  kLogSoftmax,
  kGatherCols,
  kPermuteCols,
  kRowSum,
  kRowDot,
  kSumAll,
  kMeanAll,
};

}  // namespace

struct Graph::Node {
  Op op;
  int a = -1, b = -1;
  int rows = 0, cols = 0;
  std::vector<double> val;
  std::vector<double> grad;
  // op-specific payload
  int w_off = -1, b_off = -1, in_dim = 0, out_dim = 0;  // affine
  std::vector<int> idx;                                 // gather / permute
  double c0 = 0.0, c1 = 0.0;  // scalars / rotate2 row 0
  double c2 = 0.0, c3 = 0.0;  // rotate2 row 1
  std::vector<double> aux;    // cached softmax for kLogSoftmax
};

Graph::Graph(const ParameterVector& params, std::vector<double>& param_grad)
    : params_(&params), param_grad_(&param_grad) {
  if (static_cast<int>(param_grad.size()) != params.size())
    throw std::invalid_argument("Graph: gradient buffer size mismatch");
  nodes_.reserve(64);
}

Graph::~Graph() = default;

int Graph::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::rows(int n) const { return nodes_[n].rows; }
int Graph::cols(int n) const { return nodes_[n].cols; }
const std::vector<double>& Graph::value(int n) const { return nodes_[n].val; }

double Graph::scalar(int n) const {
  const Node& nd = nodes_[n];
  if (nd.rows != 1 || nd.cols != 1)
    throw std::invalid_argument("Graph::scalar: node is not 1x1");
  return nd.val[0];
}

int Graph::input(const double* data, int rows, int cols) {
  Node n;
  n.op = Op::kInput;
  n.rows = rows;
  n.cols = cols;
  n.val.assign(data, data + static_cast<size_t>(rows) * cols);
  return push(std::move(n));
}

int Graph::input(const std::vector<double>& m, int rows, int cols) {
  if (static_cast<size_t>(rows) * cols != m.size())
    throw std::invalid_argument("Graph::input: shape mismatch");
  return input(m.data(), rows, cols);
}

int Graph::param(const std::string& name) {
  const ParamSlice& s = params_->slice(name);
  Node n;
  n.op = Op::kParam;
  n.rows = s.rows;
  n.cols = s.cols;
  n.w_off = s.offset;
  const double* d = params_->data(s);
  n.val.assign(d, d + s.size());
  return push(std::move(n));
}

int Graph::affine(int x, const std::string& w_name, const std::string& b_name) {
  const Node& xn = nodes_[x];
  const ParamSlice& w = params_->slice(w_name);
  const ParamSlice& bs = params_->slice(b_name);
  if (w.cols != xn.cols)
    throw std::invalid_argument("affine: input width " + std::to_string(xn.cols) +
                                " != W cols " + std::to_string(w.cols));
  if (bs.rows * bs.cols != w.rows)
    throw std::invalid_argument("affine: bias length != W rows");
  Node n;
  n.op = Op::kAffine;
  n.a = x;
  n.rows = xn.rows;
  n.cols = w.rows;
  n.w_off = w.offset;
  n.b_off = bs.offset;
  n.in_dim = w.cols;
  n.out_dim = w.rows;
  n.val.resize(static_cast<size_t>(n.rows) * n.cols);
  const double* W = params_->values.data() + w.offset;
  const double* B = params_->values.data() + bs.offset;
  for (int r = 0; r < n.rows; ++r) {
    const double* xr = xn.val.data() + static_cast<size_t>(r) * n.in_dim;
    double* yr = n.val.data() + static_cast<size_t>(r) * n.out_dim;
    dense_row_forward(W, B, xr, yr, n.out_dim, n.in_dim);
  }
  return push(std::move(n));
}

int Graph::rotate2(int x, double m00, double m01, double m10, double m11) {
  const Node& xn = nodes_[x];
  if (xn.cols != 2) throw std::invalid_argument("rotate2: node must have 2 cols");
  Node n;
  n.op = Op::kRotate2;
  n.a = x;
  n.rows = xn.rows;
  n.cols = 2;
  n.c0 = m00;
  n.c1 = m01;
  n.c2 = m10;
  n.c3 = m11;
  n.val.resize(xn.val.size());
  for (int r = 0; r < n.rows; ++r) {
    double vx = xn.val[2 * r], vy = xn.val[2 * r + 1];
    n.val[2 * r] = m00 * vx + m01 * vy;
    n.val[2 * r + 1] = m10 * vx + m11 * vy;
  }
  return push(std::move(n));
}

#define ESP_UNARY(NAME, OPTAG, EXPR)                    \
  int Graph::NAME(int x) {                              \
    const Node& xn = nodes_[x];                         \
    Node n;                                             \
    n.op = OPTAG;                                       \
    n.a = x;                                            \
    n.rows = xn.rows;                                   \
    n.cols = xn.cols;                                   \
    n.val.resize(xn.val.size());                        \
    for (size_t i = 0; i < xn.val.size(); ++i) {        \
      double v = xn.val[i];                             \
      n.val[i] = (EXPR);                                \
    }                                                   \
    return push(std::move(n));                          \
  }

ESP_UNARY(tanh_, Op::kTanh, std::tanh(v))
ESP_UNARY(exp_, Op::kExp, std::exp(v))
ESP_UNARY(log_, Op::kLog, std::log(v))
ESP_UNARY(square, Op::kSquare, v * v)
ESP_UNARY(neg, Op::kNeg, -v)
#undef ESP_UNARY

int Graph::scale(int x, double c) {
  const Node& xn = nodes_[x];
  Node n;
  n.op = Op::kScale;
  n.a = x;
  n.rows = xn.rows;
  n.cols = xn.cols;
  n.c0 = c;
  n.val.resize(xn.val.size());
  for (size_t i = 0; i < xn.val.size(); ++i) n.val[i] = c * xn.val[i];
  return push(std::move(n));
}

int Graph::add_scalar(int x, double c) {
  const Node& xn = nodes_[x];
  Node n;
  n.op = Op::kAddScalar;
  n.a = x;
  n.rows = xn.rows;
  n.cols = xn.cols;
  n.c0 = c;
  n.val.resize(xn.val.size());
  for (size_t i = 0; i < xn.val.size(); ++i) n.val[i] = xn.val[i] + c;
  return push(std::move(n));
}

int Graph::clamp_(int x, double lo, double hi) {
  const Node& xn = nodes_[x];
  Node n;
  n.op = Op::kClamp;
  n.a = x;
  n.rows = xn.rows;
  n.cols = xn.cols;
  n.c0 = lo;
  n.c1 = hi;
  n.val.resize(xn.val.size());
  for (size_t i = 0; i < xn.val.size(); ++i)
    n.val[i] = std::min(hi, std::max(lo, xn.val[i]));
  return push(std::move(n));
}

#define ESP_BINARY(NAME, OPTAG, EXPR)                                      \
  int Graph::NAME(int x, int y) {                                          \
    const Node& xn = nodes_[x];                                            \
    const Node& yn = nodes_[y];                                            \
    if (xn.rows != yn.rows || xn.cols != yn.cols)                          \
      throw std::invalid_argument(#NAME ": shape mismatch");               \
    Node n;                                                                \
    n.op = OPTAG;                                                          \
    n.a = x;                                                               \
    n.b = y;                                                               \
    n.rows = xn.rows;                                                      \
    n.cols = xn.cols;                                                      \
    n.val.resize(xn.val.size());                                           \
    for (size_t i = 0; i < xn.val.size(); ++i) {                           \
      double u = xn.val[i], v = yn.val[i];                                 \
      n.val[i] = (EXPR);                                                   \
    }                                                                      \
    return push(std::move(n));                                             \
  }

ESP_BINARY(add, Op::kAdd, u + v)
ESP_BINARY(sub, Op::kSub, u - v)
ESP_BINARY(mul, Op::kMul, u * v)
ESP_BINARY(min_, Op::kMin, std::min(u, v))
ESP_BINARY(max_, Op::kMax, std::max(u, v))
#undef ESP_BINARY

int Graph::add_rowvec(int x, int v) {
  const Node& xn = nodes_[x];
  const Node& vn = nodes_[v];
  if (vn.rows != 1 || vn.cols != xn.cols)
    throw std::invalid_argument("add_rowvec: v must be [1 x cols(x)]");
  Node n;
  n.op = Op::kAddRowvec;
  n.a = x;
  n.b = v;
  n.rows = xn.rows;
  n.cols = xn.cols;
  n.val.resize(xn.val.size());
  for (int r = 0; r < n.rows; ++r)
    for (int c = 0; c < n.cols; ++c)
      n.val[static_cast<size_t>(r) * n.cols + c] =
          xn.val[static_cast<size_t>(r) * n.cols + c] + vn.val[c];
  return push(std::move(n));
}

int Graph::broadcast_rows(int v, int rows) {
  const Node& vn = nodes_[v];
  if (vn.rows != 1) throw std::invalid_argument("broadcast_rows: v must be [1 x c]");
  Node n;
  n.op = Op::kBroadcastRows;
  n.a = v;
  n.rows = rows;
  n.cols = vn.cols;
  n.val.resize(static_cast<size_t>(rows) * vn.cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < vn.cols; ++c)
      n.val[static_cast<size_t>(r) * vn.cols + c] = vn.val[c];
  return push(std::move(n));
}

int Graph::mul_colvec(int x, int s) {
  const Node& xn = nodes_[x];
  const Node& sn = nodes_[s];
  if (sn.cols != 1 || sn.rows != xn.rows)
    throw std::invalid_argument("mul_colvec: s must be [rows(x) x 1]");
  Node n;
  n.op = Op::kMulColvec;
  n.a = x;
  n.b = s;
  n.rows = xn.rows;
  n.cols = xn.cols;
  n.val.resize(xn.val.size());
  for (int r = 0; r < n.rows; ++r)
    for (int c = 0; c < n.cols; ++c)
      n.val[static_cast<size_t>(r) * n.cols + c] =
          xn.val[static_cast<size_t>(r) * n.cols + c] * sn.val[r];
  return push(std::move(n));
}

int Graph::log_softmax_rows(int x) {
  const Node& xn = nodes_[x];
  Node n;
  n.op = Op::kLogSoftmax;
  n.a = x;
  n.rows = xn.rows;
  n.cols = xn.cols;
  n.val.resize(xn.val.size());
  n.aux.resize(xn.val.size());  // softmax cache for backward
  std::vector<double> terms(n.cols);
  for (int r = 0; r < n.rows; ++r) {
    const double* xr = xn.val.data() + static_cast<size_t>(r) * n.cols;
    double* yr = n.val.data() + static_cast<size_t>(r) * n.cols;
    double* pr = n.aux.data() + static_cast<size_t>(r) * n.cols;
    double m = xr[0];
    for (int c = 1; c < n.cols; ++c) m = std::max(m, xr[c]);
    for (int c = 0; c < n.cols; ++c) terms[c] = std::exp(xr[c] - m);
    // Sort the summands so logsumexp is invariant under permutations of the
    // logits; downstream symmetry diagnostics rely on this.
    std::vector<double> sorted(terms);
    std::sort(sorted.begin(), sorted.end());
    double z = 0.0;
    for (double t : sorted) z += t;
    double logz = std::log(z);
    for (int c = 0; c < n.cols; ++c) {
      yr[c] = xr[c] - m - logz;
      pr[c] = terms[c] / z;
    }
  }
  return push(std::move(n));
}

int Graph::gather_cols(int x, const std::vector<int>& col_of_row) {
  const Node& xn = nodes_[x];
  if (static_cast<int>(col_of_row.size()) != xn.rows)
    throw std::invalid_argument("gather_cols: index length != rows");
  Node n;
  n.op = Op::kGatherCols;
  n.a = x;
  n.rows = xn.rows;
  n.cols = 1;
  n.idx = col_of_row;
  n.val.resize(xn.rows);
  for (int r = 0; r < xn.rows; ++r) {
    int c = col_of_row[r];
    if (c < 0 || c >= xn.cols)
      throw std::invalid_argument("gather_cols: index out of range");
    n.val[r] = xn.val[static_cast<size_t>(r) * xn.cols + c];
  }
  return push(std::move(n));
}

int Graph::permute_cols(int x, const std::vector<int>& perm) {
  const Node& xn = nodes_[x];
  if (static_cast<int>(perm.size()) != xn.cols)
    throw std::invalid_argument("permute_cols: perm length != cols");
  Node n;
  n.op = Op::kPermuteCols;
  n.a = x;
  n.rows = xn.rows;
  n.cols = xn.cols;
  n.idx = perm;
  n.val.resize(xn.val.size());
  for (int r = 0; r < n.rows; ++r)
    for (int c = 0; c < n.cols; ++c)
      n.val[static_cast<size_t>(r) * n.cols + c] =
          xn.val[static_cast<size_t>(r) * n.cols + perm[c]];
  return push(std::move(n));
}

int Graph::row_sum(int x) {
  const Node& xn = nodes_[x];
  Node n;
  n.op = Op::kRowSum;
  n.a = x;
  n.rows = xn.rows;
  n.cols = 1;
  n.val.resize(xn.rows);
  for (int r = 0; r < xn.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < xn.cols; ++c)
      acc += xn.val[static_cast<size_t>(r) * xn.cols + c];
    n.val[r] = acc;
  }
  return push(std::move(n));
}

int Graph::row_dot(int x, int y) {
  const Node& xn = nodes_[x];
  const Node& yn = nodes_[y];
  if (xn.rows != yn.rows || xn.cols != yn.cols)
    throw std::invalid_argument("row_dot: shape mismatch");
  Node n;
  n.op = Op::kRowDot;
  n.a = x;
  n.b = y;
  n.rows = xn.rows;
  n.cols = 1;
  n.val.resize(xn.rows);
  for (int r = 0; r < xn.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < xn.cols; ++c) {
      size_t i = static_cast<size_t>(r) * xn.cols + c;
      acc += xn.val[i] * yn.val[i];
    }
    n.val[r] = acc;
  }
  return push(std::move(n));
}

int Graph::sum_all(int x) {
  const Node& xn = nodes_[x];
  Node n;
  n.op = Op::kSumAll;
  n.a = x;
  n.rows = 1;
  n.cols = 1;
  double acc = 0.0;
  for (double v : xn.val) acc += v;
  n.val = {acc};
  return push(std::move(n));
}

int Graph::mean_all(int x) {
  const Node& xn = nodes_[x];
  Node n;
  n.op = Op::kMeanAll;
  n.a = x;
  n.rows = 1;
  n.cols = 1;
  double acc = 0.0;
  for (double v : xn.val) acc += v;
  n.val = {acc / static_cast<double>(xn.val.size())};
  return push(std::move(n));
}

void Graph::backward(int loss_node) {
  if (backward_done_) throw std::logic_error("Graph::backward called twice");
  backward_done_ = true;
  Node& loss = nodes_[loss_node];
  if (loss.rows != 1 || loss.cols != 1)
    throw std::invalid_argument("backward: loss must be a 1x1 node");
  for (Node& n : nodes_) n.grad.assign(n.val.size(), 0.0);
  loss.grad[0] = 1.0;

  for (int id = loss_node; id >= 0; --id) {
    Node& n = nodes_[id];
    bool any = false;
    for (double g : n.grad)
      if (g != 0.0) {
        any = true;
        break;
      }
    if (!any) continue;
    Node* ax = n.a >= 0 ? &nodes_[n.a] : nullptr;
    Node* bx = n.b >= 0 ? &nodes_[n.b] : nullptr;

    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kParam: {
        double* pg = param_grad_->data() + n.w_off;
        for (size_t i = 0; i < n.grad.size(); ++i) pg[i] += n.grad[i];
        break;
      }
      case Op::kAffine: {
        const double* W = params_->values.data() + n.w_off;
        double* dW = param_grad_->data() + n.w_off;
        double* dB = param_grad_->data() + n.b_off;
        for (int r = 0; r < n.rows; ++r) {
          const double* gy = n.grad.data() + static_cast<size_t>(r) * n.out_dim;
          const double* xr = ax->val.data() + static_cast<size_t>(r) * n.in_dim;
          double* gx = ax->grad.data() + static_cast<size_t>(r) * n.in_dim;
          for (int o = 0; o < n.out_dim; ++o) {
            double g = gy[o];
            if (g == 0.0) continue;
            dB[o] += g;
            axpy(gx, W + static_cast<size_t>(o) * n.in_dim, g, n.in_dim);
            axpy(dW + static_cast<size_t>(o) * n.in_dim, xr, g, n.in_dim);
          }
        }
        break;
      }
      case Op::kRotate2:
        for (int r = 0; r < n.rows; ++r) {
          double gx = n.grad[2 * r], gy = n.grad[2 * r + 1];
          ax->grad[2 * r] += n.c0 * gx + n.c2 * gy;
          ax->grad[2 * r + 1] += n.c1 * gx + n.c3 * gy;
        }
        break;
      case Op::kTanh:
        for (size_t i = 0; i < n.val.size(); ++i)
          ax->grad[i] += n.grad[i] * (1.0 - n.val[i] * n.val[i]);
        break;
      case Op::kExp:
        for (size_t i = 0; i < n.val.size(); ++i)
          ax->grad[i] += n.grad[i] * n.val[i];
        break;
      case Op::kLog:
        for (size_t i = 0; i < n.val.size(); ++i)
          ax->grad[i] += n.grad[i] / ax->val[i];
        break;
      case Op::kSquare:
        for (size_t i = 0; i < n.val.size(); ++i)
          ax->grad[i] += n.grad[i] * 2.0 * ax->val[i];
        break;
      case Op::kNeg:
        for (size_t i = 0; i < n.val.size(); ++i) ax->grad[i] -= n.grad[i];
        break;
      case Op::kScale:
        for (size_t i = 0; i < n.val.size(); ++i)
          ax->grad[i] += n.grad[i] * n.c0;
        break;
      case Op::kAddScalar:
        for (size_t i = 0; i < n.val.size(); ++i) ax->grad[i] += n.grad[i];
        break;
      case Op::kClamp:
        for (size_t i = 0; i < n.val.size(); ++i) {
          double v = ax->val[i];
          if (v >= n.c0 && v <= n.c1) ax->grad[i] += n.grad[i];
        }
        break;
      case Op::kAdd:
        for (size_t i = 0; i < n.val.size(); ++i) {
          ax->grad[i] += n.grad[i];
          bx->grad[i] += n.grad[i];
        }
        break;
      case Op::kSub:
        for (size_t i = 0; i < n.val.size(); ++i) {
          ax->grad[i] += n.grad[i];
          bx->grad[i] -= n.grad[i];
        }
        break;
      case Op::kMul:
        for (size_t i = 0; i < n.val.size(); ++i) {
          ax->grad[i] += n.grad[i] * bx->val[i];
          bx->grad[i] += n.grad[i] * ax->val[i];
        }
        break;
      case Op::kMin:
        for (size_t i = 0; i < n.val.size(); ++i) {
          if (ax->val[i] <= bx->val[i])
            ax->grad[i] += n.grad[i];
          else
            bx->grad[i] += n.grad[i];
        }
        break;
      case Op::kMax:
        for (size_t i = 0; i < n.val.size(); ++i) {
          if (ax->val[i] >= bx->val[i])
            ax->grad[i] += n.grad[i];
          else
            bx->grad[i] += n.grad[i];
        }
        break;
      case Op::kAddRowvec:
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < n.cols; ++c) {
            double g = n.grad[static_cast<size_t>(r) * n.cols + c];
            ax->grad[static_cast<size_t>(r) * n.cols + c] += g;
            bx->grad[c] += g;
          }
        break;
      case Op::kBroadcastRows:
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < n.cols; ++c)
            ax->grad[c] += n.grad[static_cast<size_t>(r) * n.cols + c];
        break;
      case Op::kMulColvec:
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < n.cols; ++c) {
            size_t i = static_cast<size_t>(r) * n.cols + c;
            ax->grad[i] += n.grad[i] * bx->val[r];
            bx->grad[r] += n.grad[i] * ax->val[i];
          }
        break;
      case Op::kLogSoftmax:
        // dx = dy - softmax * sum(dy) per row
        for (int r = 0; r < n.rows; ++r) {
          const double* gy = n.grad.data() + static_cast<size_t>(r) * n.cols;
          const double* p = n.aux.data() + static_cast<size_t>(r) * n.cols;
          double* gx = ax->grad.data() + static_cast<size_t>(r) * n.cols;
          double gsum = 0.0;
          for (int c = 0; c < n.cols; ++c) gsum += gy[c];
          for (int c = 0; c < n.cols; ++c) gx[c] += gy[c] - p[c] * gsum;
        }
        break;
      case Op::kGatherCols:
        for (int r = 0; r < n.rows; ++r)
          ax->grad[static_cast<size_t>(r) * ax->cols + n.idx[r]] += n.grad[r];
        break;
      case Op::kPermuteCols:
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < n.cols; ++c)
            ax->grad[static_cast<size_t>(r) * n.cols + n.idx[c]] +=
                n.grad[static_cast<size_t>(r) * n.cols + c];
        break;
      case Op::kRowSum:
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < ax->cols; ++c)
            ax->grad[static_cast<size_t>(r) * ax->cols + c] += n.grad[r];
        break;
      case Op::kRowDot:
        for (int r = 0; r < n.rows; ++r)
          for (int c = 0; c < ax->cols; ++c) {
            size_t i = static_cast<size_t>(r) * ax->cols + c;
            ax->grad[i] += n.grad[r] * bx->val[i];
            bx->grad[i] += n.grad[r] * ax->val[i];
          }
        break;
      case Op::kSumAll:
        for (size_t i = 0; i < ax->val.size(); ++i) ax->grad[i] += n.grad[0];
        break;
      case Op::kMeanAll: {
        double g = n.grad[0] / static_cast<double>(ax->val.size());
        for (size_t i = 0; i < ax->val.size(); ++i) ax->grad[i] += g;
        break;
      }
    }
  }
}

}  // namespace esp
