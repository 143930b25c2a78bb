#include "esp/nn.hpp"

#include "esp/nn_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esp {

std::vector<int> MlpSpec::dims() const {
  std::vector<int> d;
  d.push_back(in);
  for (int h : hidden) d.push_back(h);
  d.push_back(out);
  return d;
}

void orthogonal_init(ParameterVector& params, const std::string& name,
                     double gain, Rng& rng) {
  const ParamSlice& s = params.slice(name);
  int rows = s.rows, cols = s.cols;
  double* w = params.data(s);
  for (int i = 0; i < rows * cols; ++i) w[i] = rng.normal();
  // Gram-Schmidt on the shorter side.
  bool by_rows = rows <= cols;
  int nvec = by_rows ? rows : cols;
  int dim = by_rows ? cols : rows;
  auto at = [&](int v, int k) -> double& {
    return by_rows ? w[v * cols + k] : w[k * cols + v];
  };
  for (int v = 0; v < nvec; ++v) {
    for (int u = 0; u < v; ++u) {
      double dot = 0.0;
      for (int k = 0; k < dim; ++k) dot += at(v, k) * at(u, k);
      for (int k = 0; k < dim; ++k) at(v, k) -= dot * at(u, k);
    }
    double norm = 0.0;
    for (int k = 0; k < dim; ++k) norm += at(v, k) * at(v, k);
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;  // degenerate draw; keep finite
    for (int k = 0; k < dim; ++k) at(v, k) /= norm;
  }
  for (int i = 0; i < rows * cols; ++i) w[i] *= gain;
}

void adam_step(ParameterVector& params, const std::vector<double>& grad,
               AdamState& state, const AdamConfig& cfg) {
  int n = params.size();
  if (static_cast<int>(grad.size()) != n)
    throw std::invalid_argument("adam_step: gradient size mismatch");
  if (static_cast<int>(state.m.size()) != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  for (double g : grad)
    if (!std::isfinite(g))
      throw NumericalError("adam_step: non-finite gradient, update aborted");

  double scale = 1.0;
  if (cfg.max_grad_norm > 0.0) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    double norm = std::sqrt(sq);
    if (norm > cfg.max_grad_norm) scale = cfg.max_grad_norm / norm;
  }

  state.t += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (int i = 0; i < n; ++i) {
    double g = grad[i] * scale;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params.values[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  if (!params.all_finite())
    throw NumericalError("adam_step: non-finite parameters after update");
}

void register_mlp(ParameterVector& params, const std::string& prefix,
                  const MlpSpec& spec, double out_gain, Rng& rng) {
  auto dims = spec.dims();
  for (int l = 0; l + 1 < static_cast<int>(dims.size()); ++l) {
    std::string w = prefix + ".W" + std::to_string(l);
    std::string b = prefix + ".b" + std::to_string(l);
    params.add(w, dims[l + 1], dims[l]);
    params.add(b, dims[l + 1], 1);
    bool last = (l + 2 == static_cast<int>(dims.size()));
    orthogonal_init(params, w, last ? out_gain : std::sqrt(2.0), rng);
  }
}

void mlp_apply(const ParameterVector& params, const std::string& prefix,
               const MlpSpec& spec, const double* in, double* out,
               MlpScratch& scratch) {
  auto dims = spec.dims();
  int n_layers = static_cast<int>(dims.size()) - 1;
  const double* cur = in;
  for (int l = 0; l < n_layers; ++l) {
    const ParamSlice& w = params.slice(prefix + ".W" + std::to_string(l));
    const ParamSlice& b = params.slice(prefix + ".b" + std::to_string(l));
    bool last = (l + 1 == n_layers);
    std::vector<double>& dst = (l % 2 == 0) ? scratch.a : scratch.b;
    dst.resize(dims[l + 1]);
    double* y = last ? out : dst.data();
    dense_row_forward(params.data(w), params.data(b), cur, y, dims[l + 1], dims[l]);
    if (!last)
      for (int k = 0; k < dims[l + 1]; ++k) dst[k] = std::tanh(dst[k]);
    cur = dst.data();
  }
}

int mlp_graph(Graph& g, const std::string& prefix, const MlpSpec& spec, int x) {
  auto dims = spec.dims();
  int n_layers = static_cast<int>(dims.size()) - 1;
  int cur = x;
  for (int l = 0; l < n_layers; ++l) {
    cur = g.affine(cur, prefix + ".W" + std::to_string(l),
                   prefix + ".b" + std::to_string(l));
    if (l + 1 < n_layers) cur = g.tanh_(cur);
  }
  return cur;
}

/// Max-shift and the permutation-invariant (sorted) partition sum. Shared by
/// every categorical helper so the plain path matches Graph::log_softmax_rows
/// bit-for-bit: log p(a) is always computed as (logit_a - m) - log z.
void categorical_shift_z(std::span<const double> logits, double& m, double& z) {
  if (logits.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> terms(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) terms[i] = std::exp(logits[i] - m);
  std::sort(terms.begin(), terms.end());
  z = 0.0;
  for (double t : terms) z += t;
}

double log_sum_exp(std::span<const double> logits) {
  double m, z;
  categorical_shift_z(logits, m, z);
  return m + std::log(z);
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  double m, z;
  categorical_shift_z(logits, m, z);
  double logz = std::log(z);
  for (size_t i = 0; i < logits.size(); ++i) out[i] = (logits[i] - m) - logz;
}

double categorical_log_prob(std::span<const double> logits, int action) {
  if (action < 0 || action >= static_cast<int>(logits.size()))
    throw std::invalid_argument("categorical_log_prob: action out of range");
  double m, z;
  categorical_shift_z(logits, m, z);
  return (logits[action] - m) - std::log(z);
}

int categorical_sample(std::span<const double> logits, Rng& rng) {
  double lse = log_sum_exp(logits);
  double u = rng.uniform();
  double acc = 0.0;
  int k = static_cast<int>(logits.size());
  for (int a = 0; a < k; ++a) {
    acc += std::exp(logits[a] - lse);
    if (u < acc) return a;
  }
  return k - 1;  // numerical slack at the top end
}

int categorical_argmax(std::span<const double> logits) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(logits.size()); ++a)
    if (logits[a] > logits[best]) best = a;
  return best;
}

double categorical_entropy(std::span<const double> logits) {
  double lse = log_sum_exp(logits);
  double h = 0.0;
  for (double l : logits) {
    double lp = l - lse;
    h -= std::exp(lp) * lp;
  }
  return h;
}

double categorical_kl(std::span<const double> p_logits,
                      std::span<const double> q_logits) {
  if (p_logits.size() != q_logits.size())
    throw std::invalid_argument("categorical_kl: size mismatch");
  double lse_p = log_sum_exp(p_logits);
  double lse_q = log_sum_exp(q_logits);
  double kl = 0.0;
  for (size_t i = 0; i < p_logits.size(); ++i) {
    double lp = p_logits[i] - lse_p;
    double lq = q_logits[i] - lse_q;
    kl += std::exp(lp) * (lp - lq);
  }
  return kl;
}

double gaussian_log_prob(std::span<const double> mean,
                         std::span<const double> log_std,
                         std::span<const double> action) {
  size_t d = mean.size();
  if (log_std.size() != d || action.size() != d)
    throw std::invalid_argument("gaussian_log_prob: size mismatch");
  double lp = 0.0;
  for (size_t i = 0; i < d; ++i) {
    double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - 0.5 * std::log(2.0 * M_PI);
  }
  return lp;
}

void gaussian_sample(std::span<const double> mean,
                     std::span<const double> log_std, Rng& rng,
                     std::span<double> out) {
  for (size_t i = 0; i < mean.size(); ++i)
    out[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
}

double gaussian_kl(std::span<const double> m1, std::span<const double> ls1,
                   std::span<const double> m2, std::span<const double> ls2) {
  size_t d = m1.size();
  double kl = 0.0;
  for (size_t i = 0; i < d; ++i) {
    double var1 = std::exp(2.0 * ls1[i]);
    double var2 = std::exp(2.0 * ls2[i]);
    double dm = m1[i] - m2[i];
    kl += ls2[i] - ls1[i] + (var1 + dm * dm) / (2.0 * var2) - 0.5;
  }
  return kl;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * std::log(2.0 * M_PI * M_E);
  return h;
}

}  // namespace esp
