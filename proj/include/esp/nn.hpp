#pragma once

#include <span>
#include <string>
#include <vector>

#include "esp/graph.hpp"
#include "esp/param.hpp"
#include "esp/rng.hpp"

namespace esp {

/// Dense net: input -> hidden layers (tanh) -> linear output.
struct MlpSpec {
  int in = 0;
  std::vector<int> hidden;
  int out = 0;

  int n_layers() const { return static_cast<int>(hidden.size()) + 1; }
  std::vector<int> dims() const;  // {in, hidden..., out}
};

/// Registers W{l}/b{l} slices under `prefix` and initializes them
/// (orthogonal-style, hidden gain sqrt(2), output gain `out_gain`).
void register_mlp(ParameterVector& params, const std::string& prefix,
                  const MlpSpec& spec, double out_gain, Rng& rng);

/// Plain (no-grad) forward pass for a single input row. Accumulation order
/// matches Graph::affine exactly, so plain and graph evaluations of the same
/// parameters agree bit-for-bit.
struct MlpScratch {
  std::vector<double> a, b;
};
void mlp_apply(const ParameterVector& params, const std::string& prefix,
               const MlpSpec& spec, const double* in, double* out,
               MlpScratch& scratch);

/// Graph forward over a batch matrix node.
int mlp_graph(Graph& g, const std::string& prefix, const MlpSpec& spec, int x);

// ---- categorical distribution over logits ----

/// logsumexp with max-shift; the summation is performed in sorted order so
/// the result is invariant under permutations of the logits.
double log_sum_exp(std::span<const double> logits);
/// Max-shift m and partition sum z with the same sorted summation:
/// log p(a) = (logits[a] - m) - log(z). Exposed for probability-ratio
/// computations that must avoid the log-space rounding floor.
void categorical_shift_z(std::span<const double> logits, double& m, double& z);
void log_softmax(std::span<const double> logits, std::span<double> out);
double categorical_log_prob(std::span<const double> logits, int action);
int categorical_sample(std::span<const double> logits, Rng& rng);
int categorical_argmax(std::span<const double> logits);
double categorical_entropy(std::span<const double> logits);
/// KL(p || q) over the same support.
double categorical_kl(std::span<const double> p_logits,
                      std::span<const double> q_logits);

// ---- diagonal Gaussian ----

double gaussian_log_prob(std::span<const double> mean,
                         std::span<const double> log_std,
                         std::span<const double> action);
void gaussian_sample(std::span<const double> mean,
                     std::span<const double> log_std, Rng& rng,
                     std::span<double> out);
/// Closed-form KL(N(m1, s1) || N(m2, s2)) for diagonal covariances.
double gaussian_kl(std::span<const double> m1, std::span<const double> ls1,
                   std::span<const double> m2, std::span<const double> ls2);
double gaussian_entropy(std::span<const double> log_std);

}  // namespace esp
