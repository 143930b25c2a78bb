#pragma once

#include <string>
#include <vector>

#include "esp/layouts.hpp"
#include "esp/nn.hpp"

namespace esp {

/// Shared actor head: one parameter vector serves every agent. Discrete
/// policies emit logits; continuous policies emit a 2D mean plus a global
/// state-independent log-std (clamped to [-5, 2]).
class Policy {
 public:
  Policy() = default;
  Policy(int obs_dim, std::vector<int> hidden, const ActionLayout& layout,
         uint64_t init_seed);

  bool discrete() const { return discrete_; }
  int obs_dim() const { return spec_.in; }
  int n_actions() const { return spec_.out; }
  const MlpSpec& body() const { return spec_; }

  // ---- plain (no-grad) evaluation; bit-compatible with the graph path ----
  void head(std::span<const double> obs, std::span<double> out) const;
  Action sample(std::span<const double> obs, Rng& rng,
                double* log_prob = nullptr) const;
  double log_prob(std::span<const double> obs, const Action& a) const;
  Action greedy(std::span<const double> obs) const;
  std::vector<double> log_std_clamped() const;

  // ---- graph builders (batch) ----
  /// Discrete: logits node [rows x n_actions]; continuous: mean node [rows x 2].
  int build_head(Graph& g, int obs_node) const;
  /// Continuous only: clamped log-std broadcast to [rows x 2].
  int build_log_std(Graph& g, int rows) const;

  ParameterVector params;

  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

 private:
  MlpSpec spec_;
  bool discrete_ = true;
  mutable MlpScratch scratch_;
};

/// Centralized critic over the global state.
class Critic {
 public:
  Critic() = default;
  Critic(int global_dim, std::vector<int> hidden, uint64_t init_seed);

  int input_dim() const { return spec_.in; }
  const MlpSpec& body() const { return spec_; }

  double value(std::span<const double> global) const;
  /// Node [rows x 1] of state values.
  int build_values(Graph& g, int global_node) const;

  ParameterVector params;

 private:
  MlpSpec spec_;
  mutable MlpScratch scratch_;
};

}  // namespace esp
