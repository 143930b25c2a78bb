#include "esp/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace esp {

Policy::Policy(int obs_dim, std::vector<int> hidden, const ActionLayout& layout,
               uint64_t init_seed) {
  discrete_ = layout.discrete;
  spec_.in = obs_dim;
  spec_.hidden = std::move(hidden);
  spec_.out = discrete_ ? layout.n_actions : 2;
  Rng rng = Rng::stream(init_seed, 0x9001);
  register_mlp(params, "pi", spec_, 0.01, rng);
  if (!discrete_) params.add("pi.log_std", 1, 2);  // zeros: sigma = 1
}

void Policy::head(std::span<const double> obs, std::span<double> out) const {
  if (static_cast<int>(obs.size()) != spec_.in)
    throw std::invalid_argument("Policy::head: observation length mismatch");
  mlp_apply(params, "pi", spec_, obs.data(), out.data(), scratch_);
}

std::vector<double> Policy::log_std_clamped() const {
  auto ls = params.span("pi.log_std");
  std::vector<double> out(ls.begin(), ls.end());
  for (double& v : out) v = std::min(kLogStdMax, std::max(kLogStdMin, v));
  return out;
}

Action Policy::sample(std::span<const double> obs, Rng& rng,
                      double* log_prob_out) const {
  std::vector<double> h(spec_.out);
  head(obs, h);
  if (discrete_) {
    int a = categorical_sample(h, rng);
    if (log_prob_out) *log_prob_out = categorical_log_prob(h, a);
    return Action{a};
  }
  std::vector<double> ls = log_std_clamped();
  std::vector<double> a(2);
  gaussian_sample(h, ls, rng, a);
  if (log_prob_out) *log_prob_out = gaussian_log_prob(h, ls, a);
  return Action{Vec2{a[0], a[1]}};
}

double Policy::log_prob(std::span<const double> obs, const Action& a) const {
  std::vector<double> h(spec_.out);
  head(obs, h);
  if (discrete_) return categorical_log_prob(h, std::get<int>(a));
  std::vector<double> ls = log_std_clamped();
  Vec2 v = std::get<Vec2>(a);
  std::vector<double> av = {v.x, v.y};
  return gaussian_log_prob(h, ls, av);
}

Action Policy::greedy(std::span<const double> obs) const {
  std::vector<double> h(spec_.out);
  head(obs, h);
  if (discrete_) return Action{categorical_argmax(h)};
  return Action{Vec2{h[0], h[1]}};
}

int Policy::build_head(Graph& g, int obs_node) const {
  return mlp_graph(g, "pi", spec_, obs_node);
}

int Policy::build_log_std(Graph& g, int rows) const {
  int ls = g.param("pi.log_std");
  int cl = g.clamp_(ls, kLogStdMin, kLogStdMax);
  return g.broadcast_rows(cl, rows);
}

Critic::Critic(int global_dim, std::vector<int> hidden, uint64_t init_seed) {
  spec_.in = global_dim;
  spec_.hidden = std::move(hidden);
  spec_.out = 1;
  Rng rng = Rng::stream(init_seed, 0x9002);
  register_mlp(params, "v", spec_, 1.0, rng);
}

double Critic::value(std::span<const double> global) const {
  if (static_cast<int>(global.size()) != spec_.in)
    throw std::invalid_argument("Critic::value: state length mismatch");
  double out = 0.0;
  mlp_apply(params, "v", spec_, global.data(), &out, scratch_);
  return out;
}

int Critic::build_values(Graph& g, int global_node) const {
  return mlp_graph(g, "v", spec_, global_node);
}

}  // namespace esp
