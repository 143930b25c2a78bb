#include "esp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace esp {

double gradient_check(ParameterVector& params,
                      const std::function<int(Graph&)>& build, double h) {
  std::vector<double> ad(params.size(), 0.0);
  {
    Graph g(params, ad);
    int loss = build(g);
    g.backward(loss);
  }
  double ginf = 0.0;
  for (double v : ad) ginf = std::max(ginf, std::fabs(v));

  auto eval = [&]() {
    std::vector<double> unused(params.size(), 0.0);
    Graph g(params, unused);
    return g.scalar(build(g));
  };

  double worst = 0.0;
  for (int i = 0; i < params.size(); ++i) {
    double orig = params.values[i];
    params.values[i] = orig + h;
    double fp = eval();
    params.values[i] = orig - h;
    double fm = eval();
    params.values[i] = orig;
    double fd = (fp - fm) / (2.0 * h);
    double denom = std::max({std::fabs(ad[i]), std::fabs(fd), 0.01 * ginf, 1e-8});
    worst = std::max(worst, std::fabs(ad[i] - fd) / denom);
  }
  return worst;
}

}  // namespace esp
