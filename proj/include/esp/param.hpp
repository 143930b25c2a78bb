#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "esp/rng.hpp"

namespace esp {

/// Thrown when an update would leave parameters or gradients non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamSlice {
  std::string name;
  int offset = 0;
  int rows = 0;
  int cols = 0;
  int size() const { return rows * cols; }
};

/// Flat parameter vector with a named-slice registry. Matrices are row-major.
class ParameterVector {
 public:
  int add(const std::string& name, int rows, int cols) {
    if (index_.count(name))
      throw std::invalid_argument("duplicate parameter slice: " + name);
    ParamSlice s{name, static_cast<int>(values.size()), rows, cols};
    slices_.push_back(s);
    index_[name] = static_cast<int>(slices_.size()) - 1;
    values.resize(values.size() + static_cast<size_t>(rows) * cols, 0.0);
    return static_cast<int>(slices_.size()) - 1;
  }

  const ParamSlice& slice(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::invalid_argument("unknown parameter slice: " + name);
    return slices_[it->second];
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  double* data(const ParamSlice& s) { return values.data() + s.offset; }
  const double* data(const ParamSlice& s) const { return values.data() + s.offset; }
  std::span<double> span(const std::string& name) {
    const ParamSlice& s = slice(name);
    return {values.data() + s.offset, static_cast<size_t>(s.size())};
  }
  std::span<const double> span(const std::string& name) const {
    const ParamSlice& s = slice(name);
    return {values.data() + s.offset, static_cast<size_t>(s.size())};
  }

  const std::vector<ParamSlice>& slices() const { return slices_; }
  int size() const { return static_cast<int>(values.size()); }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::vector<double> values;

 private:
  std::vector<ParamSlice> slices_;
  std::unordered_map<std::string, int> index_;
};

/// Fills the slice with an orthogonal(-ish) matrix scaled by `gain`:
/// rows of a random Gaussian matrix are Gram-Schmidt orthonormalized
/// (columns when rows > cols).
void orthogonal_init(ParameterVector& params, const std::string& name,
                     double gain, Rng& rng);

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t t = 0;

  explicit AdamState(int n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One adaptive-moment step with bias correction. Global gradient-norm
/// clipping (if enabled) is applied before the moment update. Throws
/// NumericalError on non-finite gradients or parameters; parameters are
/// left untouched in that case.
void adam_step(ParameterVector& params, const std::vector<double>& grad,
               AdamState& state, const AdamConfig& cfg);

}  // namespace esp
