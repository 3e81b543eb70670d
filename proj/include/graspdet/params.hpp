#pragma once

#include <string>
#include <vector>

#include "graspdet/errors.hpp"
#include "graspdet/rng.hpp"
#include "graspdet/tensor.hpp"

namespace graspdet {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named trainable tensors in a stable order; gradients are accumulated here
// by the training loop after each backward pass.
class ParamStore {
 public:
  Param& add(const std::string& name, std::vector<int> shape) {
    params_.push_back({name, Tensor(shape), Tensor(shape)});
    return params_.back();
  }

  Param* find(const std::string& name) {
    for (Param& p : params_) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }

  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }

  void zero_grads() {
    for (Param& p : params_) p.grad.fill(0.0);
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const Param& p : params_) n += p.value.size();
    return n;
  }

 private:
  std::vector<Param> params_;
};

// Plain gradient step p <- p - lr * g.
inline void sgd_step(ParamStore& store, double lr) {
  for (Param& p : store.all()) {
    if (!p.grad.same_shape(p.value)) {
      throw ShapeMismatch("gradient shape differs for " + p.name);
    }
    double* v = p.value.data();
    const double* g = p.grad.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) v[i] -= lr * g[i];
  }
}

// Step decay: divide by 1/factor every decay_every iterations.
inline double lr_at(double base_lr, long long iteration, long long decay_every,
                    double factor) {
  if (decay_every <= 0) return base_lr;
  double lr = base_lr;
  for (long long k = 0; k < iteration / decay_every; ++k) lr *= factor;
  return lr;
}

inline void fill_normal(Tensor& t, Rng& rng, double stddev) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.normal();
}

}  // namespace graspdet
