#pragma once

// Finite-difference verification harness. Each kernel is wrapped as a scalar
// function of its leaf tensors; central differences per coordinate are
// compared with the analytic backward pass. Relative error uses a 1e-6 floor
// so exactly-zero gradients compare cleanly.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "graspdet/encoding.hpp"
#include "graspdet/graph.hpp"
#include "graspdet/rng.hpp"

namespace graspdet {

using ScalarBuilder = std::function<Node*(Graph&, const std::vector<Node*>&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_coord = 0;
};

inline GradCheckReport gradient_check(const ScalarBuilder& build,
                                      const std::vector<Tensor>& inputs,
                                      double eps = 1e-5) {
  // analytic gradients
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Node*> leaves;
    leaves.reserve(inputs.size());
    for (const Tensor& t : inputs) leaves.push_back(g.leaf(t, true));
    Node* out = build(g, leaves);
    g.backward(out);
    for (const Node* l : leaves) analytic.push_back(l->grad);
  }

  auto eval = [&](const std::vector<Tensor>& xs) {
    Graph g;
    std::vector<Node*> leaves;
    for (const Tensor& t : xs) leaves.push_back(g.leaf(t, false));
    return build(g, leaves)->value[0];
  };

  GradCheckReport report;
  std::vector<Tensor> work = inputs;
  for (std::size_t t = 0; t < work.size(); ++t) {
    for (std::size_t i = 0; i < work[t].size(); ++i) {
      const double saved = work[t][i];
      work[t][i] = saved + eps;
      const double fp = eval(work);
      work[t][i] = saved - eps;
      const double fm = eval(work);
      work[t][i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[t][i];
      const double err = std::abs(a - numeric) /
                         std::max(std::abs(a) + std::abs(numeric), 1e-6);
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_input = t;
        report.worst_coord = i;
      }
    }
  }
  return report;
}

// Standard per-kernel checks on seeded random instances; shared between the
// test suites and the gradcheck CLI subcommand.
inline std::vector<std::pair<std::string, double>> kernel_gradcheck_suite(
    std::uint64_t seed = 20) {
  Rng rng(seed);
  auto rand_tensor = [&](std::vector<int> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
  };
  // margins keep relu/maxpool inputs away from kinks and ties
  auto rand_spread = [&](std::vector<int> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) {
      double v = rng.normal();
      if (std::abs(v) < 0.2) v = v < 0 ? v - 0.2 : v + 0.2;
      t[i] = v + 1e-3 * static_cast<double>(i % 97);  // break exact ties
    }
    return t;
  };
  auto sum_all = [](Graph& g, Node* x) {
    // reduce to scalar through distinct per-coordinate weights so that index
    // permutation bugs change the result
    Tensor weights(x->value.shape());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      weights[i] = 1.5 + std::sin(0.7 * static_cast<double>(i));
    }
    return reduce_mean(g, mul_const(g, x, weights));
  };

  std::vector<std::pair<std::string, double>> results;
  auto run = [&](const std::string& name, const ScalarBuilder& build,
                 std::vector<Tensor> inputs) {
    results.emplace_back(name, gradient_check(build, inputs).max_rel_error);
  };

  run("conv2d",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, conv2d(g, in[0], in[1], in[2], 1, 1));
      },
      {rand_tensor({1, 2, 5, 5}), rand_tensor({3, 2, 3, 3}), rand_tensor({3})});
  run("conv2d_stride2",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, conv2d(g, in[0], in[1], nullptr, 2, 1));
      },
      {rand_tensor({1, 2, 6, 6}), rand_tensor({2, 2, 3, 3})});
  run("relu",
      [&](Graph& g, const std::vector<Node*>& in) { return sum_all(g, relu(g, in[0])); },
      {rand_spread({2, 3, 4, 4})});
  run("max_pool2x2",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, max_pool2x2(g, in[0]));
      },
      {rand_spread({1, 2, 6, 6})});
  run("global_avg_pool",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, global_avg_pool(g, in[0]));
      },
      {rand_tensor({2, 3, 4, 4})});
  run("affine",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, affine(g, in[0], in[1], in[2]));
      },
      {rand_tensor({3, 5}), rand_tensor({5, 4}), rand_tensor({4})});
  run("roi_pool",
      [&](Graph& g, const std::vector<Node*>& in) {
        const std::vector<AxisAlignedBox> rois{{24, 24, 40, 32}, {40, 44, 28, 20}};
        return sum_all(g, roi_pool(g, in[0], rois, 1.0 / 8.0, 2));
      },
      {rand_spread({1, 3, 8, 8})});
  run("softmax_cross_entropy",
      [&](Graph& g, const std::vector<Node*>& in) {
        return softmax_cross_entropy(g, in[0], {1, 0, 3});
      },
      {rand_tensor({3, 4})});
  run("l1_loss",
      [&](Graph& g, const std::vector<Node*>& in) {
        Tensor target({3, 4});
        for (std::size_t i = 0; i < target.size(); ++i) target[i] = 3.0 + 0.1 * i;
        return l1_loss(g, in[0], target);  // inputs are far from the kinks
      },
      {rand_tensor({3, 4})});
  run("smooth_l1_loss",
      [&](Graph& g, const std::vector<Node*>& in) {
        Tensor target({3, 4});
        for (std::size_t i = 0; i < target.size(); ++i) target[i] = 3.0 + 0.1 * i;
        return smooth_l1_loss(g, in[0], target);
      },
      {rand_tensor({3, 4})});
  run("gather_rows",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, gather_rows(g, in[0], {3, 0, 2}));
      },
      {rand_tensor({5, 4})});
  run("gather_class_slices",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, gather_class_slices(g, in[0], {2, 0, 1}, 4));
      },
      {rand_tensor({3, 12})});
  run("anchor_rows",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, anchor_rows(g, in[0], 3, 2));
      },
      {rand_tensor({1, 6, 3, 3})});
  run("add_scale",
      [&](Graph& g, const std::vector<Node*>& in) {
        return sum_all(g, add(g, scale(g, in[0], 1.7), in[1]));
      },
      {rand_tensor({3, 3}), rand_tensor({3, 3})});
  return results;
}

}  // namespace graspdet
