#pragma once

// Reverse-mode autodiff over a define-by-run tape. Forward values are
// computed eagerly when an op node is created; backward walks the tape in
// exact reverse creation order (creation order is a topological order by
// construction) and accumulates gradients into parent nodes.

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "graspdet/errors.hpp"
#include "graspdet/geometry.hpp"
#include "graspdet/tensor.hpp"

namespace graspdet {

struct Node {
  Tensor value;
  Tensor grad;
  std::vector<Node*> parents;
  std::function<void(Node&)> backward_fn;  // adds into parents' grads
  bool needs_grad = false;
};

class Graph {
 public:
  Node* leaf(Tensor v, bool needs_grad = false) {
    auto n = std::make_unique<Node>();
    n->value = std::move(v);
    n->needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
  }

  Node* make(Tensor v, std::vector<Node*> parents,
             std::function<void(Node&)> backward_fn) {
    auto n = std::make_unique<Node>();
    n->value = std::move(v);
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
    for (const Node* p : n->parents) {
      if (p->needs_grad) n->needs_grad = true;
    }
    nodes_.push_back(std::move(n));
    return nodes_.back().get();
  }

  // Seed d(out)/d(out) = 1 and propagate to every node that needs a gradient.
  void backward(Node* out) {
    if (out->value.size() != 1) {
      throw ShapeMismatch("backward expects a scalar output, got " +
                          out->value.shape_str());
    }
    for (auto& n : nodes_) {
      n->grad = Tensor(n->value.shape());
    }
    out->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node* n = it->get();
      if (n->backward_fn && n->needs_grad) n->backward_fn(*n);
    }
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

namespace detail {

// C[M x N] += A[M x K] * B[K x N]
inline void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[M x K] += A[M x N] * B^T where B is [K x N]
inline void matmul_abt_acc(const double* a, const double* b, double* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * n;
    double* ci = c + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* bp = b + static_cast<std::size_t>(p) * n;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += ai[j] * bp[j];
      ci[p] += s;
    }
  }
}

// C[K x N] += A^T * B where A is [M x K], B is [M x N]
inline void matmul_atb_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    const double* bi = b + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

// Unrolled patches of one sample: col[(c*kh+i)*kw+j][oy*out_w+ox]
inline void im2col(const Tensor& x, int n, int kh, int kw, int stride, int pad,
                   int out_h, int out_w, std::vector<double>& col) {
  const int channels = x.dim(1), h = x.dim(2), w = x.dim(3);
  col.assign(static_cast<std::size_t>(channels) * kh * kw * out_h * out_w, 0.0);
  const int cols = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        double* row = col.data() + (static_cast<std::size_t>(c) * kh * kw +
                                    static_cast<std::size_t>(ki) * kw + kj) * cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= w) continue;
            row[oy * out_w + ox] = x.at(n, c, iy, ix);
          }
        }
      }
    }
  }
}

inline void col2im_acc(const std::vector<double>& col, int n, int kh, int kw,
                       int stride, int pad, int out_h, int out_w, Tensor& dx) {
  const int channels = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
  const int cols = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const double* row = col.data() + (static_cast<std::size_t>(c) * kh * kw +
                                          static_cast<std::size_t>(ki) * kw + kj) * cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= w) continue;
            dx.at(n, c, iy, ix) += row[oy * out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

// Cross-correlation with zero padding; x [N,C,H,W], w [K,C,kh,kw], optional
// bias [K]. Output H' = floor((H + 2 pad - kh) / stride) + 1.
inline Node* conv2d(Graph& g, Node* x, Node* w, Node* bias, int stride, int pad) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(1)) {
    throw ShapeMismatch("conv2d: x " + xv.shape_str() + " w " + wv.shape_str());
  }
  const int n_batch = xv.dim(0), k_out = wv.dim(0);
  const int kh = wv.dim(2), kw = wv.dim(3);
  const int out_h = (xv.dim(2) + 2 * pad - kh) / stride + 1;
  const int out_w = (xv.dim(3) + 2 * pad - kw) / stride + 1;
  if (out_h <= 0 || out_w <= 0) throw ShapeMismatch("conv2d: empty output");
  if (bias && (bias->value.rank() != 1 || bias->value.dim(0) != k_out)) {
    throw ShapeMismatch("conv2d: bias " + bias->value.shape_str());
  }

  Tensor out({n_batch, k_out, out_h, out_w});
  const int q = xv.dim(1) * kh * kw;
  const int cols = out_h * out_w;
  std::vector<double> col;
  for (int n = 0; n < n_batch; ++n) {
    detail::im2col(xv, n, kh, kw, stride, pad, out_h, out_w, col);
    double* o = out.data() + static_cast<std::size_t>(n) * k_out * cols;
    detail::matmul_acc(wv.data(), col.data(), o, k_out, q, cols);
    if (bias) {
      for (int k = 0; k < k_out; ++k) {
        const double b = bias->value[k];
        for (int j = 0; j < cols; ++j) o[static_cast<std::size_t>(k) * cols + j] += b;
      }
    }
  }

  std::vector<Node*> parents{x, w};
  if (bias) parents.push_back(bias);
  return g.make(std::move(out), parents,
                [x, w, bias, stride, pad, out_h, out_w, q, cols](Node& self) {
    const Tensor& xv = x->value;
    const int n_batch = xv.dim(0), k_out = w->value.dim(0);
    const int kh = w->value.dim(2), kw = w->value.dim(3);
    std::vector<double> col, dcol;
    for (int n = 0; n < n_batch; ++n) {
      const double* dy = self.grad.data() + static_cast<std::size_t>(n) * k_out * cols;
      if (w->needs_grad) {
        detail::im2col(xv, n, kh, kw, stride, pad, out_h, out_w, col);
        detail::matmul_abt_acc(self.grad.data() + static_cast<std::size_t>(n) * k_out * cols,
                               col.data(), w->grad.data(), k_out, cols, q);
      }
      if (bias && bias->needs_grad) {
        for (int k = 0; k < k_out; ++k) {
          double s = 0.0;
          for (int j = 0; j < cols; ++j) s += dy[static_cast<std::size_t>(k) * cols + j];
          bias->grad[k] += s;
        }
      }
      if (x->needs_grad) {
        dcol.assign(static_cast<std::size_t>(q) * cols, 0.0);
        detail::matmul_atb_acc(w->value.data(), dy, dcol.data(), k_out, q, cols);
        detail::col2im_acc(dcol, n, kh, kw, stride, pad, out_h, out_w, x->grad);
      }
    }
  });
}

inline Node* relu(Graph& g, Node* x) {
  Tensor out(x->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
  }
  return g.make(std::move(out), {x}, [x](Node& self) {
    if (!x->needs_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (x->value[i] > 0.0) x->grad[i] += self.grad[i];
    }
  });
}

// 2x2 max pooling with stride 2 (floor semantics; trailing odd row/column is
// dropped). Gradient routes to the argmax cell only; ties keep the first in
// scan order.
inline Node* max_pool2x2(Graph& g, Node* x) {
  const Tensor& xv = x->value;
  if (xv.rank() != 4) throw ShapeMismatch("max_pool2x2: " + xv.shape_str());
  const int n_batch = xv.dim(0), channels = xv.dim(1);
  const int out_h = xv.dim(2) / 2, out_w = xv.dim(3) / 2;
  if (out_h == 0 || out_w == 0) throw ShapeMismatch("max_pool2x2: input too small");
  Tensor out({n_batch, channels, out_h, out_w});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  std::size_t oi = 0;
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox, ++oi) {
          double best = -1e300;
          std::size_t best_at = 0;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int iy = 2 * oy + dy, ix = 2 * ox + dx;
              const std::size_t flat =
                  ((static_cast<std::size_t>(n) * channels + c) * xv.dim(2) + iy) * xv.dim(3) + ix;
              if (xv[flat] > best) {
                best = xv[flat];
                best_at = flat;
              }
            }
          }
          out[oi] = best;
          (*argmax)[oi] = best_at;
        }
      }
    }
  }
  return g.make(std::move(out), {x}, [x, argmax](Node& self) {
    if (!x->needs_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      x->grad[(*argmax)[i]] += self.grad[i];
    }
  });
}

inline Node* global_avg_pool(Graph& g, Node* x) {
  const Tensor& xv = x->value;
  if (xv.rank() != 4) throw ShapeMismatch("global_avg_pool: " + xv.shape_str());
  const int n_batch = xv.dim(0), channels = xv.dim(1);
  const int hw = xv.dim(2) * xv.dim(3);
  Tensor out({n_batch, channels});
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      double s = 0.0;
      const double* base = xv.data() + (static_cast<std::size_t>(n) * channels + c) * hw;
      for (int i = 0; i < hw; ++i) s += base[i];
      out.at(n, c) = s / hw;
    }
  }
  return g.make(std::move(out), {x}, [x, hw](Node& self) {
    if (!x->needs_grad) return;
    const int channels = x->value.dim(1);
    for (int n = 0; n < x->value.dim(0); ++n) {
      for (int c = 0; c < channels; ++c) {
        const double gv = self.grad.at(n, c) / hw;
        double* base = x->grad.data() + (static_cast<std::size_t>(n) * channels + c) * hw;
        for (int i = 0; i < hw; ++i) base[i] += gv;
      }
    }
  });
}

// Fully connected: x [N,F] * w [F,M] + b [M].
inline Node* affine(Graph& g, Node* x, Node* w, Node* bias) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(0)) {
    throw ShapeMismatch("affine: x " + xv.shape_str() + " w " + wv.shape_str());
  }
  const int n = xv.dim(0), f = xv.dim(1), m = wv.dim(1);
  if (bias && (bias->value.rank() != 1 || bias->value.dim(0) != m)) {
    throw ShapeMismatch("affine: bias " + bias->value.shape_str());
  }
  Tensor out({n, m});
  detail::matmul_acc(xv.data(), wv.data(), out.data(), n, f, m);
  if (bias) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) out.at(i, j) += bias->value[j];
    }
  }
  std::vector<Node*> parents{x, w};
  if (bias) parents.push_back(bias);
  return g.make(std::move(out), parents, [x, w, bias, n, f, m](Node& self) {
    if (x->needs_grad) {
      detail::matmul_abt_acc(self.grad.data(), w->value.data(), x->grad.data(), n, m, f);
    }
    if (w->needs_grad) {
      detail::matmul_atb_acc(x->value.data(), self.grad.data(), w->grad.data(), n, f, m);
    }
    if (bias && bias->needs_grad) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) bias->grad[j] += self.grad.at(i, j);
      }
    }
  });
}

// Max ROI pooling from a [1,C,H,W] feature map into [R,C,grid,grid]. ROIs are
// given in image coordinates and mapped by spatial_scale. A bin that
// quantizes to zero cells takes the single nearest cell instead.
inline Node* roi_pool(Graph& g, Node* feat, const std::vector<AxisAlignedBox>& rois,
                      double spatial_scale, int grid) {
  const Tensor& fv = feat->value;
  if (fv.rank() != 4 || fv.dim(0) != 1) throw ShapeMismatch("roi_pool: " + fv.shape_str());
  const int channels = fv.dim(1), h = fv.dim(2), w = fv.dim(3);
  const int n_rois = static_cast<int>(rois.size());
  Tensor out({n_rois, channels, grid, grid});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  std::size_t oi = 0;
  for (int r = 0; r < n_rois; ++r) {
    const AxisAlignedBox& roi = rois[r];
    int x1 = std::clamp(static_cast<int>(std::floor(roi.x1() * spatial_scale)), 0, w - 1);
    int y1 = std::clamp(static_cast<int>(std::floor(roi.y1() * spatial_scale)), 0, h - 1);
    int x2 = std::clamp(static_cast<int>(std::ceil(roi.x2() * spatial_scale)), x1 + 1, w);
    int y2 = std::clamp(static_cast<int>(std::ceil(roi.y2() * spatial_scale)), y1 + 1, h);
    const int rw = x2 - x1, rh = y2 - y1;
    for (int c = 0; c < channels; ++c) {
      for (int by = 0; by < grid; ++by) {
        int ys = y1 + (by * rh) / grid;
        int ye = y1 + ((by + 1) * rh + grid - 1) / grid;
        if (ys >= ye) {  // degenerate bin: take the nearest single cell
          ys = std::min(y1 + (by * rh) / grid, y2 - 1);
          ye = ys + 1;
        }
        for (int bx = 0; bx < grid; ++bx, ++oi) {
          int xs = x1 + (bx * rw) / grid;
          int xe = x1 + ((bx + 1) * rw + grid - 1) / grid;
          if (xs >= xe) {
            xs = std::min(x1 + (bx * rw) / grid, x2 - 1);
            xe = xs + 1;
          }
          double best = -1e300;
          std::size_t best_at = 0;
          for (int iy = ys; iy < ye; ++iy) {
            for (int ix = xs; ix < xe; ++ix) {
              const std::size_t flat = (static_cast<std::size_t>(c) * h + iy) * w + ix;
              if (fv[flat] > best) {
                best = fv[flat];
                best_at = flat;
              }
            }
          }
          out[oi] = best;
          (*argmax)[oi] = best_at;
        }
      }
    }
  }
  return g.make(std::move(out), {feat}, [feat, argmax](Node& self) {
    if (!feat->needs_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      feat->grad[(*argmax)[i]] += self.grad[i];
    }
  });
}

// Mean cross entropy over rows of [N,C] logits, stabilized by row-max
// subtraction. Gradient per row is (softmax - onehot) / N.
inline Node* softmax_cross_entropy(Graph& g, Node* logits, const std::vector<int>& labels) {
  const Tensor& lv = logits->value;
  if (lv.rank() != 2 || lv.dim(0) != static_cast<int>(labels.size())) {
    throw ShapeMismatch("softmax_cross_entropy: logits " + lv.shape_str() + " labels " +
                        std::to_string(labels.size()));
  }
  const int n = lv.dim(0), c = lv.dim(1);
  for (const int l : labels) {
    if (l < 0 || l >= c) {
      throw LabelOutOfRange("label " + std::to_string(l) + " for " +
                            std::to_string(c) + " classes");
    }
  }
  auto softmax = std::make_shared<Tensor>(lv.shape());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = lv.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, lv.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(lv.at(i, j) - mx);
    for (int j = 0; j < c; ++j) softmax->at(i, j) = std::exp(lv.at(i, j) - mx) / z;
    loss += mx + std::log(z) - lv.at(i, labels[i]);
  }
  Tensor out({1});
  out[0] = loss / n;
  return g.make(std::move(out), {logits}, [logits, labels, softmax, n, c](Node& self) {
    if (!logits->needs_grad) return;
    const double gv = self.grad[0] / n;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c; ++j) {
        logits->grad.at(i, j) += gv * (softmax->at(i, j) - (labels[i] == j ? 1.0 : 0.0));
      }
    }
  });
}

// Mean absolute difference against a constant target; subgradient 0 at ties.
inline Node* l1_loss(Graph& g, Node* pred, const Tensor& target) {
  if (!pred->value.same_shape(target)) {
    throw ShapeMismatch("l1_loss: " + pred->value.shape_str() + " vs " + target.shape_str());
  }
  const std::size_t n = pred->value.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(pred->value[i] - target[i]);
  Tensor out({1});
  out[0] = s / static_cast<double>(n);
  return g.make(std::move(out), {pred}, [pred, target, n](Node& self) {
    if (!pred->needs_grad) return;
    const double gv = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pred->value[i] - target[i];
      if (d > 0.0) {
        pred->grad[i] += gv;
      } else if (d < 0.0) {
        pred->grad[i] -= gv;
      }
    }
  });
}

// Huber alternative to plain L1 (delta = 1), selectable by config.
inline Node* smooth_l1_loss(Graph& g, Node* pred, const Tensor& target) {
  if (!pred->value.same_shape(target)) {
    throw ShapeMismatch("smooth_l1_loss: " + pred->value.shape_str() + " vs " +
                        target.shape_str());
  }
  const std::size_t n = pred->value.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(pred->value[i] - target[i]);
    s += d < 1.0 ? 0.5 * d * d : d - 0.5;
  }
  Tensor out({1});
  out[0] = s / static_cast<double>(n);
  return g.make(std::move(out), {pred}, [pred, target, n](Node& self) {
    if (!pred->needs_grad) return;
    const double gv = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = pred->value[i] - target[i];
      pred->grad[i] += gv * (d > 1.0 ? 1.0 : d < -1.0 ? -1.0 : d);
    }
  });
}

inline Node* reshape(Graph& g, Node* x, std::vector<int> shape) {
  if (Tensor::numel(shape) != x->value.size()) {
    throw ShapeMismatch("reshape: " + x->value.shape_str() + " to incompatible shape");
  }
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->value[i];
  return g.make(std::move(out), {x}, [x](Node& self) {
    if (!x->needs_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
  });
}

inline Node* flatten_rows(Graph& g, Node* x) {
  const int n = x->value.dim(0);
  const int rest = static_cast<int>(x->value.size()) / n;
  return reshape(g, x, {n, rest});
}

// Select rows of a [N,C] tensor; backward scatters into the picked rows.
inline Node* gather_rows(Graph& g, Node* x, const std::vector<int>& rows) {
  const Tensor& xv = x->value;
  if (xv.rank() != 2) throw ShapeMismatch("gather_rows: " + xv.shape_str());
  const int c = xv.dim(1);
  for (const int r : rows) {
    if (r < 0 || r >= xv.dim(0)) throw IndexOutOfRange("gather_rows: row " + std::to_string(r));
  }
  Tensor out({static_cast<int>(rows.size()), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < c; ++j) out.at(static_cast<int>(i), j) = xv.at(rows[i], j);
  }
  return g.make(std::move(out), {x}, [x, rows, c](Node& self) {
    if (!x->needs_grad) return;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (int j = 0; j < c; ++j) {
        x->grad.at(rows[i], j) += self.grad.at(static_cast<int>(i), j);
      }
    }
  });
}

// From per-class regression rows [N, G*num_classes] pick each row's class
// slice of width G.
inline Node* gather_class_slices(Graph& g, Node* x, const std::vector<int>& classes,
                                 int group) {
  const Tensor& xv = x->value;
  if (xv.rank() != 2 || xv.dim(0) != static_cast<int>(classes.size()) ||
      xv.dim(1) % group != 0) {
    throw ShapeMismatch("gather_class_slices: " + xv.shape_str());
  }
  const int n_classes = xv.dim(1) / group;
  for (const int c : classes) {
    if (c < 0 || c >= n_classes) throw LabelOutOfRange("class slice " + std::to_string(c));
  }
  Tensor out({xv.dim(0), group});
  for (int i = 0; i < xv.dim(0); ++i) {
    for (int j = 0; j < group; ++j) out.at(i, j) = xv.at(i, classes[i] * group + j);
  }
  return g.make(std::move(out), {x}, [x, classes, group](Node& self) {
    if (!x->needs_grad) return;
    for (int i = 0; i < self.grad.dim(0); ++i) {
      for (int j = 0; j < group; ++j) {
        x->grad.at(i, classes[i] * group + j) += self.grad.at(i, j);
      }
    }
  });
}

// Reorder a [1, k*C, H, W] head output into per-anchor rows [(H*W*k), C]
// with anchor index ((y*W + x)*k + a), matching generate_anchors.
inline Node* anchor_rows(Graph& g, Node* x, int k, int c) {
  const Tensor& xv = x->value;
  if (xv.rank() != 4 || xv.dim(0) != 1 || xv.dim(1) != k * c) {
    throw ShapeMismatch("anchor_rows: " + xv.shape_str() + " for k=" +
                        std::to_string(k) + " c=" + std::to_string(c));
  }
  const int h = xv.dim(2), w = xv.dim(3);
  Tensor out({h * w * k, c});
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      for (int a = 0; a < k; ++a) {
        const int row = (y * w + xx) * k + a;
        for (int j = 0; j < c; ++j) out.at(row, j) = xv.at(0, a * c + j, y, xx);
      }
    }
  }
  return g.make(std::move(out), {x}, [x, k, c, h, w](Node& self) {
    if (!x->needs_grad) return;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        for (int a = 0; a < k; ++a) {
          const int row = (y * w + xx) * k + a;
          for (int j = 0; j < c; ++j) {
            x->grad.at(0, a * c + j, y, xx) += self.grad.at(row, j);
          }
        }
      }
    }
  });
}

inline Node* add(Graph& g, Node* a, Node* b) {
  if (!a->value.same_shape(b->value)) {
    throw ShapeMismatch("add: " + a->value.shape_str() + " vs " + b->value.shape_str());
  }
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  return g.make(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->needs_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (b->needs_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
    }
  });
}

// Elementwise product with a constant tensor (per-coordinate weights).
inline Node* mul_const(Graph& g, Node* x, const Tensor& weights) {
  if (!x->value.same_shape(weights)) {
    throw ShapeMismatch("mul_const: " + x->value.shape_str() + " vs " + weights.shape_str());
  }
  Tensor out(x->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->value[i] * weights[i];
  return g.make(std::move(out), {x}, [x, weights](Node& self) {
    if (!x->needs_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      x->grad[i] += weights[i] * self.grad[i];
    }
  });
}

inline Node* reduce_mean(Graph& g, Node* x) {
  const std::size_t n = x->value.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x->value[i];
  Tensor out({1});
  out[0] = s / static_cast<double>(n);
  return g.make(std::move(out), {x}, [x, n](Node& self) {
    if (!x->needs_grad) return;
    const double gv = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) x->grad[i] += gv;
  });
}

inline Node* scale(Graph& g, Node* x, double factor) {
  Tensor out(x->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x->value[i];
  return g.make(std::move(out), {x}, [x, factor](Node& self) {
    if (!x->needs_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += factor * self.grad[i];
  });
}

}  // namespace graspdet
