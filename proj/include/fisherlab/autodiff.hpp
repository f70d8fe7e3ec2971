// Copyright (c) 2026 The fisherlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "fisherlab/error.hpp"
#include "fisherlab/tensor.hpp"

namespace fisherlab::ad {

struct Var {
  std::size_t id = 0;
};

enum class Reduction { mean, sum };

/// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
/// node list backwards is a valid topological order for the adjoint sweep.
/// A tape is built for one evaluation and then discarded.
class Tape {
 public:
  Var constant(Tensor value) { return push(std::move(value), false, nullptr); }
  Var variable(Tensor value) { return push(std::move(value), true, nullptr); }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Adjoint of `v` after backward(); zeros if nothing flowed into it.
  Tensor grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.grad.empty() && !n.value.empty() ? Tensor(n.value.shape()) : n.grad;
  }

  void zero_grad() {
    for (auto& n : nodes_) n.grad = Tensor();
  }

  /// Seeds d(root)/d(root) = 1; root must hold a single value.
  void backward(Var root) {
    require(value(root).size() == 1, Errc::shape_mismatch, "backward() needs a scalar root");
    backward(root, Tensor(value(root).shape(), 1.0));
  }

  /// Vector-Jacobian product with an explicit seed for `root`.
  void backward(Var root, const Tensor& seed) {
    require(seed.shape() == value(root).shape(), Errc::shape_mismatch, "backward seed shape");
    grad_ref(root.id) = seed;
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || !n.back || n.grad.empty()) continue;
      n.back(*this, i);
    }
  }

  // ---------------------------------------------------------------- ops

  /// x[B,in] * w[out,in]^T + b[out]
  Var linear(Var x, Var w, Var b) {
    const Tensor& X = value(x);
    const Tensor& W = value(w);
    const Tensor& Bv = value(b);
    require(X.rank() == 2 && W.rank() == 2 && X.dim(1) == W.dim(1) && Bv.size() == W.dim(0),
            Errc::shape_mismatch,
            "linear: x" + shape_str(X.shape()) + " w" + shape_str(W.shape()) + " b" +
                shape_str(Bv.shape()));
    const std::size_t batch = X.dim(0), in = X.dim(1), out = W.dim(0);
    Tensor Y(Shape{batch, out});
    const double* xd = X.data().data();
    const double* wd = W.data().data();
    double* yd = Y.data().data();
    for (std::size_t i = 0; i < batch; ++i) {
      const double* xi = xd + i * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double* wo = wd + o * in;
        double s = Bv[o];
        for (std::size_t k = 0; k < in; ++k) s += xi[k] * wo[k];
        yd[i * out + o] = s;
      }
    }
    return push(std::move(Y), any_grad({x, w, b}), [x, w, b, batch, in, out](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      const double* gd = G.data().data();
      if (t.needs_grad(x)) {
        const double* wd = t.value(w).data().data();
        double* dx = t.grad_ref(x.id).data().data();
        for (std::size_t i = 0; i < batch; ++i)
          for (std::size_t o = 0; o < out; ++o) {
            const double g = gd[i * out + o];
            if (g == 0.0) continue;
            const double* wo = wd + o * in;
            double* dxi = dx + i * in;
            for (std::size_t k = 0; k < in; ++k) dxi[k] += g * wo[k];
          }
      }
      if (t.needs_grad(w)) {
        const double* xd = t.value(x).data().data();
        double* dw = t.grad_ref(w.id).data().data();
        for (std::size_t i = 0; i < batch; ++i)
          for (std::size_t o = 0; o < out; ++o) {
            const double g = gd[i * out + o];
            if (g == 0.0) continue;
            const double* xi = xd + i * in;
            double* dwo = dw + o * in;
            for (std::size_t k = 0; k < in; ++k) dwo[k] += g * xi[k];
          }
      }
      if (t.needs_grad(b)) {
        double* db = t.grad_ref(b.id).data().data();
        for (std::size_t i = 0; i < batch; ++i)
          for (std::size_t o = 0; o < out; ++o) db[o] += gd[i * out + o];
      }
    });
  }

  /// Stride-1 convolution with zero "same" padding: x[B,Cin,H,W], k[Cout,Cin,K,K]
  /// (K odd), b[Cout] -> [B,Cout,H,W].
  Var conv2d(Var x, Var k, Var b) {
    const Tensor& X = value(x);
    const Tensor& Kt = value(k);
    const Tensor& Bv = value(b);
    require(X.rank() == 4 && Kt.rank() == 4 && X.dim(1) == Kt.dim(1) && Kt.dim(2) == Kt.dim(3) &&
                Kt.dim(2) % 2 == 1 && Bv.size() == Kt.dim(0),
            Errc::shape_mismatch, "conv2d: x" + shape_str(X.shape()) + " k" + shape_str(Kt.shape()));
    const ConvDims d{X.dim(0), X.dim(1), Kt.dim(0), X.dim(2), X.dim(3), Kt.dim(2)};
    Tensor Y(Shape{d.batch, d.cout, d.h, d.w});
    const double* xd = X.data().data();
    const double* kd = Kt.data().data();
    double* yd = Y.data().data();
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(d.ks / 2);
    for (std::size_t n = 0; n < d.batch; ++n)
      for (std::size_t co = 0; co < d.cout; ++co) {
        double* yp = yd + ((n * d.cout + co) * d.h) * d.w;
        std::fill(yp, yp + d.h * d.w, Bv[co]);
        for (std::size_t ci = 0; ci < d.cin; ++ci) {
          const double* xp = xd + ((n * d.cin + ci) * d.h) * d.w;
          for (std::size_t ky = 0; ky < d.ks; ++ky)
            for (std::size_t kx = 0; kx < d.ks; ++kx) {
              const double wv = kd[((co * d.cin + ci) * d.ks + ky) * d.ks + kx];
              const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
              const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
              for (std::size_t oy = 0; oy < d.h; ++oy) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) + dy;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
                const auto [ox0, ox1] = conv_range(dx, d.w);
                const double* xr = xp + static_cast<std::size_t>(iy) * d.w;
                double* yr = yp + oy * d.w;
                for (std::size_t ox = ox0; ox < ox1; ++ox)
                  yr[ox] += wv * xr[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(ox) + dx)];
              }
            }
        }
      }
    return push(std::move(Y), any_grad({x, k, b}), [x, k, b, d, pad](Tape& t, std::size_t self) {
      const double* gd = t.nodes_[self].grad.data().data();
      const double* xd = t.value(x).data().data();
      const double* kd = t.value(k).data().data();
      double* dxd = t.needs_grad(x) ? t.grad_ref(x.id).data().data() : nullptr;
      double* dkd = t.needs_grad(k) ? t.grad_ref(k.id).data().data() : nullptr;
      double* dbd = t.needs_grad(b) ? t.grad_ref(b.id).data().data() : nullptr;
      for (std::size_t n = 0; n < d.batch; ++n)
        for (std::size_t co = 0; co < d.cout; ++co) {
          const double* gp = gd + ((n * d.cout + co) * d.h) * d.w;
          if (dbd)
            for (std::size_t i = 0; i < d.h * d.w; ++i) dbd[co] += gp[i];
          for (std::size_t ci = 0; ci < d.cin; ++ci) {
            const std::size_t plane = ((n * d.cin + ci) * d.h) * d.w;
            for (std::size_t ky = 0; ky < d.ks; ++ky)
              for (std::size_t kx = 0; kx < d.ks; ++kx) {
                const std::size_t kidx = ((co * d.cin + ci) * d.ks + ky) * d.ks + kx;
                const double wv = kd[kidx];
                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                double acc = 0.0;
                for (std::size_t oy = 0; oy < d.h; ++oy) {
                  const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) + dy;
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
                  const auto [ox0, ox1] = conv_range(dx, d.w);
                  const std::size_t row = plane + static_cast<std::size_t>(iy) * d.w;
                  const double* gr = gp + oy * d.w;
                  for (std::size_t ox = ox0; ox < ox1; ++ox) {
                    const std::size_t ix = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(ox) + dx);
                    acc += gr[ox] * xd[row + ix];
                    if (dxd) dxd[row + ix] += wv * gr[ox];
                  }
                }
                if (dkd) dkd[kidx] += acc;
              }
          }
        }
    });
  }

  /// 2x2 max pooling with stride 2 (odd trailing rows/columns dropped).
  Var max_pool2(Var x) {
    const Tensor& X = value(x);
    require(X.rank() == 4, Errc::shape_mismatch, "max_pool2 needs a rank-4 input");
    const std::size_t nb = X.dim(0) * X.dim(1), h = X.dim(2), w = X.dim(3);
    const std::size_t oh = h / 2, ow = w / 2;
    require(oh > 0 && ow > 0, Errc::shape_mismatch, "max_pool2 input too small");
    Tensor Y(Shape{X.dim(0), X.dim(1), oh, ow});
    std::vector<std::size_t> arg(Y.size());
    for (std::size_t p = 0; p < nb; ++p)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t best = (p * h + 2 * oy) * w + 2 * ox;
          for (std::size_t ky = 0; ky < 2; ++ky)
            for (std::size_t kx = 0; kx < 2; ++kx) {
              const std::size_t i = (p * h + 2 * oy + ky) * w + 2 * ox + kx;
              if (X[i] > X[best]) best = i;
            }
          const std::size_t o = (p * oh + oy) * ow + ox;
          Y[o] = X[best];
          arg[o] = best;
        }
    return push(std::move(Y), any_grad({x}), [x, arg = std::move(arg)](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      Tensor& dx = t.grad_ref(x.id);
      for (std::size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += G[o];
    });
  }

  Var relu(Var x) {
    Tensor Y = value(x);
    for (double& v : Y.data()) v = v > 0.0 ? v : 0.0;
    return push(std::move(Y), any_grad({x}), [x](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      const Tensor& X = t.value(x);
      Tensor& dx = t.grad_ref(x.id);
      for (std::size_t i = 0; i < X.size(); ++i)
        if (X[i] > 0.0) dx[i] += G[i];
    });
  }

  Var tanh(Var x) {
    Tensor Y = value(x);
    for (double& v : Y.data()) v = std::tanh(v);
    return push(std::move(Y), any_grad({x}), [x](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      const Tensor& Yv = t.nodes_[self].value;
      Tensor& dx = t.grad_ref(x.id);
      for (std::size_t i = 0; i < Yv.size(); ++i) dx[i] += G[i] * (1.0 - Yv[i] * Yv[i]);
    });
  }

  Var reshape(Var x, Shape shape) {
    Tensor Y = value(x).reshaped(std::move(shape));
    return push(std::move(Y), any_grad({x}), [x](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      Tensor& dx = t.grad_ref(x.id);
      for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i];
    });
  }

  Var add(Var a, Var b) { return binary(a, b, 1.0); }
  Var sub(Var a, Var b) { return binary(a, b, -1.0); }

  Var mul(Var a, Var b) {
    require(value(a).shape() == value(b).shape(), Errc::shape_mismatch, "mul operand shapes");
    Tensor Y = value(a);
    const Tensor& Bv = value(b);
    for (std::size_t i = 0; i < Y.size(); ++i) Y[i] *= Bv[i];
    return push(std::move(Y), any_grad({a, b}), [a, b](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      if (t.needs_grad(a)) {
        const Tensor& Bv = t.value(b);
        Tensor& da = t.grad_ref(a.id);
        for (std::size_t i = 0; i < G.size(); ++i) da[i] += G[i] * Bv[i];
      }
      if (t.needs_grad(b)) {
        const Tensor& Av = t.value(a);
        Tensor& db = t.grad_ref(b.id);
        for (std::size_t i = 0; i < G.size(); ++i) db[i] += G[i] * Av[i];
      }
    });
  }

  Var scale(Var x, double alpha) {
    Tensor Y = value(x);
    for (double& v : Y.data()) v *= alpha;
    return push(std::move(Y), any_grad({x}), [x, alpha](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      Tensor& dx = t.grad_ref(x.id);
      for (std::size_t i = 0; i < G.size(); ++i) dx[i] += alpha * G[i];
    });
  }

  Var square(Var x) { return mul(x, x); }

  /// Sum of all entries as a shape-(1) tensor.
  Var sum(Var x) {
    double s = 0.0;
    for (double v : value(x).data()) s += v;
    return push(Tensor(Shape{1}, s), any_grad({x}), [x](Tape& t, std::size_t self) {
      const double g = t.nodes_[self].grad[0];
      Tensor& dx = t.grad_ref(x.id);
      for (double& v : dx.data()) v += g;
    });
  }

  /// Cross-entropy between softmax(logits[B,C]) and target distributions
  /// targets[B,C] (one-hot rows for hard labels). Max-subtracted for stability.
  Var softmax_cross_entropy(Var logits, const Tensor& targets, Reduction reduction = Reduction::mean) {
    const Tensor& Z = value(logits);
    require(Z.rank() == 2 && targets.shape() == Z.shape(), Errc::shape_mismatch,
            "softmax_cross_entropy: logits" + shape_str(Z.shape()) + " targets" +
                shape_str(targets.shape()));
    const std::size_t batch = Z.dim(0), classes = Z.dim(1);
    Tensor probs(Z.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      auto z = Z.row(i);
      auto p = probs.row(i);
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0.0;
      for (std::size_t c = 0; c < classes; ++c) s += std::exp(z[c] - m);
      const double lse = m + std::log(s);
      for (std::size_t c = 0; c < classes; ++c) {
        p[c] = std::exp(z[c] - lse);
        const double tc = targets.at(i, c);
        if (tc != 0.0) total -= tc * (z[c] - lse);
      }
    }
    const double norm = reduction == Reduction::mean ? 1.0 / static_cast<double>(batch) : 1.0;
    return push(Tensor(Shape{1}, total * norm), any_grad({logits}),
                [logits, targets, probs = std::move(probs), norm, batch, classes](Tape& t, std::size_t self) {
                  const double g = t.nodes_[self].grad[0] * norm;
                  Tensor& dz = t.grad_ref(logits.id);
                  for (std::size_t i = 0; i < batch; ++i) {
                    double mass = 0.0;
                    for (std::size_t c = 0; c < classes; ++c) mass += targets.at(i, c);
                    for (std::size_t c = 0; c < classes; ++c)
                      dz.at(i, c) += g * (mass * probs.at(i, c) - targets.at(i, c));
                  }
                });
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::function<void(Tape&, std::size_t)> back;
  };

  struct ConvDims {
    std::size_t batch, cin, cout, h, w, ks;
  };

  /// Output columns [lo, hi) whose shifted input column lies inside [0, w).
  static std::pair<std::size_t, std::size_t> conv_range(std::ptrdiff_t dx, std::size_t w) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -dx);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w),
                                                       static_cast<std::ptrdiff_t>(w) - dx);
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi))};
  }

  Var push(Tensor value, bool needs_grad, std::function<void(Tape&, std::size_t)> back) {
    nodes_.push_back(Node{std::move(value), Tensor(), needs_grad, needs_grad ? std::move(back) : nullptr});
    return Var{nodes_.size() - 1};
  }

  bool any_grad(std::initializer_list<Var> vars) const {
    for (Var v : vars)
      if (nodes_.at(v.id).needs_grad) return true;
    return false;
  }

  Tensor& grad_ref(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  Var binary(Var a, Var b, double sign) {
    require(value(a).shape() == value(b).shape(), Errc::shape_mismatch, "add/sub operand shapes");
    Tensor Y = value(a);
    const Tensor& Bv = value(b);
    for (std::size_t i = 0; i < Y.size(); ++i) Y[i] += sign * Bv[i];
    return push(std::move(Y), any_grad({a, b}), [a, b, sign](Tape& t, std::size_t self) {
      const Tensor& G = t.nodes_[self].grad;
      if (t.needs_grad(a)) {
        Tensor& da = t.grad_ref(a.id);
        for (std::size_t i = 0; i < G.size(); ++i) da[i] += G[i];
      }
      if (t.needs_grad(b)) {
        Tensor& db = t.grad_ref(b.id);
        for (std::size_t i = 0; i < G.size(); ++i) db[i] += sign * G[i];
      }
    });
  }

  std::vector<Node> nodes_;
};

}  // namespace fisherlab::ad
