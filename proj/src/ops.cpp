#include "dcs/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcs/flops.hpp"

namespace dcs {

namespace {
thread_local bool g_flops_enabled = false;
thread_local uint64_t g_flops_count = 0;
}  // namespace

void flops_enable(bool on) { g_flops_enabled = on; }
bool flops_enabled() { return g_flops_enabled; }
void flops_add(int64_t n) {
  if (g_flops_enabled) g_flops_count += static_cast<uint64_t>(n);
}
uint64_t flops_count() { return g_flops_count; }
void flops_reset() { g_flops_count = 0; }

namespace {

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<std::shared_ptr<TensorNode>> parents) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value.assign(shape_numel(n->shape), 0.0);
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->needs_grad;
  n->needs_grad = needs;
  if (needs) n->parents = std::move(parents);
  return n;
}

Tensor wrap(std::shared_ptr<TensorNode> n) {
  Tensor t;
  t.node() = std::move(n);
  return t;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_rank(const Tensor& t, int64_t r, const char* what) {
  require(t.rank() == r, std::string(what) + ": expected rank " + std::to_string(r) + " tensor, got " +
                             shape_str(t.shape()));
}

// Leading dims collapsed, trailing two treated as spatial.
void spatial_dims(const Tensor& t, int64_t& lead, int64_t& h, int64_t& w) {
  require(t.rank() >= 2, "expected at least 2 spatial dims, got " + shape_str(t.shape()));
  h = t.dim(t.rank() - 2);
  w = t.dim(t.rank() - 1);
  lead = t.numel() / (h * w);
}

double catmull_rom(double t) {
  t = std::fabs(t);
  if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, int64_t padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  require_rank(bias, 1, "conv2d bias");
  const int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t Cout = kernel.dim(0), k = kernel.dim(2);
  require(kernel.dim(1) == Cin, "conv2d: input channels of kernel " + shape_str(kernel.shape()) +
                                     " do not match input " + shape_str(input.shape()));
  require(kernel.dim(3) == k && (k % 2) == 1, "conv2d: kernel must be square with odd size, got " +
                                                   shape_str(kernel.shape()));
  require(bias.dim(0) == Cout, "conv2d: bias " + shape_str(bias.shape()) + " does not match kernel " +
                                   shape_str(kernel.shape()));
  require(padding >= 0, "conv2d: negative padding");
  const int64_t Ho = H + 2 * padding - k + 1, Wo = W + 2 * padding - k + 1;
  require(Ho >= 1 && Wo >= 1, "conv2d: kernel larger than padded input");

  auto out = make_node({N, Cout, Ho, Wo}, {input.node(), kernel.node(), bias.node()});
  flops_add(kFlopsPerMac * k * k * Cin * Cout * N * Ho * Wo);
  const double* in = input.data();
  const double* kw = kernel.data();
  const double* bv = bias.data();
  double* ov = out->value.data();

  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Cout; ++co)
      for (int64_t oy = 0; oy < Ho; ++oy)
        for (int64_t ox = 0; ox < Wo; ++ox) {
          double acc = bv[co];
          for (int64_t ci = 0; ci < Cin; ++ci) {
            const double* in_c = in + ((n * Cin + ci) * H) * W;
            const double* kw_c = kw + ((co * Cin + ci) * k) * k;
            for (int64_t ky = 0; ky < k; ++ky) {
              const int64_t iy = oy + ky - padding;
              if (iy < 0 || iy >= H) continue;
              const double* row = in_c + iy * W;
              const double* krow = kw_c + ky * k;
              for (int64_t kx = 0; kx < k; ++kx) {
                const int64_t ix = ox + kx - padding;
                if (ix < 0 || ix >= W) continue;
                acc += row[ix] * krow[kx];
              }
            }
          }
          ov[((n * Cout + co) * Ho + oy) * Wo + ox] = acc;
        }

  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* in_n = input.node().get();
    TensorNode* k_n = kernel.node().get();
    TensorNode* b_n = bias.node().get();
    out->backward = [o, in_n, k_n, b_n, N, Cin, Cout, H, W, Ho, Wo, k, padding]() {
      const double* g = o->grad.data();
      const double* in = in_n->value.data();
      const double* kw = k_n->value.data();
      const bool want_in = in_n->needs_grad, want_k = k_n->needs_grad, want_b = b_n->needs_grad;
      if (want_in) in_n->ensure_grad();
      if (want_k) k_n->ensure_grad();
      if (want_b) b_n->ensure_grad();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Cout; ++co)
          for (int64_t oy = 0; oy < Ho; ++oy)
            for (int64_t ox = 0; ox < Wo; ++ox) {
              const double go = g[((n * Cout + co) * Ho + oy) * Wo + ox];
              if (go == 0.0) continue;
              if (want_b) b_n->grad[co] += go;
              for (int64_t ci = 0; ci < Cin; ++ci) {
                const int64_t in_base = ((n * Cin + ci) * H) * W;
                const int64_t kw_base = ((co * Cin + ci) * k) * k;
                for (int64_t ky = 0; ky < k; ++ky) {
                  const int64_t iy = oy + ky - padding;
                  if (iy < 0 || iy >= H) continue;
                  for (int64_t kx = 0; kx < k; ++kx) {
                    const int64_t ix = ox + kx - padding;
                    if (ix < 0 || ix >= W) continue;
                    if (want_in) in_n->grad[in_base + iy * W + ix] += go * kw[kw_base + ky * k + kx];
                    if (want_k) k_n->grad[kw_base + ky * k + kx] += go * in[in_base + iy * W + ix];
                  }
                }
              }
            }
    };
  }
  return wrap(out);
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "dense input");
  require_rank(weight, 2, "dense weight");
  require_rank(bias, 1, "dense bias");
  const int64_t N = input.dim(0), Din = input.dim(1), Dout = weight.dim(0);
  require(weight.dim(1) == Din, "dense: weight " + shape_str(weight.shape()) + " does not match input " +
                                    shape_str(input.shape()));
  require(bias.dim(0) == Dout, "dense: bias " + shape_str(bias.shape()) + " does not match weight " +
                                   shape_str(weight.shape()));

  auto out = make_node({N, Dout}, {input.node(), weight.node(), bias.node()});
  flops_add(kFlopsPerMac * N * Din * Dout);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t j = 0; j < Dout; ++j) {
      double acc = bias.data()[j];
      for (int64_t i = 0; i < Din; ++i) acc += input.data()[n * Din + i] * weight.data()[j * Din + i];
      out->value[n * Dout + j] = acc;
    }

  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* in_n = input.node().get();
    TensorNode* w_n = weight.node().get();
    TensorNode* b_n = bias.node().get();
    out->backward = [o, in_n, w_n, b_n, N, Din, Dout]() {
      if (in_n->needs_grad) in_n->ensure_grad();
      if (w_n->needs_grad) w_n->ensure_grad();
      if (b_n->needs_grad) b_n->ensure_grad();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t j = 0; j < Dout; ++j) {
          const double go = o->grad[n * Dout + j];
          if (go == 0.0) continue;
          if (b_n->needs_grad) b_n->grad[j] += go;
          for (int64_t i = 0; i < Din; ++i) {
            if (in_n->needs_grad) in_n->grad[n * Din + i] += go * w_n->value[j * Din + i];
            if (w_n->needs_grad) w_n->grad[j * Din + i] += go * in_n->value[n * Din + i];
          }
        }
    };
  }
  return wrap(out);
}

namespace {

template <typename Fwd, typename Dfn>
Tensor elementwise(const Tensor& x, Fwd f, Dfn df, int64_t flops_per_elem = 0) {
  auto out = make_node(x.shape(), {x.node()});
  flops_add(flops_per_elem * out->numel());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = f(x.data()[i]);
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, df]() {
      xn->ensure_grad();
      for (size_t i = 0; i < o->grad.size(); ++i) xn->grad[i] += o->grad[i] * df(xn->value[i]);
    };
  }
  return wrap(out);
}

}  // namespace

Tensor relu(const Tensor& x) {
  return elementwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; },
      kFlopsActivationPerElem);
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return elementwise(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v) { return v > 0.0 ? 1.0 : slope; }, kFlopsActivationPerElem);
}

Tensor sigmoid(const Tensor& x) {
  return elementwise(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double v) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 - s);
      },
      kFlopsSigmoidPerElem);
}

Tensor abs_elem(const Tensor& x) {
  return elementwise(
      x, [](double v) { return std::fabs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor avg_pool2(const Tensor& x) {
  require_rank(x, 4, "avg_pool2");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % 2 == 0 && W % 2 == 0, "avg_pool2: spatial dims must be even, got " + shape_str(x.shape()));
  const int64_t Ho = H / 2, Wo = W / 2;
  auto out = make_node({N, C, Ho, Wo}, {x.node()});
  flops_add(kFlopsAvgPoolPerOutput * out->numel());
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* in = x.data() + nc * H * W;
    double* ov = out->value.data() + nc * Ho * Wo;
    for (int64_t y = 0; y < Ho; ++y)
      for (int64_t xx = 0; xx < Wo; ++xx) {
        const double* p = in + (2 * y) * W + 2 * xx;
        ov[y * Wo + xx] = (p[0] + p[1] + p[W] + p[W + 1]) * 0.25;
      }
  }
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, N, C, H, W, Ho, Wo]() {
      xn->ensure_grad();
      for (int64_t nc = 0; nc < N * C; ++nc) {
        double* gi = xn->grad.data() + nc * H * W;
        const double* go = o->grad.data() + nc * Ho * Wo;
        for (int64_t y = 0; y < Ho; ++y)
          for (int64_t xx = 0; xx < Wo; ++xx) {
            const double g = go[y * Wo + xx] * 0.25;
            double* p = gi + (2 * y) * W + 2 * xx;
            p[0] += g;
            p[1] += g;
            p[W] += g;
            p[W + 1] += g;
          }
      }
    };
  }
  return wrap(out);
}

namespace {

struct BilinearTap {
  int64_t i0, i1;
  double w1;  // weight on i1; (1 - w1) on i0
};

BilinearTap bilinear_tap(int64_t o, double inv_scale, int64_t n) {
  const double src = (o + 0.5) * inv_scale - 0.5;
  double fl = std::floor(src);
  BilinearTap t;
  t.w1 = src - fl;
  t.i0 = std::clamp<int64_t>(static_cast<int64_t>(fl), 0, n - 1);
  t.i1 = std::clamp<int64_t>(static_cast<int64_t>(fl) + 1, 0, n - 1);
  return t;
}

}  // namespace

Tensor upsample2_bilinear(const Tensor& x) {
  require_rank(x, 4, "upsample2_bilinear");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = 2 * H, Wo = 2 * W;
  auto out = make_node({N, C, Ho, Wo}, {x.node()});
  flops_add(kFlopsBilinearPerOutput * out->numel());
  std::vector<BilinearTap> ty(Ho), tx(Wo);
  for (int64_t y = 0; y < Ho; ++y) ty[y] = bilinear_tap(y, 0.5, H);
  for (int64_t xx = 0; xx < Wo; ++xx) tx[xx] = bilinear_tap(xx, 0.5, W);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* in = x.data() + nc * H * W;
    double* ov = out->value.data() + nc * Ho * Wo;
    for (int64_t y = 0; y < Ho; ++y)
      for (int64_t xx = 0; xx < Wo; ++xx) {
        const auto& a = ty[y];
        const auto& b = tx[xx];
        const double top = in[a.i0 * W + b.i0] * (1 - b.w1) + in[a.i0 * W + b.i1] * b.w1;
        const double bot = in[a.i1 * W + b.i0] * (1 - b.w1) + in[a.i1 * W + b.i1] * b.w1;
        ov[y * Wo + xx] = top * (1 - a.w1) + bot * a.w1;
      }
  }
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, N, C, H, W, Ho, Wo, ty, tx]() {
      xn->ensure_grad();
      for (int64_t nc = 0; nc < N * C; ++nc) {
        double* gi = xn->grad.data() + nc * H * W;
        const double* go = o->grad.data() + nc * Ho * Wo;
        for (int64_t y = 0; y < Ho; ++y)
          for (int64_t xx = 0; xx < Wo; ++xx) {
            const double g = go[y * Wo + xx];
            if (g == 0.0) continue;
            const auto& a = ty[y];
            const auto& b = tx[xx];
            gi[a.i0 * W + b.i0] += g * (1 - a.w1) * (1 - b.w1);
            gi[a.i0 * W + b.i1] += g * (1 - a.w1) * b.w1;
            gi[a.i1 * W + b.i0] += g * a.w1 * (1 - b.w1);
            gi[a.i1 * W + b.i1] += g * a.w1 * b.w1;
          }
      }
    };
  }
  return wrap(out);
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  auto out = make_node({N, C}, {x.node()});
  flops_add(x.numel() + out->numel());
  const double inv = 1.0 / static_cast<double>(H * W);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* in = x.data() + nc * H * W;
    double acc = 0.0;
    for (int64_t i = 0; i < H * W; ++i) acc += in[i];
    out->value[nc] = acc * inv;
  }
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, N, C, H, W, inv]() {
      xn->ensure_grad();
      for (int64_t nc = 0; nc < N * C; ++nc) {
        const double g = o->grad[nc] * inv;
        double* gi = xn->grad.data() + nc * H * W;
        for (int64_t i = 0; i < H * W; ++i) gi[i] += g;
      }
    };
  }
  return wrap(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto out = make_node(a.shape(), {a.node(), b.node()});
  flops_add(kFlopsAddPerElem * out->numel());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.data()[i] + b.data()[i];
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    out->backward = [o, an, bn]() {
      if (an->needs_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i];
      }
      if (bn->needs_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) bn->grad[i] += o->grad[i];
      }
    };
  }
  return wrap(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          "sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto out = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.data()[i] - b.data()[i];
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    out->backward = [o, an, bn]() {
      if (an->needs_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i];
      }
      if (bn->needs_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) bn->grad[i] -= o->grad[i];
      }
    };
  }
  return wrap(out);
}

Tensor scale(const Tensor& a, double s) {
  auto out = make_node(a.shape(), {a.node()});
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.data()[i] * s;
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* an = a.node().get();
    out->backward = [o, an, s]() {
      an->ensure_grad();
      for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i] * s;
    };
  }
  return wrap(out);
}

Tensor slice_channels(const Tensor& x, int64_t c0, int64_t c1) {
  require_rank(x, 4, "slice_channels");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(0 <= c0 && c0 < c1 && c1 <= C, "slice_channels: range [" + std::to_string(c0) + "," +
                                             std::to_string(c1) + ") out of " + shape_str(x.shape()));
  const int64_t Cs = c1 - c0, hw = H * W;
  auto out = make_node({N, Cs, H, W}, {x.node()});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < Cs; ++c)
      std::copy_n(x.data() + ((n * C + c0 + c) * hw), hw, out->value.data() + ((n * Cs + c) * hw));
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, N, C, Cs, c0, hw]() {
      xn->ensure_grad();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < Cs; ++c) {
          const double* g = o->grad.data() + ((n * Cs + c) * hw);
          double* gi = xn->grad.data() + ((n * C + c0 + c) * hw);
          for (int64_t i = 0; i < hw; ++i) gi[i] += g[i];
        }
    };
  }
  return wrap(out);
}

Tensor crop_spatial(const Tensor& x, int64_t r0, int64_t c0, int64_t h, int64_t w) {
  int64_t lead, H, W;
  spatial_dims(x, lead, H, W);
  require(r0 >= 0 && c0 >= 0 && h >= 1 && w >= 1 && r0 + h <= H && c0 + w <= W,
          "crop_spatial: window out of bounds for " + shape_str(x.shape()));
  Shape os = x.shape();
  os[os.size() - 2] = h;
  os[os.size() - 1] = w;
  auto out = make_node(os, {x.node()});
  for (int64_t l = 0; l < lead; ++l)
    for (int64_t y = 0; y < h; ++y)
      std::copy_n(x.data() + (l * H + r0 + y) * W + c0, w, out->value.data() + (l * h + y) * w);
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, lead, H, W, r0, c0, h, w]() {
      xn->ensure_grad();
      for (int64_t l = 0; l < lead; ++l)
        for (int64_t y = 0; y < h; ++y) {
          const double* g = o->grad.data() + (l * h + y) * w;
          double* gi = xn->grad.data() + (l * H + r0 + y) * W + c0;
          for (int64_t i = 0; i < w; ++i) gi[i] += g[i];
        }
    };
  }
  return wrap(out);
}

Tensor pad_reflect(const Tensor& x, int64_t bottom, int64_t right) {
  int64_t lead, H, W;
  spatial_dims(x, lead, H, W);
  require(bottom >= 0 && right >= 0, "pad_reflect: negative padding");
  require(bottom < H && right < W, "pad_reflect: padding must be smaller than the input");
  const int64_t Ho = H + bottom, Wo = W + right;
  Shape os = x.shape();
  os[os.size() - 2] = Ho;
  os[os.size() - 1] = Wo;
  // Mirror without repeating the edge sample: row H maps to row H-2.
  auto src_y = [H](int64_t y) { return y < H ? y : 2 * H - 2 - y; };
  auto src_x = [W](int64_t xx) { return xx < W ? xx : 2 * W - 2 - xx; };
  auto out = make_node(os, {x.node()});
  for (int64_t l = 0; l < lead; ++l)
    for (int64_t y = 0; y < Ho; ++y)
      for (int64_t xx = 0; xx < Wo; ++xx)
        out->value[(l * Ho + y) * Wo + xx] = x.data()[(l * H + src_y(y)) * W + src_x(xx)];
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, lead, H, W, Ho, Wo, src_y, src_x]() {
      xn->ensure_grad();
      for (int64_t l = 0; l < lead; ++l)
        for (int64_t y = 0; y < Ho; ++y)
          for (int64_t xx = 0; xx < Wo; ++xx)
            xn->grad[(l * H + src_y(y)) * W + src_x(xx)] += o->grad[(l * Ho + y) * Wo + xx];
    };
  }
  return wrap(out);
}

Tensor pixel_shuffle(const Tensor& x, int64_t r) {
  require_rank(x, 4, "pixel_shuffle");
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(r >= 1 && C % (r * r) == 0,
          "pixel_shuffle: channels of " + shape_str(x.shape()) + " not divisible by r^2");
  const int64_t Co = C / (r * r), Ho = H * r, Wo = W * r;
  auto out = make_node({N, Co, Ho, Wo}, {x.node()});
  auto src_index = [C, H, W, r](int64_t n, int64_t c, int64_t y, int64_t xx) {
    const int64_t dy = y % r, dx = xx % r;
    const int64_t ci = c * r * r + dy * r + dx;
    return ((n * C + ci) * H + y / r) * W + xx / r;
  };
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < Co; ++c)
      for (int64_t y = 0; y < Ho; ++y)
        for (int64_t xx = 0; xx < Wo; ++xx)
          out->value[((n * Co + c) * Ho + y) * Wo + xx] = x.data()[src_index(n, c, y, xx)];
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, N, Co, Ho, Wo, src_index]() {
      xn->ensure_grad();
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < Co; ++c)
          for (int64_t y = 0; y < Ho; ++y)
            for (int64_t xx = 0; xx < Wo; ++xx)
              xn->grad[src_index(n, c, y, xx)] += o->grad[((n * Co + c) * Ho + y) * Wo + xx];
    };
  }
  return wrap(out);
}

Tensor detach(const Tensor& x) {
  Tensor out(x.shape(), x.values(), false);
  return out;
}

Tensor gather_scalar(const Tensor& x, int64_t index) {
  require(index >= 0 && index < x.numel(),
          "gather_scalar: index " + std::to_string(index) + " out of " + shape_str(x.shape()));
  auto out = make_node({1}, {x.node()});
  out->value[0] = x.data()[index];
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, index]() {
      xn->ensure_grad();
      xn->grad[index] += o->grad[0];
    };
  }
  return wrap(out);
}

Tensor blend(const Tensor& a, const Tensor& b, const Tensor& t) {
  require(a.shape() == b.shape(),
          "blend: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  require(t.numel() == 1, "blend: t must be scalar, got " + shape_str(t.shape()));
  const double tv = t.item();
  auto out = make_node(a.shape(), {a.node(), b.node(), t.node()});
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a.data()[i] + tv * (b.data()[i] - a.data()[i]);
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    TensorNode* tn = t.node().get();
    out->backward = [o, an, bn, tn, tv]() {
      if (an->needs_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i] * (1.0 - tv);
      }
      if (bn->needs_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < o->grad.size(); ++i) bn->grad[i] += o->grad[i] * tv;
      }
      if (tn->needs_grad) {
        tn->ensure_grad();
        double acc = 0.0;
        for (size_t i = 0; i < o->grad.size(); ++i)
          acc += o->grad[i] * (bn->value[i] - an->value[i]);
        tn->grad[0] += acc;
      }
    };
  }
  return wrap(out);
}

Tensor affine_scalar(const Tensor& x, double k, double d) {
  require(x.numel() == 1, "affine_scalar: expected scalar, got " + shape_str(x.shape()));
  auto out = make_node({1}, {x.node()});
  out->value[0] = k * x.data()[0] + d;
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, k]() {
      xn->ensure_grad();
      xn->grad[0] += o->grad[0] * k;
    };
  }
  return wrap(out);
}

Tensor sum_all(const Tensor& x) {
  auto out = make_node({1}, {x.node()});
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  out->value[0] = acc;
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn]() {
      xn->ensure_grad();
      for (size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += o->grad[0];
    };
  }
  return wrap(out);
}

Tensor sum_abs(const Tensor& x) {
  auto out = make_node({1}, {x.node()});
  double acc = 0.0;
  for (double v : x.values()) acc += std::fabs(v);
  out->value[0] = acc;
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn]() {
      xn->ensure_grad();
      for (size_t i = 0; i < xn->grad.size(); ++i) {
        const double v = xn->value[i];
        xn->grad[i] += o->grad[0] * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
      }
    };
  }
  return wrap(out);
}

Tensor euclid_norm(const Tensor& x) {
  auto out = make_node({1}, {x.node()});
  double acc = 0.0;
  for (double v : x.values()) acc += v * v;
  const double norm = std::sqrt(acc);
  out->value[0] = norm;
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* xn = x.node().get();
    out->backward = [o, xn, norm]() {
      if (norm == 0.0) return;  // subgradient 0 at the origin
      xn->ensure_grad();
      const double g = o->grad[0] / norm;
      for (size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g * xn->value[i];
    };
  }
  return wrap(out);
}

Tensor l1_mean(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          "l1_mean: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  auto out = make_node({1}, {a.node(), b.node()});
  double acc = 0.0;
  for (size_t i = 0; i < a.values().size(); ++i) acc += std::fabs(a.data()[i] - b.data()[i]);
  const double inv = 1.0 / static_cast<double>(a.numel());
  out->value[0] = acc * inv;
  if (out->needs_grad) {
    TensorNode* o = out.get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    out->backward = [o, an, bn, inv]() {
      if (an->needs_grad) an->ensure_grad();
      if (bn->needs_grad) bn->ensure_grad();
      for (size_t i = 0; i < an->value.size(); ++i) {
        const double d = an->value[i] - bn->value[i];
        const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        const double g = o->grad[0] * inv * s;
        if (an->needs_grad) an->grad[i] += g;
        if (bn->needs_grad) bn->grad[i] -= g;
      }
    };
  }
  return wrap(out);
}

namespace {

Tensor resize_separable(const Tensor& x, int64_t Ho, int64_t Wo, int taps,
                        const std::function<double(double)>& kernel, const char* what) {
  require(!x.needs_grad(), std::string(what) + ": forward-only, input must not require grad");
  int64_t lead, H, W;
  spatial_dims(x, lead, H, W);
  require(Ho >= 1 && Wo >= 1, std::string(what) + ": output dimension < 1");
  Shape os = x.shape();
  os[os.size() - 2] = Ho;
  os[os.size() - 1] = Wo;
  Tensor out(os, 0.0, false);
  flops_add((taps == 2 ? kFlopsBilinearPerOutput : kFlopsBicubicPerOutput) * out.numel());

  // Per-axis tap tables: indices clamped at the border, weights from the
  // kernel at half-pixel source centers.
  auto build = [&](int64_t no, int64_t n) {
    const double inv = static_cast<double>(n) / static_cast<double>(no);
    std::vector<std::pair<std::vector<int64_t>, std::vector<double>>> table(no);
    for (int64_t o = 0; o < no; ++o) {
      const double src = (o + 0.5) * inv - 0.5;
      const int64_t base = static_cast<int64_t>(std::floor(src)) - (taps / 2 - 1);
      std::vector<int64_t> idx(taps);
      std::vector<double> wts(taps);
      for (int t = 0; t < taps; ++t) {
        idx[t] = std::clamp<int64_t>(base + t, 0, n - 1);
        wts[t] = kernel(src - static_cast<double>(base + t));
      }
      table[o] = {std::move(idx), std::move(wts)};
    }
    return table;
  };
  auto ty = build(Ho, H), tx = build(Wo, W);

  std::vector<double> row(static_cast<size_t>(taps) * Wo);
  for (int64_t l = 0; l < lead; ++l) {
    const double* in = x.data() + l * H * W;
    double* ov = out.data() + l * Ho * Wo;
    for (int64_t y = 0; y < Ho; ++y) {
      const auto& [yi, yw] = ty[y];
      // Horizontal pass for the rows this output row needs.
      for (int t = 0; t < taps; ++t) {
        const double* src_row = in + yi[t] * W;
        double* dst = row.data() + static_cast<size_t>(t) * Wo;
        for (int64_t xx = 0; xx < Wo; ++xx) {
          const auto& [xi, xw] = tx[xx];
          double acc = 0.0;
          for (int u = 0; u < taps; ++u) acc += src_row[xi[u]] * xw[u];
          dst[xx] = acc;
        }
      }
      for (int64_t xx = 0; xx < Wo; ++xx) {
        double acc = 0.0;
        for (int t = 0; t < taps; ++t) acc += row[static_cast<size_t>(t) * Wo + xx] * yw[t];
        ov[y * Wo + xx] = acc;
      }
    }
  }
  return out;
}

}  // namespace

namespace {

double tri(double t) {
  t = std::fabs(t);
  return t < 1.0 ? 1.0 - t : 0.0;
}

void scaled_dims(const Tensor& x, double scale, const char* what, int64_t& Ho, int64_t& Wo) {
  if (scale <= 0.0) throw std::invalid_argument(std::string(what) + ": scale must be positive");
  int64_t lead, H, W;
  spatial_dims(x, lead, H, W);
  Ho = static_cast<int64_t>(std::llround(static_cast<double>(H) * scale));
  Wo = static_cast<int64_t>(std::llround(static_cast<double>(W) * scale));
}

}  // namespace

Tensor resize_bicubic(const Tensor& x, double scale) {
  int64_t Ho, Wo;
  scaled_dims(x, scale, "resize_bicubic", Ho, Wo);
  return resize_separable(x, Ho, Wo, 4, [](double t) { return catmull_rom(t); }, "resize_bicubic");
}

Tensor resize_bilinear(const Tensor& x, double scale) {
  int64_t Ho, Wo;
  scaled_dims(x, scale, "resize_bilinear", Ho, Wo);
  return resize_separable(x, Ho, Wo, 2, tri, "resize_bilinear");
}

Tensor resize_bicubic_to(const Tensor& x, int64_t out_h, int64_t out_w) {
  return resize_separable(x, out_h, out_w, 4, [](double t) { return catmull_rom(t); },
                          "resize_bicubic");
}

Tensor resize_bilinear_to(const Tensor& x, int64_t out_h, int64_t out_w) {
  return resize_separable(x, out_h, out_w, 2, tri, "resize_bilinear");
}

void clamp01_(Tensor& x) {
  for (auto& v : x.values()) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace dcs
