// Copyright 2026 The dcanet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dcanet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "dcanet/kernels/gemm.hpp"
#include "dcanet/kernels/kernels.hpp"

namespace dcanet {
namespace {

void require_rank4(const Shape& s, const char* op) {
  if (s.rank() != 4) throw ShapeError(std::string(op) + ": expected an N x C x H x W tensor, got " + s.str());
}

template <typename T>
void vec_axpy(T alpha, const T* x, T* y, int64_t n) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active_kernels().axpy(alpha, x, y, n);
  } else {
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
}

struct ConvGeometry {
  int64_t channels, height, width;
  int kernel, dilation, padding;
  int64_t out_h, out_w;
};

// Unfolds one image into a (C*k*k) x (out_h*out_w) matrix.
template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const int64_t plane = g.out_h * g.out_w;
  for (int64_t c = 0; c < g.channels; ++c) {
    const T* xc = x + c * g.height * g.width;
    for (int u = 0; u < g.kernel; ++u) {
      const int64_t dy = static_cast<int64_t>(u) * g.dilation - g.padding;
      for (int v = 0; v < g.kernel; ++v) {
        const int64_t dx = static_cast<int64_t>(v) * g.dilation - g.padding;
        const int64_t j_lo = std::clamp<int64_t>(-dx, 0, g.out_w);
        const int64_t j_hi = std::clamp<int64_t>(g.width - dx, j_lo, g.out_w);
        T* row = col + ((c * g.kernel + u) * g.kernel + v) * plane;
        for (int64_t i = 0; i < g.out_h; ++i) {
          T* r = row + i * g.out_w;
          const int64_t sy = i + dy;
          if (sy < 0 || sy >= g.height) {
            std::fill(r, r + g.out_w, T(0));
            continue;
          }
          std::fill(r, r + j_lo, T(0));
          const T* src = xc + sy * g.width + dx;
          std::copy(src + j_lo, src + j_hi, r + j_lo);
          std::fill(r + j_hi, r + g.out_w, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds columns back into the image gradient.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* gx) {
  const int64_t plane = g.out_h * g.out_w;
  for (int64_t c = 0; c < g.channels; ++c) {
    T* gc = gx + c * g.height * g.width;
    for (int u = 0; u < g.kernel; ++u) {
      const int64_t dy = static_cast<int64_t>(u) * g.dilation - g.padding;
      for (int v = 0; v < g.kernel; ++v) {
        const int64_t dx = static_cast<int64_t>(v) * g.dilation - g.padding;
        const int64_t j_lo = std::clamp<int64_t>(-dx, 0, g.out_w);
        const int64_t j_hi = std::clamp<int64_t>(g.width - dx, j_lo, g.out_w);
        const T* row = col + ((c * g.kernel + u) * g.kernel + v) * plane;
        for (int64_t i = 0; i < g.out_h; ++i) {
          const int64_t sy = i + dy;
          if (sy < 0 || sy >= g.height) continue;
          const T* r = row + i * g.out_w;
          T* dst = gc + sy * g.width + dx;
          for (int64_t j = j_lo; j < j_hi; ++j) dst[j] += r[j];
        }
      }
    }
  }
}

template <typename T>
void laplacian_plane(const T* in, T* out, int64_t h, int64_t w) {
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      const T c = in[i * w + j];
      const T up = i > 0 ? in[(i - 1) * w + j] : T(0);
      const T down = i + 1 < h ? in[(i + 1) * w + j] : T(0);
      const T left = j > 0 ? in[i * w + j - 1] : T(0);
      const T right = j + 1 < w ? in[i * w + j + 1] : T(0);
      out[i * w + j] += up + down + left + right - T(4) * c;
    }
  }
}

struct AxisTaps {
  std::vector<int64_t> i0, i1;
  std::vector<double> frac;
};

AxisTaps upsample_taps(int64_t in, int64_t out) {
  AxisTaps t;
  t.i0.resize(static_cast<size_t>(out));
  t.i1.resize(static_cast<size_t>(out));
  t.frac.resize(static_cast<size_t>(out));
  for (int64_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<int64_t>(std::floor(src));
    const auto k = static_cast<size_t>(o);
    t.i0[k] = lo;
    t.i1[k] = std::min(lo + 1, in - 1);
    t.frac[k] = src - static_cast<double>(lo);
  }
  return t;
}

}  // namespace

template <typename T>
Conv2dParams<T> make_conv(const std::string& name, int64_t in, int64_t out, int kernel, int dilation) {
  if (kernel % 2 == 0) throw ShapeError("conv '" + name + "': kernel size must be odd");
  if (dilation < 1) throw ShapeError("conv '" + name + "': dilation must be positive");
  Conv2dParams<T> p;
  p.weight.name = name + ".weight";
  p.weight.value = Tensor<T>(Shape{out, in, kernel, kernel});
  p.bias.name = name + ".bias";
  p.bias.value = Tensor<T>(Shape{out});
  p.dilation = dilation;
  p.padding = dilation * (kernel - 1) / 2;
  p.weight.zero_grad();
  p.bias.zero_grad();
  return p;
}

template <typename T>
BatchNormParams<T> make_batch_norm(const std::string& name, int64_t channels) {
  BatchNormParams<T> p;
  p.gamma.name = name + ".gamma";
  p.gamma.value = Tensor<T>(Shape{channels}, T(1));
  p.beta.name = name + ".beta";
  p.beta.value = Tensor<T>(Shape{channels}, T(0));
  p.running_mean = Tensor<T>(Shape{channels}, T(0));
  p.running_var = Tensor<T>(Shape{channels}, T(1));
  p.gamma.zero_grad();
  p.beta.zero_grad();
  return p;
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, int dilation, int padding) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require_rank4(xs, "conv2d");
  if (ws.rank() != 4 || ws[2] != ws[3]) throw ShapeError("conv2d: weight must be O x C x k x k, got " + ws.str());
  if (ws[2] % 2 == 0) throw ShapeError("conv2d: kernel size must be odd, got " + std::to_string(ws[2]));
  if (ws[1] != xs.c()) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c()) + " channels but weight " + ws.str() +
                     " expects " + std::to_string(ws[1]));
  }
  if (!(bias.shape() == Shape{ws[0]})) throw ShapeError("conv2d: bias shape " + bias.shape().str());
  if (dilation < 1 || padding < 0) throw ShapeError("conv2d: invalid dilation/padding");

  ConvGeometry g{xs.c(), xs.h(), xs.w(), static_cast<int>(ws[2]), dilation, padding, 0, 0};
  g.out_h = xs.h() + 2 * padding - dilation * (g.kernel - 1);
  g.out_w = xs.w() + 2 * padding - dilation * (g.kernel - 1);
  if (g.out_h <= 0 || g.out_w <= 0) throw ShapeError("conv2d: input " + xs.str() + " too small for kernel");

  const int64_t batch = xs.n(), out_c = ws[0];
  const int64_t ckk = g.channels * g.kernel * g.kernel;
  const int64_t plane = g.out_h * g.out_w;
  const bool direct = g.kernel == 1 && padding == 0;
  const int64_t in_len = g.channels * g.height * g.width;

  Tensor<T> out(Shape::nchw(batch, out_c, g.out_h, g.out_w));
  std::vector<T> col(direct ? 0 : static_cast<size_t>(ckk * plane));
  const T* px = x.value().ptr();
  const T* pw = weight.value().ptr();
  const T* pb = bias.value().ptr();
  for (int64_t n = 0; n < batch; ++n) {
    const T* cols = px + n * in_len;
    if (!direct) {
      im2col(cols, g, col.data());
      cols = col.data();
    }
    T* dst = out.ptr() + n * out_c * plane;
    simd::gemm(out_c, plane, ckk, simd::row_major(pw, ckk), simd::row_major(cols, plane), dst, plane, false);
    for (int64_t o = 0; o < out_c; ++o) {
      T* row = dst + o * plane;
      const T b = pb[o];
      for (int64_t i = 0; i < plane; ++i) row[i] += b;
    }
  }

  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.tape()->record(std::move(out), {x, weight, bias}, [=](Tape<T>& tape, const Tensor<T>& gout) {
    const bool need_x = tape.requires_grad(ix);
    const bool need_w = tape.requires_grad(iw);
    const bool need_b = tape.requires_grad(ib);
    const T* xv = tape.value(ix).ptr();
    const T* wv = tape.value(iw).ptr();
    T* gw = need_w ? tape.grad_for(iw).ptr() : nullptr;
    T* gb = need_b ? tape.grad_for(ib).ptr() : nullptr;
    T* gx = need_x ? tape.grad_for(ix).ptr() : nullptr;
    std::vector<T> col_buf(direct ? 0 : static_cast<size_t>(ckk * plane));
    std::vector<T> gcol(need_x && !direct ? static_cast<size_t>(ckk * plane) : 0);
    for (int64_t n = 0; n < batch; ++n) {
      const T* go = gout.ptr() + n * out_c * plane;
      if (need_b) {
        for (int64_t o = 0; o < out_c; ++o) {
          double s = 0.0;
          for (int64_t i = 0; i < plane; ++i) s += go[o * plane + i];
          gb[o] += static_cast<T>(s);
        }
      }
      if (need_w) {
        const T* cols = xv + n * in_len;
        if (!direct) {
          im2col(cols, g, col_buf.data());
          cols = col_buf.data();
        }
        // dW (O x CKK) += dOut (O x P) * cols^T (P x CKK)
        simd::gemm(out_c, ckk, plane, simd::row_major(go, plane), simd::MatrixView<T>{cols, 1, plane}, gw, ckk,
                   true);
      }
      if (need_x) {
        // dcols (CKK x P) = W^T (CKK x O) * dOut (O x P)
        const simd::MatrixView<T> wt{wv, 1, ckk};
        if (direct) {
          simd::gemm(ckk, plane, out_c, wt, simd::row_major(go, plane), gx + n * in_len, plane, true);
        } else {
          simd::gemm(ckk, plane, out_c, wt, simd::row_major(go, plane), gcol.data(), plane, false);
          col2im(gcol.data(), g, gx + n * in_len);
        }
      }
    }
  });
}

template <typename T>
Var<T> max_pool2(Var<T> x) {
  const Shape s = x.shape();
  require_rank4(s, "max_pool2");
  const int64_t h = s.h(), w = s.w();
  const int64_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  const int64_t planes = s.n() * s.c();
  Tensor<T> out(Shape::nchw(s.n(), s.c(), oh, ow));
  std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));
  const T* px = x.value().ptr();
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = px + p * h * w;
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        int64_t best = -1;
        for (int64_t di = 0; di < 2; ++di) {
          const int64_t r = std::min(2 * i + di, h - 1);
          for (int64_t dj = 0; dj < 2; ++dj) {
            const int64_t q = r * w + std::min(2 * j + dj, w - 1);
            if (best < 0 || src[q] > src[best]) best = q;
          }
        }
        const int64_t o = (p * oh + i) * ow + j;
        out[o] = src[best];
        argmax[static_cast<size_t>(o)] = p * h * w + best;
      }
    }
  }
  const int ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix, argmax](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t o = 0; o < g.numel(); ++o) gx[argmax[static_cast<size_t>(o)]] += g[o];
  });
}

template <typename T>
Var<T> bilinear_upsample2(Var<T> x) {
  const Shape s = x.shape();
  require_rank4(s, "bilinear_upsample2");
  const int64_t h = s.h(), w = s.w(), oh = 2 * h, ow = 2 * w;
  const int64_t planes = s.n() * s.c();
  const AxisTaps ty = upsample_taps(h, oh), tx = upsample_taps(w, ow);
  Tensor<T> out(Shape::nchw(s.n(), s.c(), oh, ow));
  const T* px = x.value().ptr();
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = px + p * h * w;
    T* dst = out.ptr() + p * oh * ow;
    for (int64_t i = 0; i < oh; ++i) {
      const auto ki = static_cast<size_t>(i);
      const T fy = static_cast<T>(ty.frac[ki]);
      const T* r0 = src + ty.i0[ki] * w;
      const T* r1 = src + ty.i1[ki] * w;
      for (int64_t j = 0; j < ow; ++j) {
        const auto kj = static_cast<size_t>(j);
        const T fx = static_cast<T>(tx.frac[kj]);
        const T top = r0[tx.i0[kj]] + fx * (r0[tx.i1[kj]] - r0[tx.i0[kj]]);
        const T bottom = r1[tx.i0[kj]] + fx * (r1[tx.i1[kj]] - r1[tx.i0[kj]]);
        dst[i * ow + j] = top + fy * (bottom - top);
      }
    }
  }
  const int ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t p = 0; p < planes; ++p) {
      T* dst = gx.ptr() + p * h * w;
      const T* gp = g.ptr() + p * oh * ow;
      for (int64_t i = 0; i < oh; ++i) {
        const auto ki = static_cast<size_t>(i);
        const T fy = static_cast<T>(ty.frac[ki]);
        T* r0 = dst + ty.i0[ki] * w;
        T* r1 = dst + ty.i1[ki] * w;
        for (int64_t j = 0; j < ow; ++j) {
          const auto kj = static_cast<size_t>(j);
          const T fx = static_cast<T>(tx.frac[kj]);
          const T v = gp[i * ow + j];
          r0[tx.i0[kj]] += (T(1) - fy) * (T(1) - fx) * v;
          r0[tx.i1[kj]] += (T(1) - fy) * fx * v;
          r1[tx.i0[kj]] += fy * (T(1) - fx) * v;
          r1[tx.i1[kj]] += fy * fx * v;
        }
      }
    }
  });
}

template <typename T>
Var<T> center_crop(Var<T> x, int64_t h, int64_t w) {
  const Shape s = x.shape();
  require_rank4(s, "center_crop");
  if (h > s.h() || w > s.w() || h <= 0 || w <= 0) {
    throw ShapeError("center_crop: cannot crop " + s.str() + " to " + std::to_string(h) + "x" + std::to_string(w));
  }
  if (h == s.h() && w == s.w()) return x;
  const int64_t oy = (s.h() - h) / 2, ox = (s.w() - w) / 2;
  const int64_t planes = s.n() * s.c();
  Tensor<T> out(Shape::nchw(s.n(), s.c(), h, w));
  const T* px = x.value().ptr();
  for (int64_t p = 0; p < planes; ++p) {
    for (int64_t i = 0; i < h; ++i) {
      const T* src = px + (p * s.h() + i + oy) * s.w() + ox;
      std::copy(src, src + w, out.ptr() + (p * h + i) * w);
    }
  }
  const int ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t p = 0; p < planes; ++p) {
      for (int64_t i = 0; i < h; ++i) {
        vec_axpy(T(1), g.ptr() + (p * h + i) * w, gx.ptr() + (p * s.h() + i + oy) * s.w() + ox, w);
      }
    }
  });
}

template <typename T>
Var<T> batch_norm(Tape<T>& tape, Var<T> x, BatchNormParams<T>& p, BnMode mode) {
  const Shape s = x.shape();
  require_rank4(s, "batch_norm");
  const int64_t channels = s.c(), plane = s.h() * s.w(), batch = s.n();
  if (p.gamma.value.numel() != channels || p.running_mean.numel() != channels) {
    throw ShapeError("batch_norm: parameters sized for " + std::to_string(p.gamma.value.numel()) +
                     " channels, input has " + std::to_string(channels));
  }
  const int64_t count = batch * plane;
  const T* px = x.value().ptr();
  std::vector<T> mean(static_cast<size_t>(channels)), inv_std(static_cast<size_t>(channels));
  for (int64_t c = 0; c < channels; ++c) {
    const auto k = static_cast<size_t>(c);
    if (mode == BnMode::kTrain) {
      double sum = 0.0;
      for (int64_t n = 0; n < batch; ++n) {
        const T* src = px + (n * channels + c) * plane;
        for (int64_t i = 0; i < plane; ++i) sum += src[i];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int64_t n = 0; n < batch; ++n) {
        const T* src = px + (n * channels + c) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          const double d = src[i] - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      mean[k] = static_cast<T>(mu);
      inv_std[k] = static_cast<T>(1.0 / std::sqrt(var + p.eps));
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      p.running_mean[c] = static_cast<T>((1.0 - p.momentum) * p.running_mean[c] + p.momentum * mu);
      p.running_var[c] = static_cast<T>((1.0 - p.momentum) * p.running_var[c] + p.momentum * unbiased);
    } else {
      mean[k] = p.running_mean[c];
      inv_std[k] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(p.running_var[c]) + p.eps));
    }
  }

  Var<T> gamma = tape.param(p.gamma);
  Var<T> beta = tape.param(p.beta);
  const T* pg = gamma.value().ptr();
  const T* pbeta = beta.value().ptr();
  Tensor<T> out(s);
  for (int64_t n = 0; n < batch; ++n) {
    for (int64_t c = 0; c < channels; ++c) {
      const auto k = static_cast<size_t>(c);
      const T* src = px + (n * channels + c) * plane;
      T* dst = out.ptr() + (n * channels + c) * plane;
      const T a = pg[c] * inv_std[k];
      const T b = pbeta[c] - a * mean[k];
      for (int64_t i = 0; i < plane; ++i) dst[i] = a * src[i] + b;
    }
  }

  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool train = mode == BnMode::kTrain;
  return tape.record(std::move(out), {x, gamma, beta}, [=](Tape<T>& t, const Tensor<T>& g) {
    const T* xv = t.value(ix).ptr();
    const T* gam = t.value(ig).ptr();
    for (int64_t c = 0; c < channels; ++c) {
      const auto k = static_cast<size_t>(c);
      double g_sum = 0.0, gx_sum = 0.0;
      for (int64_t n = 0; n < batch; ++n) {
        const T* gp = g.ptr() + (n * channels + c) * plane;
        const T* src = xv + (n * channels + c) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          g_sum += gp[i];
          gx_sum += static_cast<double>(gp[i]) * static_cast<double>((src[i] - mean[k]) * inv_std[k]);
        }
      }
      if (t.requires_grad(ig)) t.grad_for(ig)[c] += static_cast<T>(gx_sum);
      if (t.requires_grad(ib)) t.grad_for(ib)[c] += static_cast<T>(g_sum);
      if (!t.requires_grad(ix)) continue;
      T* gx = t.grad_for(ix).ptr();
      const T a = gam[c] * inv_std[k];
      const T g_mean = static_cast<T>(g_sum / static_cast<double>(count));
      const T gx_mean = static_cast<T>(gx_sum / static_cast<double>(count));
      for (int64_t n = 0; n < batch; ++n) {
        const int64_t off = (n * channels + c) * plane;
        const T* gp = g.ptr() + off;
        const T* src = xv + off;
        T* dst = gx + off;
        if (train) {
          for (int64_t i = 0; i < plane; ++i) {
            const T xhat = (src[i] - mean[k]) * inv_std[k];
            dst[i] += a * (gp[i] - g_mean - xhat * gx_mean);
          }
        } else {
          for (int64_t i = 0; i < plane; ++i) dst[i] += a * gp[i];
        }
      }
    }
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = v > T(0) ? v : T(0);
  const int ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& xv = tape.value(ix);
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t i = 0; i < g.numel(); ++i) {
      if (xv[i] > T(0)) gx[i] += g[i];
    }
  });
}

template <typename T>
Var<T> prelu(Var<T> x, Var<T> slope) {
  if (slope.value().numel() != 1) throw ShapeError("prelu: slope must hold a single value");
  const T a = slope.value()[0];
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = v > T(0) ? v : a * v;
  const int ix = x.id(), is = slope.id();
  return x.tape()->record(std::move(out), {x, slope}, [ix, is](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& xv = tape.value(ix);
    const T a = tape.value(is)[0];
    if (tape.requires_grad(ix)) {
      Tensor<T>& gx = tape.grad_for(ix);
      for (int64_t i = 0; i < g.numel(); ++i) gx[i] += xv[i] > T(0) ? g[i] : a * g[i];
    }
    if (tape.requires_grad(is)) {
      double s = 0.0;
      for (int64_t i = 0; i < g.numel(); ++i) {
        if (xv[i] <= T(0)) s += static_cast<double>(g[i]) * static_cast<double>(xv[i]);
      }
      tape.grad_for(is)[0] += static_cast<T>(s);
    }
  });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = std::tanh(v);
  const int ix = x.id();
  const int iy = static_cast<int>(x.tape()->size());
  return x.tape()->record(std::move(out), {x}, [ix, iy](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& y = tape.value(iy);
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = T(1) / (T(1) + std::exp(-v));
  const int ix = x.id();
  const int iy = static_cast<int>(x.tape()->size());
  return x.tape()->record(std::move(out), {x}, [ix, iy](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& y = tape.value(iy);
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var<T> channel_pool(ReduceKind kind, Var<T> x) {
  require_rank4(x.shape(), "channel_pool");
  if (kind == ReduceKind::kSum) throw Error("channel_pool: only mean and max are supported");
  return reduce(kind, x, {1});
}

template <typename T>
Var<T> spatial_gap(Var<T> x) {
  require_rank4(x.shape(), "spatial_gap");
  return reduce(ReduceKind::kMean, x, {2, 3});
}

template <typename T>
Var<T> laplacian(Var<T> x) {
  const Shape s = x.shape();
  require_rank4(s, "laplacian");
  const int64_t h = s.h(), w = s.w(), planes = s.n() * s.c();
  Tensor<T> out(s);
  for (int64_t p = 0; p < planes; ++p) laplacian_plane(x.value().ptr() + p * h * w, out.ptr() + p * h * w, h, w);
  const int ix = x.id();
  // The zero-padded stencil is symmetric, so it is its own adjoint.
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t p = 0; p < planes; ++p) laplacian_plane(g.ptr() + p * h * w, gx.ptr() + p * h * w, h, w);
  });
}

template <typename T>
std::pair<Var<T>, Var<T>> spatial_gradients(Var<T> x) {
  const Shape s = x.shape();
  require_rank4(s, "spatial_gradients");
  const int64_t h = s.h(), w = s.w(), planes = s.n() * s.c();
  const int64_t wh = std::max<int64_t>(w - 1, 0), hv = std::max<int64_t>(h - 1, 0);
  Tensor<T> gh(Shape::nchw(s.n(), s.c(), h, wh));
  Tensor<T> gv(Shape::nchw(s.n(), s.c(), hv, w));
  const T* px = x.value().ptr();
  for (int64_t p = 0; p < planes; ++p) {
    const T* src = px + p * h * w;
    for (int64_t i = 0; i < h; ++i) {
      for (int64_t j = 0; j < wh; ++j) gh[(p * h + i) * wh + j] = src[i * w + j + 1] - src[i * w + j];
    }
    for (int64_t i = 0; i < hv; ++i) {
      for (int64_t j = 0; j < w; ++j) gv[(p * hv + i) * w + j] = src[(i + 1) * w + j] - src[i * w + j];
    }
  }
  const int ix = x.id();
  Var<T> vh = x.tape()->record(std::move(gh), {x}, [=](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t p = 0; p < planes; ++p) {
      for (int64_t i = 0; i < h; ++i) {
        for (int64_t j = 0; j < wh; ++j) {
          const T v = g[(p * h + i) * wh + j];
          gx[(p * h + i) * w + j + 1] += v;
          gx[(p * h + i) * w + j] -= v;
        }
      }
    }
  });
  Var<T> vv = x.tape()->record(std::move(gv), {x}, [=](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t p = 0; p < planes; ++p) {
      for (int64_t i = 0; i < hv; ++i) {
        for (int64_t j = 0; j < w; ++j) {
          const T v = g[(p * hv + i) * w + j];
          gx[(p * h + i + 1) * w + j] += v;
          gx[(p * h + i) * w + j] -= v;
        }
      }
    }
  });
  return {vh, vv};
}

#define DCANET_INSTANTIATE_NN(T)                                                          \
  template Conv2dParams<T> make_conv(const std::string&, int64_t, int64_t, int, int);     \
  template BatchNormParams<T> make_batch_norm(const std::string&, int64_t);               \
  template Var<T> conv2d(Var<T>, Var<T>, Var<T>, int, int);                               \
  template Var<T> max_pool2(Var<T>);                                                      \
  template Var<T> bilinear_upsample2(Var<T>);                                             \
  template Var<T> center_crop(Var<T>, int64_t, int64_t);                                  \
  template Var<T> batch_norm(Tape<T>&, Var<T>, BatchNormParams<T>&, BnMode);              \
  template Var<T> relu(Var<T>);                                                           \
  template Var<T> prelu(Var<T>, Var<T>);                                                  \
  template Var<T> tanh(Var<T>);                                                           \
  template Var<T> sigmoid(Var<T>);                                                        \
  template Var<T> channel_pool(ReduceKind, Var<T>);                                       \
  template Var<T> spatial_gap(Var<T>);                                                    \
  template Var<T> laplacian(Var<T>);                                                      \
  template std::pair<Var<T>, Var<T>> spatial_gradients(Var<T>);

DCANET_INSTANTIATE_NN(float)
DCANET_INSTANTIATE_NN(double)

}  // namespace dcanet
