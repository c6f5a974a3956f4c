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

#include "dcanet/ops.hpp"

#include <cmath>
#include <limits>
#include <type_traits>

#include "dcanet/kernels/kernels.hpp"

namespace dcanet {
namespace {

struct Dims4 {
  std::array<int64_t, 4> d{1, 1, 1, 1};
};

Dims4 pad4(const Shape& s) {
  Dims4 out;
  const int off = 4 - s.rank();
  for (int i = 0; i < s.rank(); ++i) out.d[static_cast<size_t>(off + i)] = s[i];
  return out;
}

// Row-major strides of `of`, with 0 on axes where `of` has extent 1 but
// `full` does not.
std::array<int64_t, 4> broadcast_strides(const Dims4& of, const Dims4& full) {
  std::array<int64_t, 4> st{};
  int64_t acc = 1;
  for (int i = 3; i >= 0; --i) {
    const auto k = static_cast<size_t>(i);
    st[k] = (of.d[k] == 1 && full.d[k] != 1) ? 0 : acc;
    acc *= of.d[k];
  }
  return st;
}

template <typename F>
void for_each_broadcast(const Dims4& full, const std::array<int64_t, 4>& bst, F&& f) {
  int64_t idx = 0;
  for (int64_t i0 = 0; i0 < full.d[0]; ++i0) {
    for (int64_t i1 = 0; i1 < full.d[1]; ++i1) {
      for (int64_t i2 = 0; i2 < full.d[2]; ++i2) {
        const int64_t base = i0 * bst[0] + i1 * bst[1] + i2 * bst[2];
        for (int64_t i3 = 0; i3 < full.d[3]; ++i3) f(idx++, base + i3 * bst[3]);
      }
    }
  }
}

void check_broadcast(const Shape& a, const Shape& b, const char* op) {
  bool ok = a.rank() == b.rank();
  for (int i = 0; ok && i < a.rank(); ++i) ok = b[i] == a[i] || b[i] == 1;
  if (!ok) {
    throw ShapeError(std::string(op) + ": shape " + b.str() + " cannot broadcast over " + a.str());
  }
}

template <typename T>
void vec_add(const T* a, const T* b, T* out, int64_t n) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active_kernels().add(a, b, out, n);
  } else {
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
  }
}

template <typename T>
void vec_mul(const T* a, const T* b, T* out, int64_t n) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active_kernels().mul(a, b, out, n);
  } else {
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
  }
}

template <typename T>
void vec_axpy(T alpha, const T* x, T* y, int64_t n) {
  if constexpr (std::is_same_v<T, float>) {
    simd::active_kernels().axpy(alpha, x, y, n);
  } else {
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
}

// g (shaped like the full operand) summed into acc (shaped like the
// broadcast operand), multiplied by sign.
template <typename T>
void accumulate_reduced(const Tensor<T>& g, const Shape& full, Tensor<T>& acc, T sign) {
  if (acc.shape() == full) {
    vec_axpy(sign, g.ptr(), acc.ptr(), g.numel());
    return;
  }
  const Dims4 fd = pad4(full);
  const auto bst = broadcast_strides(pad4(acc.shape()), fd);
  T* out = acc.ptr();
  const T* in = g.ptr();
  for_each_broadcast(fd, bst, [&](int64_t i, int64_t j) { out[j] += sign * in[i]; });
}

}  // namespace

template <typename T>
Var<T> elementwise(ElementwiseKind kind, Var<T> a, Var<T> b) {
  const char* names[] = {"add", "sub", "mul"};
  check_broadcast(a.shape(), b.shape(), names[static_cast<int>(kind)]);
  const Shape shape = a.shape();
  const bool same = a.shape() == b.shape();
  Tensor<T> out(shape);
  const T* pa = a.value().ptr();
  const T* pb = b.value().ptr();
  T* po = out.ptr();
  const int64_t n = out.numel();
  if (same) {
    switch (kind) {
      case ElementwiseKind::kAdd:
        vec_add(pa, pb, po, n);
        break;
      case ElementwiseKind::kSub:
        for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
        break;
      case ElementwiseKind::kMul:
        vec_mul(pa, pb, po, n);
        break;
    }
  } else {
    const Dims4 fd = pad4(shape);
    const auto bst = broadcast_strides(pad4(b.shape()), fd);
    for_each_broadcast(fd, bst, [&](int64_t i, int64_t j) {
      switch (kind) {
        case ElementwiseKind::kAdd:
          po[i] = pa[i] + pb[j];
          break;
        case ElementwiseKind::kSub:
          po[i] = pa[i] - pb[j];
          break;
        case ElementwiseKind::kMul:
          po[i] = pa[i] * pb[j];
          break;
      }
    });
  }

  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [kind, ia, ib, shape, same](Tape<T>& tape, const Tensor<T>& g) {
    if (kind == ElementwiseKind::kMul) {
      const Tensor<T>& va = tape.value(ia);
      const Tensor<T>& vb = tape.value(ib);
      if (tape.requires_grad(ia)) {
        Tensor<T>& ga = tape.grad_for(ia);
        if (same) {
          Tensor<T> tmp(shape);
          vec_mul(g.ptr(), vb.ptr(), tmp.ptr(), g.numel());
          vec_axpy(T(1), tmp.ptr(), ga.ptr(), g.numel());
        } else {
          const Dims4 fd = pad4(shape);
          const auto bst = broadcast_strides(pad4(vb.shape()), fd);
          const T* pg = g.ptr();
          const T* pbv = vb.ptr();
          T* pga = ga.ptr();
          for_each_broadcast(fd, bst, [&](int64_t i, int64_t j) { pga[i] += pg[i] * pbv[j]; });
        }
      }
      if (tape.requires_grad(ib)) {
        Tensor<T> ga_times(shape);
        vec_mul(g.ptr(), va.ptr(), ga_times.ptr(), g.numel());
        accumulate_reduced(ga_times, shape, tape.grad_for(ib), T(1));
      }
      return;
    }
    if (tape.requires_grad(ia)) vec_axpy(T(1), g.ptr(), tape.grad_for(ia).ptr(), g.numel());
    if (tape.requires_grad(ib)) {
      accumulate_reduced(g, shape, tape.grad_for(ib), kind == ElementwiseKind::kSub ? T(-1) : T(1));
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (T& v : out.data()) v *= factor;
  const int ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, factor](Tape<T>& tape, const Tensor<T>& g) {
    vec_axpy(factor, g.ptr(), tape.grad_for(ia).ptr(), g.numel());
  });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T value) {
  Tensor<T> out = a.value();
  for (T& v : out.data()) v += value;
  const int ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia](Tape<T>& tape, const Tensor<T>& g) {
    vec_axpy(T(1), g.ptr(), tape.grad_for(ia).ptr(), g.numel());
  });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts.front()->shape();
  if (s0.rank() != 4) throw ShapeError("concat: expected rank-4 inputs, got " + s0.str());
  int64_t channels = 0;
  for (const Tensor<T>* p : parts) {
    const Shape& s = p->shape();
    if (s.rank() != 4 || s.n() != s0.n() || s.h() != s0.h() || s.w() != s0.w()) {
      throw ShapeError("concat: " + s.str() + " does not match " + s0.str() + " outside the channel axis");
    }
    channels += s.c();
  }
  const int64_t plane = s0.h() * s0.w();
  Tensor<T> out(Shape::nchw(s0.n(), channels, s0.h(), s0.w()));
  T* dst = out.ptr();
  for (int64_t n = 0; n < s0.n(); ++n) {
    for (const Tensor<T>* p : parts) {
      const int64_t len = p->shape().c() * plane;
      const T* src = p->ptr() + n * len;
      dst = std::copy(src, src + len, dst);
    }
  }
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int64_t begin, int64_t end) {
  const Shape& s = x.shape();
  if (s.rank() != 4 || begin < 0 || end > s.c() || begin > end) {
    throw ShapeError("slice: channel range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + s.str());
  }
  const int64_t plane = s.h() * s.w();
  Tensor<T> out(Shape::nchw(s.n(), end - begin, s.h(), s.w()));
  T* dst = out.ptr();
  for (int64_t n = 0; n < s.n(); ++n) {
    const T* src = x.ptr() + (n * s.c() + begin) * plane;
    dst = std::copy(src, src + (end - begin) * plane, dst);
  }
  return out;
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  std::vector<const Tensor<T>*> values;
  std::vector<int> ids;
  std::vector<int64_t> offsets{0};
  for (const auto& p : parts) {
    values.push_back(&p.value());
    ids.push_back(p.id());
  }
  Tensor<T> out = concat_channels(values);
  for (const auto* v : values) offsets.push_back(offsets.back() + v->shape().c());
  return parts.front().tape()->record(std::move(out), parts, [ids, offsets](Tape<T>& tape, const Tensor<T>& g) {
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!tape.requires_grad(ids[i])) continue;
      const Tensor<T> part = slice_channels(g, offsets[i], offsets[i + 1]);
      vec_axpy(T(1), part.ptr(), tape.grad_for(ids[i]).ptr(), part.numel());
    }
  });
}

template <typename T>
Var<T> slice_channels(Var<T> x, int64_t begin, int64_t end) {
  Tensor<T> out = slice_channels(x.value(), begin, end);
  const int ix = x.id();
  const Shape in_shape = x.shape();
  return x.tape()->record(std::move(out), {x}, [ix, in_shape, begin, end](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    const int64_t plane = in_shape.h() * in_shape.w();
    const int64_t len = (end - begin) * plane;
    for (int64_t n = 0; n < in_shape.n(); ++n) {
      vec_axpy(T(1), g.ptr() + n * len, gx.ptr() + (n * in_shape.c() + begin) * plane, len);
    }
  });
}

template <typename T>
Var<T> reduce(ReduceKind kind, Var<T> x, const std::vector<int>& axes) {
  const Shape& s = x.shape();
  std::array<bool, 4> reduced{};
  for (int a : axes) {
    if (a < 0 || a >= s.rank()) {
      throw ShapeError("reduce: axis " + std::to_string(a) + " out of range for " + s.str());
    }
    reduced[static_cast<size_t>(4 - s.rank() + a)] = true;
  }
  std::array<int64_t, Shape::kMaxRank> out_dims{};
  int64_t count = 1;
  for (int i = 0; i < s.rank(); ++i) {
    const bool r = reduced[static_cast<size_t>(4 - s.rank() + i)];
    out_dims[static_cast<size_t>(i)] = r ? 1 : s[i];
    if (r) count *= s[i];
  }
  const Shape out_shape(std::span<const int64_t>(out_dims.data(), static_cast<size_t>(s.rank())));
  const Dims4 fd = pad4(s);
  const auto ost = broadcast_strides(pad4(out_shape), fd);

  const int64_t out_n = out_shape.numel();
  Tensor<T> out(out_shape);
  std::vector<int64_t> argmax;
  const T* px = x.value().ptr();
  if (kind == ReduceKind::kMax) {
    argmax.assign(static_cast<size_t>(out_n), -1);
    for_each_broadcast(fd, ost, [&](int64_t i, int64_t j) {
      auto& am = argmax[static_cast<size_t>(j)];
      if (am < 0 || px[i] > px[am]) am = i;
    });
    for (int64_t j = 0; j < out_n; ++j) out[j] = px[argmax[static_cast<size_t>(j)]];
  } else {
    std::vector<double> acc(static_cast<size_t>(out_n), 0.0);
    for_each_broadcast(fd, ost, [&](int64_t i, int64_t j) { acc[static_cast<size_t>(j)] += px[i]; });
    const double div = kind == ReduceKind::kMean ? static_cast<double>(count) : 1.0;
    for (int64_t j = 0; j < out_n; ++j) out[j] = static_cast<T>(acc[static_cast<size_t>(j)] / div);
  }

  const int ix = x.id();
  return x.tape()->record(std::move(out), {x}, [=](Tape<T>& tape, const Tensor<T>& g) {
    Tensor<T>& gx = tape.grad_for(ix);
    T* pg = gx.ptr();
    if (kind == ReduceKind::kMax) {
      for (int64_t j = 0; j < out_n; ++j) pg[argmax[static_cast<size_t>(j)]] += g[j];
      return;
    }
    const T f = kind == ReduceKind::kMean ? T(1) / static_cast<T>(count) : T(1);
    for_each_broadcast(fd, ost, [&](int64_t i, int64_t j) { pg[i] += f * g[j]; });
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  if (shape.numel() != x.shape().numel()) {
    throw ShapeError("reshape: " + x.shape().str() + " has a different element count than " + shape.str());
  }
  const int ix = x.id();
  const Shape from = x.shape();
  return x.tape()->record(x.value().reshaped(shape), {x}, [ix, from](Tape<T>& tape, const Tensor<T>& g) {
    if (!tape.requires_grad(ix)) return;
    Tensor<T>& gx = tape.grad_for(ix);
    const auto src = g.data();
    auto dst = gx.data();
    for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  });
}

template <typename T>
Var<T> sum_all(Var<T> x) {
  std::vector<int> axes(static_cast<size_t>(x.shape().rank()));
  for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int>(i);
  return reshape(reduce(ReduceKind::kSum, x, axes), Shape{1});
}

template <typename T>
Var<T> mean_all(Var<T> x) {
  std::vector<int> axes(static_cast<size_t>(x.shape().rank()));
  for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int>(i);
  return reshape(reduce(ReduceKind::kMean, x, axes), Shape{1});
}

template <typename T>
Var<T> sum_squares(Var<T> x) {
  double acc = 0.0;
  for (T v : x.value().data()) acc += static_cast<double>(v) * static_cast<double>(v);
  Tensor<T> out(Shape{1}, static_cast<T>(acc));
  const int ix = x.id();
  return x.tape()->record(std::move(out), {x}, [ix](Tape<T>& tape, const Tensor<T>& g) {
    vec_axpy(T(2) * g[0], tape.value(ix).ptr(), tape.grad_for(ix).ptr(), tape.value(ix).numel());
  });
}

template <typename T>
Var<T> sqrt(Var<T> x) {
  Tensor<T> out = x.value();
  for (T& v : out.data()) v = std::sqrt(v);
  const int ix = x.id();
  const int iy = static_cast<int>(x.tape()->size());
  return x.tape()->record(std::move(out), {x}, [ix, iy](Tape<T>& tape, const Tensor<T>& g) {
    const Tensor<T>& y = tape.value(iy);
    Tensor<T>& gx = tape.grad_for(ix);
    for (int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i] / (T(2) * y[i]);
  });
}

#define DCANET_INSTANTIATE_OPS(T)                                                         \
  template Var<T> elementwise(ElementwiseKind, Var<T>, Var<T>);                           \
  template Var<T> scale(Var<T>, T);                                                       \
  template Var<T> add_scalar(Var<T>, T);                                                  \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                            \
  template Var<T> slice_channels(Var<T>, int64_t, int64_t);                               \
  template Var<T> reduce(ReduceKind, Var<T>, const std::vector<int>&);                    \
  template Var<T> reshape(Var<T>, Shape);                                                 \
  template Var<T> sum_all(Var<T>);                                                        \
  template Var<T> mean_all(Var<T>);                                                       \
  template Var<T> sum_squares(Var<T>);                                                    \
  template Var<T> sqrt(Var<T>);                                                           \
  template Tensor<T> concat_channels(const std::vector<const Tensor<T>*>&);                \
  template Tensor<T> slice_channels(const Tensor<T>&, int64_t, int64_t);

DCANET_INSTANTIATE_OPS(float)
DCANET_INSTANTIATE_OPS(double)

}  // namespace dcanet
