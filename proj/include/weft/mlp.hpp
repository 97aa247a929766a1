#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "weft/rng.hpp"

namespace weft::mlp {

// Scalar type is a template parameter: production nets run float32, the
// finite-difference gradient check instantiates double.

template <typename T>
struct Dense {
  int in = 0;
  int out = 0;
  std::vector<T> w;  // row-major out x in
  std::vector<T> b;

  void resize(int in_, int out_) {
    in = in_;
    out = out_;
    w.assign(static_cast<std::size_t>(in) * out, T(0));
    b.assign(out, T(0));
  }
};

template <typename T>
void affine(const Dense<T>& d, const T* x, T* y) {
  for (int o = 0; o < d.out; ++o) {
    T acc = d.b[o];
    const T* row = &d.w[static_cast<std::size_t>(o) * d.in];
    for (int i = 0; i < d.in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

// Shared tanh trunk with a dropout boundary feeding three linear heads:
// 2 raw values for normals, 1 pre-sigmoid each for specular and roughness.
template <typename T>
struct Net {
  std::vector<Dense<T>> trunk;
  Dense<T> head_n;
  Dense<T> head_s;
  Dense<T> head_r;

  int input_dim() const { return trunk.empty() ? 0 : trunk.front().in; }
  int trunk_dim() const { return trunk.empty() ? 0 : trunk.back().out; }

  void resize(int input, const std::vector<int>& hidden) {
    if (hidden.empty()) throw std::invalid_argument("net needs at least one hidden layer");
    trunk.resize(hidden.size());
    int prev = input;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      trunk[i].resize(prev, hidden[i]);
      prev = hidden[i];
    }
    head_n.resize(prev, 2);
    head_s.resize(prev, 1);
    head_r.resize(prev, 1);
  }

  void fill_zero() {
    for (auto& l : trunk) {
      std::fill(l.w.begin(), l.w.end(), T(0));
      std::fill(l.b.begin(), l.b.end(), T(0));
    }
    for (Dense<T>* h : {&head_n, &head_s, &head_r}) {
      std::fill(h->w.begin(), h->w.end(), T(0));
      std::fill(h->b.begin(), h->b.end(), T(0));
    }
  }
};

template <typename T>
void xavier_init(Net<T>& net, Rng& rng) {
  auto init = [&rng](Dense<T>& d) {
    const double a = std::sqrt(6.0 / (d.in + d.out));
    for (auto& w : d.w) w = static_cast<T>(rng.uniform(-a, a));
    std::fill(d.b.begin(), d.b.end(), T(0));
  };
  for (auto& l : net.trunk) init(l);
  init(net.head_n);
  init(net.head_s);
  init(net.head_r);
}

// Every learnable scalar in declaration order; used by serialization and the
// gradient check.
template <typename T>
std::vector<T*> parameters(Net<T>& net) {
  std::vector<T*> out;
  auto add = [&out](Dense<T>& d) {
    for (auto& w : d.w) out.push_back(&w);
    for (auto& b : d.b) out.push_back(&b);
  };
  for (auto& l : net.trunk) add(l);
  add(net.head_n);
  add(net.head_s);
  add(net.head_r);
  return out;
}

template <typename T>
std::vector<const T*> parameters(const Net<T>& net) {
  std::vector<const T*> out;
  auto add = [&out](const Dense<T>& d) {
    for (const auto& w : d.w) out.push_back(&w);
    for (const auto& b : d.b) out.push_back(&b);
  };
  for (const auto& l : net.trunk) add(l);
  add(net.head_n);
  add(net.head_s);
  add(net.head_r);
  return out;
}

// Dropout mask for one trunk unit, derived from (seed, pixel, unit) alone so
// sampling order never changes the masks.
inline bool dropout_keep(std::uint64_t seed, std::uint64_t pixel, int unit, double rate) {
  const std::uint64_t h = hash_combine(hash_combine(seed, pixel), static_cast<std::uint64_t>(unit));
  return u64_to_unit_double(h) >= rate;
}

template <typename T>
T sigmoid(T a) {
  return T(1) / (T(1) + std::exp(-a));
}

struct HeadOutputs {
  double nx = 0.0, ny = 0.0, nz = 1.0;
  double spec = 0.0;
  double rough = 0.0;
};

constexpr double kNormalZMin = 1e-4;

// (u, v) -> unit normal with z >= kNormalZMin.
template <typename T>
void normal_from_uv(T u, T v, T& nx, T& ny, T& nz) {
  const T q = u * u + v * v;
  const T z0 = q < T(1) ? std::sqrt(T(1) - q) : T(0);
  const T z1 = z0 > T(kNormalZMin) ? z0 : T(kNormalZMin);
  const T len = std::sqrt(q + z1 * z1);
  nx = u / len;
  ny = v / len;
  nz = z1 / len;
}

// Forward state for one pixel, kept for the backward pass.
template <typename T>
struct PixelTrace {
  std::vector<std::vector<T>> h;  // post-tanh activations per trunk layer
  std::vector<T> dropped;         // per-head masked trunk views, 3 * trunk_dim
  T u = T(0), v = T(0);
  T s_pre = T(0), r_pre = T(0);
};

// mask: per-unit multipliers at the trunk-head boundary, 3 * trunk_dim long;
// each head reads its own slice (normals, spec, rough in that order), so the
// heads drop trunk units independently. {0,1} entries when sampling, the
// uniform keep probability in deterministic mode.
template <typename T>
HeadOutputs forward_pixel(const Net<T>& net, const T* x, const T* mask, PixelTrace<T>* trace) {
  thread_local std::vector<T> buf_a, buf_b;
  const T* cur = x;
  std::vector<std::vector<T>> kept;
  if (trace) kept.resize(net.trunk.size());
  buf_a.resize(net.trunk.front().out);
  for (std::size_t li = 0; li < net.trunk.size(); ++li) {
    const Dense<T>& l = net.trunk[li];
    buf_b.resize(l.out);
    affine(l, cur, buf_b.data());
    for (int o = 0; o < l.out; ++o) buf_b[o] = std::tanh(buf_b[o]);
    if (trace) kept[li] = buf_b;
    buf_a.swap(buf_b);
    cur = buf_a.data();
  }
  const int td = net.trunk_dim();
  std::vector<T> dropped(3 * td);
  for (int o = 0; o < 3 * td; ++o) dropped[o] = cur[o % td] * mask[o];

  T raw_n[2], raw_s[1], raw_r[1];
  affine(net.head_n, dropped.data(), raw_n);
  affine(net.head_s, dropped.data() + td, raw_s);
  affine(net.head_r, dropped.data() + 2 * td, raw_r);

  HeadOutputs out;
  T nx, ny, nz;
  normal_from_uv(raw_n[0], raw_n[1], nx, ny, nz);
  out.nx = static_cast<double>(nx);
  out.ny = static_cast<double>(ny);
  out.nz = static_cast<double>(nz);
  out.spec = static_cast<double>(sigmoid(raw_s[0]));
  out.rough = static_cast<double>(sigmoid(raw_r[0]));

  if (trace) {
    trace->h = std::move(kept);
    trace->dropped = std::move(dropped);
    trace->u = raw_n[0];
    trace->v = raw_n[1];
    trace->s_pre = raw_s[0];
    trace->r_pre = raw_r[0];
  }
  return out;
}

// Post-tanh trunk output, no dropout applied.
template <typename T>
void trunk_forward(const Net<T>& net, const T* x, std::vector<T>& out) {
  thread_local std::vector<T> tmp;
  const T* cur = x;
  for (std::size_t li = 0; li < net.trunk.size(); ++li) {
    const Dense<T>& l = net.trunk[li];
    tmp.resize(l.out);
    affine(l, cur, tmp.data());
    for (int o = 0; o < l.out; ++o) tmp[o] = std::tanh(tmp[o]);
    out.swap(tmp);
    cur = out.data();
  }
}

// dropped: 3 * trunk_dim, one masked trunk view per head.
template <typename T>
HeadOutputs heads_forward(const Net<T>& net, const T* dropped) {
  const int td = net.trunk_dim();
  T raw_n[2], raw_s[1], raw_r[1];
  affine(net.head_n, dropped, raw_n);
  affine(net.head_s, dropped + td, raw_s);
  affine(net.head_r, dropped + 2 * td, raw_r);
  HeadOutputs out;
  T nx, ny, nz;
  normal_from_uv(raw_n[0], raw_n[1], nx, ny, nz);
  out.nx = static_cast<double>(nx);
  out.ny = static_cast<double>(ny);
  out.nz = static_cast<double>(nz);
  out.spec = static_cast<double>(sigmoid(raw_s[0]));
  out.rough = static_cast<double>(sigmoid(raw_r[0]));
  return out;
}

struct PixelTarget {
  double nx = 0.0, ny = 0.0, nz = 1.0;
  double spec = 0.0;
  double rough = 0.0;
};

struct LossWeights {
  double normals = 1.0;
  double spec = 1.0;
  double rough = 1.0;
};

inline double pixel_loss_value(const HeadOutputs& out, const PixelTarget& t,
                               const LossWeights& lw) {
  const double ln =
      (std::abs(out.nx - t.nx) + std::abs(out.ny - t.ny) + std::abs(out.nz - t.nz)) / 3.0;
  return lw.normals * ln + lw.spec * std::abs(out.spec - t.spec) +
         lw.rough * std::abs(out.rough - t.rough);
}

namespace detail {
inline double sgn(double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }
}

// Accumulates dLoss/dparams for one pixel into grad. x and mask must match
// the forward call that produced trace/out.
template <typename T>
void backward_pixel(const Net<T>& net, const T* x, const T* mask, const PixelTrace<T>& trace,
                    const HeadOutputs& out, const PixelTarget& t, const LossWeights& lw,
                    Net<T>& grad) {
  // Loss gradients w.r.t. the map outputs.
  const double gn_scale = lw.normals / 3.0;
  double dn[3] = {gn_scale * detail::sgn(out.nx - t.nx), gn_scale * detail::sgn(out.ny - t.ny),
                  gn_scale * detail::sgn(out.nz - t.nz)};

  // Through the normalization chain: w = (u, v, z1), n = w / |w|.
  const double u = static_cast<double>(trace.u);
  const double v = static_cast<double>(trace.v);
  const double q = u * u + v * v;
  const double z0 = q < 1.0 ? std::sqrt(1.0 - q) : 0.0;
  const bool clamped = !(z0 > kNormalZMin);
  const double z1 = clamped ? kNormalZMin : z0;
  const double len = std::sqrt(q + z1 * z1);
  const double n[3] = {out.nx, out.ny, out.nz};
  const double gdotn = dn[0] * n[0] + dn[1] * n[1] + dn[2] * n[2];
  double dw[3];
  for (int i = 0; i < 3; ++i) dw[i] = (dn[i] - n[i] * gdotn) / len;
  const double dz_du = clamped ? 0.0 : -u / z0;
  const double dz_dv = clamped ? 0.0 : -v / z0;
  T draw_n[2] = {static_cast<T>(dw[0] + dw[2] * dz_du), static_cast<T>(dw[1] + dw[2] * dz_dv)};

  const double s = out.spec;
  const double r = out.rough;
  T draw_s[1] = {static_cast<T>(lw.spec * detail::sgn(s - t.spec) * s * (1.0 - s))};
  T draw_r[1] = {static_cast<T>(lw.rough * detail::sgn(r - t.rough) * r * (1.0 - r))};

  const int td = net.trunk_dim();
  thread_local std::vector<T> ddropped;
  ddropped.assign(3 * static_cast<std::size_t>(td), T(0));
  auto head_back = [&](const Dense<T>& head, Dense<T>& ghead, const T* draw, int nout,
                       int off) {
    for (int o = 0; o < nout; ++o) {
      const T g = draw[o];
      T* grow = &ghead.w[static_cast<std::size_t>(o) * head.in];
      const T* wrow = &head.w[static_cast<std::size_t>(o) * head.in];
      for (int i = 0; i < head.in; ++i) {
        grow[i] += g * trace.dropped[off + i];
        ddropped[off + i] += g * wrow[i];
      }
      ghead.b[o] += g;
    }
  };
  head_back(net.head_n, grad.head_n, draw_n, 2, 0);
  head_back(net.head_s, grad.head_s, draw_s, 1, td);
  head_back(net.head_r, grad.head_r, draw_r, 1, 2 * td);

  // Through each head's dropout slice and the tanh trunk.
  thread_local std::vector<T> delta;
  delta.resize(td);
  for (int o = 0; o < td; ++o) {
    const T dh = ddropped[o] * mask[o] + ddropped[td + o] * mask[td + o] +
                 ddropped[2 * td + o] * mask[2 * td + o];
    const T hv = trace.h.back()[o];
    delta[o] = dh * (T(1) - hv * hv);
  }
  thread_local std::vector<T> dinput;
  for (int li = static_cast<int>(net.trunk.size()) - 1; li >= 0; --li) {
    const Dense<T>& l = net.trunk[li];
    Dense<T>& gl = grad.trunk[li];
    const T* input = li == 0 ? x : trace.h[li - 1].data();
    if (li > 0) dinput.assign(l.in, T(0));
    for (int o = 0; o < l.out; ++o) {
      const T g = delta[o];
      T* grow = &gl.w[static_cast<std::size_t>(o) * l.in];
      const T* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
      if (li > 0) {
        for (int i = 0; i < l.in; ++i) {
          grow[i] += g * input[i];
          dinput[i] += g * wrow[i];
        }
      } else {
        for (int i = 0; i < l.in; ++i) grow[i] += g * input[i];
      }
      gl.b[o] += g;
    }
    if (li > 0) {
      const auto& hprev = trace.h[li - 1];
      delta.resize(l.in);
      for (int i = 0; i < l.in; ++i) delta[i] = dinput[i] * (T(1) - hprev[i] * hprev[i]);
    }
  }
}

// Mean loss over a batch; when grad is non-null it receives d(mean loss)/dparams.
// masks: one multiplier vector per batch entry.
template <typename T>
double batch_loss(const Net<T>& net, const std::vector<std::vector<T>>& xs,
                  const std::vector<PixelTarget>& targets,
                  const std::vector<std::vector<T>>& masks, const LossWeights& lw,
                  Net<T>* grad) {
  if (xs.size() != targets.size() || xs.size() != masks.size() || xs.empty())
    throw std::invalid_argument("batch_loss: inconsistent batch");
  if (grad) grad->fill_zero();
  double total = 0.0;
  PixelTrace<T> trace;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const HeadOutputs out =
        forward_pixel(net, xs[i].data(), masks[i].data(), grad ? &trace : nullptr);
    total += pixel_loss_value(out, targets[i], lw);
    if (grad) backward_pixel(net, xs[i].data(), masks[i].data(), trace, out, targets[i], lw, *grad);
  }
  const double inv = 1.0 / static_cast<double>(xs.size());
  if (grad) {
    auto ps = parameters(*grad);
    for (T* p : ps) *p = static_cast<T>(*p * inv);
  }
  return total * inv;
}

}  // namespace weft::mlp
