#include "weft/render.hpp"

#include <cmath>

#include "weft/rng.hpp"

namespace weft {

namespace {

constexpr double kPi = 3.14159265358979323846;

double halton(std::uint64_t i, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

double frac(double x) { return x - std::floor(x); }

// Cosine-weighted hemisphere point from two unit uniforms.
Vec3 cosine_dir(double u1, double u2) {
  const double z = std::sqrt(1.0 - u1);
  const double s = std::sqrt(u1);
  const double a = 2.0 * kPi * u2;
  return {s * std::cos(a), s * std::sin(a), z};
}

}  // namespace

Direction direction_from(const Vec3& v) {
  const double n = norm(v);
  if (n < 1e-12 || !(v.z > 0.0))
    throw std::invalid_argument("direction must point into the upper hemisphere");
  return Direction(v * (1.0 / n));
}

double ggx_specular(const Vec3& n, double spec, double rough, const Direction& l,
                    const Direction& v) {
  const double nl = dot(n, l.d);
  const double nv = dot(n, v.d);
  if (nl <= 0.0 || nv <= 0.0) return 0.0;

  const Vec3 hv = l.d + v.d;
  const double hn = norm(hv);
  if (hn < 1e-12) return 0.0;
  const Vec3 h = hv * (1.0 / hn);

  const double a = rough * rough;
  const double a2 = a * a;

  const double nh = dot(n, h);
  const double d_den = nh * nh * (a2 - 1.0) + 1.0;
  const double d = a2 / (kPi * d_den * d_den);

  // Height-correlated Smith visibility: G / (4 nl nv) folded together.
  const double lv = nl * std::sqrt(nv * nv * (1.0 - a2) + a2);
  const double ll = nv * std::sqrt(nl * nl * (1.0 - a2) + a2);
  if (lv + ll <= 0.0) return 0.0;
  const double vis = 0.5 / (lv + ll);

  const double f0 = 0.08 * spec;
  const double c = dot(h, v.d);
  const double m = 1.0 - (c < 0.0 ? 0.0 : (c > 1.0 ? 1.0 : c));
  const double m2 = m * m;
  const double f = f0 + (1.0 - f0) * m2 * m2 * m;

  const double out = d * f * vis;
  return std::isfinite(out) && out > 0.0 ? out : 0.0;
}

ImageGrid shade(const MapStack& m, const ImageGrid& albedo, const Direction& l,
                const Direction& v) {
  if (albedo.width != m.width() || albedo.height != m.height())
    throw std::invalid_argument("shade: albedo dimensions must match the stack");
  ImageGrid out(albedo.width, albedo.height, albedo.channels, albedo.ppi);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const double s = ggx_specular(m.normals.at(x, y), m.specular.at(x, y, 0),
                                    m.roughness.at(x, y, 0), l, v);
      for (int c = 0; c < out.channels; ++c)
        out.at(x, y, c) = albedo.at(x, y, c) / kPi + s;
    }
  }
  return out;
}

RenderSet sample_render_set(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("render set needs at least one pair");
  Rng rng(seed);
  const double ol1 = rng.uniform();
  const double ol2 = rng.uniform();
  const double ov1 = rng.uniform();
  const double ov2 = rng.uniform();
  RenderSet s;
  s.pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const Vec3 l = cosine_dir(frac(halton(i, 2) + ol1), frac(halton(i, 3) + ol2));
    const Vec3 v = cosine_dir(frac(halton(i, 5) + ov1), frac(halton(i, 7) + ov2));
    s.pairs.emplace_back(Direction(l), Direction(v));
  }
  return s;
}

const std::vector<Direction>& scan_light_set() {
  static const std::vector<Direction> lights = [] {
    std::vector<Direction> out;
    out.reserve(32);
    for (int i = 1; i <= 32; ++i)
      out.push_back(Direction(cosine_dir(halton(i, 2), halton(i, 3))));
    return out;
  }();
  return lights;
}

ImageGrid render_scan(const MapStack& m, const ImageGrid& base_color) {
  if (base_color.width != m.width() || base_color.height != m.height())
    throw std::invalid_argument("render_scan: base color dimensions must match the stack");
  const auto& lights = scan_light_set();
  const Direction view;  // zenith
  ImageGrid acc(base_color.width, base_color.height, base_color.channels, base_color.ppi);
  for (const Direction& l : lights) {
    const ImageGrid img = shade(m, base_color, l, view);
    for (int y = 0; y < acc.height; ++y) {
      for (int x = 0; x < acc.width; ++x) {
        const double w = dot(m.normals.at(x, y), l.d);
        if (w <= 0.0) continue;
        for (int c = 0; c < acc.channels; ++c) acc.at(x, y, c) += img.at(x, y, c) * w;
      }
    }
  }
  const double scale = kPi / static_cast<double>(lights.size());
  for (auto& v : acc.data) {
    v *= scale;
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
  }
  return acc;
}

}  // namespace weft
