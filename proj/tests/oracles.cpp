#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "weft/rng.hpp"

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

double lambda_smith(double a2, double cos_t) {
  const double sin2 = 1.0 - cos_t * cos_t;
  const double tan2 = sin2 / (cos_t * cos_t);
  return (-1.0 + std::sqrt(1.0 + a2 * tan2)) / 2.0;
}

double ggx_pixel(const weft::MapStack& m, int x, int y, const weft::Vec3& l,
                 const weft::Vec3& v) {
  return ggx(m.normals.at(x, y), m.specular.at(x, y, 0), m.roughness.at(x, y, 0), l, v);
}

double naive_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double naive_std(const std::vector<double>& v) {
  const double m = naive_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

double ggx(const weft::Vec3& n, double spec, double rough, const weft::Vec3& l,
           const weft::Vec3& v) {
  const double nl = dot(n, l);
  const double nv = dot(n, v);
  if (nl <= 0.0 || nv <= 0.0) return 0.0;
  const weft::Vec3 hsum = l + v;
  if (norm(hsum) < 1e-12) return 0.0;
  const weft::Vec3 h = normalized(hsum);

  const double alpha = rough * rough;
  const double a2 = alpha * alpha;
  const double nh = dot(n, h);
  const double den = nh * nh * (a2 - 1.0) + 1.0;
  const double d = a2 / (kPi * den * den);

  const double g = 1.0 / (1.0 + lambda_smith(a2, nl) + lambda_smith(a2, nv));

  const double f0 = 0.08 * spec;
  const double hv = std::clamp(dot(h, v), 0.0, 1.0);
  const double f = f0 + (1.0 - f0) * std::pow(1.0 - hv, 5.0);

  const double out = d * f * g / (4.0 * nl * nv);
  return std::isfinite(out) && out > 0.0 ? out : 0.0;
}

weft::ImageGrid shade(const weft::MapStack& m, const weft::ImageGrid& albedo,
                      const weft::Vec3& l, const weft::Vec3& v) {
  weft::ImageGrid out(albedo.width, albedo.height, albedo.channels, albedo.ppi);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const double s = ggx_pixel(m, x, y, l, v);
      for (int c = 0; c < out.channels; ++c)
        out.at(x, y, c) = albedo.at(x, y, c) / kPi + s;
    }
  return out;
}

double brdf_distance(const weft::MapStack& gt, const weft::MapStack& est,
                     const weft::RenderSet& s, const weft::ImageGrid& k,
                     std::vector<double>* map_out) {
  const int w = gt.width();
  const int h = gt.height();
  std::vector<double> map(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (const auto& [l, v] : s.pairs) {
        const double cosl = std::clamp(l.d.z, 0.0, 1.0);
        const double fg = k.at(x, y, 0) / kPi + ggx_pixel(gt, x, y, l.d, v.d);
        const double fe = k.at(x, y, 0) / kPi + ggx_pixel(est, x, y, l.d, v.d);
        const double diff = fg - fe;
        acc += std::cbrt(cosl * cosl * diff * diff);
      }
      map[static_cast<std::size_t>(y) * w + x] =
          std::sqrt(acc / static_cast<double>(s.pairs.size()));
    }
  if (map_out) *map_out = map;
  return naive_mean(map);
}

double homogeneity(const weft::ImageGrid& img, int box) {
  const int w = img.width;
  const int h = img.height;
  const int r = box / 2;
  std::vector<double> filt(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = std::clamp(x + dx, 0, w - 1);
          const int sy = std::clamp(y + dy, 0, h - 1);
          s += img.at(sx, sy, 0);
        }
      filt[static_cast<std::size_t>(y) * w + x] = s / (box * box);
    }
  auto at = [&](int x, int y) { return filt[static_cast<std::size_t>(y) * w + x]; };

  const int dxs[4] = {box, -box, 0, 0};
  const int dys[4] = {0, 0, box, -box};
  double total = 0.0;
  for (int d = 0; d < 4; ++d) {
    double acc = 0.0;
    int count = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int sx = x + dxs[d];
        const int sy = y + dys[d];
        if (sx < 0 || sx >= w || sy < 0 || sy >= h) continue;
        acc += std::abs(at(sx, sy) - at(x, y));
        ++count;
      }
    total += acc / count;
  }
  return total / 4.0;
}

double mutual_information(const weft::ImageGrid& a, const weft::ImageGrid& b, int bins) {
  auto bin_of = [&](double v) {
    int i = static_cast<int>(v * bins);
    if (i < 0) i = 0;
    if (i >= bins) i = bins - 1;
    return i;
  };
  std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
  const std::size_t n = a.data.size();
  for (std::size_t i = 0; i < n; ++i)
    joint[static_cast<std::size_t>(bin_of(a.data[i])) * bins + bin_of(b.data[i])] += 1.0;
  for (double& v : joint) v /= static_cast<double>(n);

  std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) {
      pa[i] += joint[static_cast<std::size_t>(i) * bins + j];
      pb[j] += joint[static_cast<std::size_t>(i) * bins + j];
    }
  double mi = 0.0;
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) {
      const double p = joint[static_cast<std::size_t>(i) * bins + j];
      if (p > 0.0) mi += p * std::log(p / (pa[i] * pb[j]));
    }
  return mi < 0.0 ? 0.0 : mi;
}

PerMapStd per_map_std(const weft::SampleSet& u) {
  const int w = u.samples.front().width();
  const int h = u.samples.front().height();
  const int n = u.n();
  PerMapStd out;
  out.normals.resize(static_cast<std::size_t>(w) * h);
  out.spec.resize(out.normals.size());
  out.rough.resize(out.normals.size());
  std::vector<double> vx(n), vy(n), vz(n), vs(n), vr(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      for (int j = 0; j < n; ++j) {
        const weft::Vec3 nrm = u.samples[j].normals.at(x, y);
        vx[j] = nrm.x;
        vy[j] = nrm.y;
        vz[j] = nrm.z;
        vs[j] = u.samples[j].specular.at(x, y, 0);
        vr[j] = u.samples[j].roughness.at(x, y, 0);
      }
      const double sx = naive_std(vx), sy = naive_std(vy), sz = naive_std(vz);
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      out.normals[p] = std::sqrt(sx * sx + sy * sy + sz * sz);
      out.spec[p] = naive_std(vs);
      out.rough[p] = naive_std(vr);
    }
  return out;
}

double sigma_brdf(const weft::SampleSet& u, const weft::RenderSet& s,
                  const weft::ImageGrid& k, double eps, std::vector<double>* map_out) {
  const int w = u.samples.front().width();
  const int h = u.samples.front().height();
  const int n = u.n();
  std::vector<double> map(static_cast<std::size_t>(w) * h);
  std::vector<double> vals(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (const auto& [l, v] : s.pairs) {
        const double cosl = std::clamp(l.d.z, 0.0, 1.0);
        for (int j = 0; j < n; ++j)
          vals[j] = (k.at(x, y, 0) / kPi + ggx_pixel(u.samples[j], x, y, l.d, v.d)) * cosl;
        acc += std::cbrt(naive_std(vals));
      }
      const double inner = std::sqrt(acc) / static_cast<double>(s.pairs.size());
      map[static_cast<std::size_t>(y) * w + x] = std::log(std::max(inner, eps));
    }
  if (map_out) *map_out = map;
  return naive_mean(map);
}

weft::MapStack random_stack(int w, int h, std::uint64_t seed) {
  weft::Rng rng(seed);
  weft::MapStack m = weft::flat_stack(w, h, 0.5, 0.5);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // Tilt capped at 60 degrees keeps lobes finite under any pair geometry.
      const double theta = rng.uniform(0.0, kPi / 3.0);
      const double phi = rng.uniform(0.0, 2.0 * kPi);
      m.normals.at(x, y) = {std::sin(theta) * std::cos(phi),
                            std::sin(theta) * std::sin(phi), std::cos(theta)};
      m.specular.at(x, y, 0) = rng.uniform();
      m.roughness.at(x, y, 0) = rng.uniform(0.05, 0.95);
    }
  return m;
}

weft::ImageGrid random_image(int w, int h, int channels, std::uint64_t seed) {
  weft::Rng rng(seed);
  weft::ImageGrid img(w, h, channels);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace oracle
