#include "weft/uncertainty.hpp"

#include <cmath>

#include "weft/numeric.hpp"

namespace weft {

namespace {

// Population std of v[0..n); exactly 0 for a constant slice so that
// zero-variance sample sets floor to log(eps) with no rounding dust.
double population_std(const double* v, int n) {
  double lo = v[0], hi = v[0];
  for (int i = 1; i < n; ++i) {
    if (v[i] < lo) lo = v[i];
    if (v[i] > hi) hi = v[i];
  }
  if (lo == hi) return 0.0;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += v[i];
  mean /= n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = v[i] - mean;
    acc += d * d;
  }
  return std::sqrt(acc / n);
}

}  // namespace

SampleSet mc_sample(const PredictorWeights& w, const ImageGrid& input, int n,
                    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("mc_sample: n must be >= 1");
  SampleSet u;
  u.samples = predict_samples(w, input, n, seed);
  u.input = input;
  u.dropout_rate = w.config.dropout_rate;
  return u;
}

PerMapStd per_map_std(const SampleSet& u) {
  if (u.n() < 2) throw std::invalid_argument("per_map_std: need at least 2 samples");
  const int n = u.n();
  const int w = u.samples[0].width();
  const int h = u.samples[0].height();
  PerMapStd out;
  out.normals = ImageGrid(w, h, 1, u.input.ppi);
  out.spec = ImageGrid(w, h, 1, u.input.ppi);
  out.rough = ImageGrid(w, h, 1, u.input.ppi);

  std::vector<double> vx(n), vy(n), vz(n), vs(n), vr(n);
  const std::size_t npx = static_cast<std::size_t>(w) * h;
  for (std::size_t p = 0; p < npx; ++p) {
    for (int j = 0; j < n; ++j) {
      const Vec3& nv = u.samples[j].normals.vectors[p];
      vx[j] = nv.x;
      vy[j] = nv.y;
      vz[j] = nv.z;
      vs[j] = u.samples[j].specular.data[p];
      vr[j] = u.samples[j].roughness.data[p];
    }
    const double sx = population_std(vx.data(), n);
    const double sy = population_std(vy.data(), n);
    const double sz = population_std(vz.data(), n);
    out.normals.data[p] = std::sqrt(sx * sx + sy * sy + sz * sz);
    out.spec.data[p] = population_std(vs.data(), n);
    out.rough.data[p] = population_std(vr.data(), n);
  }
  return out;
}

std::pair<double, ImageGrid> sigma_brdf(const SampleSet& u, const RenderSet& s,
                                        const ImageGrid& k, double eps) {
  if (u.n() < 2) throw std::invalid_argument("sigma_brdf: need at least 2 samples");
  if (s.pairs.empty()) throw std::invalid_argument("sigma_brdf: empty render set");
  const int n = u.n();
  const int w = u.samples[0].width();
  const int h = u.samples[0].height();
  if (k.channels != 1 || k.width != w || k.height != h)
    throw std::invalid_argument("sigma_brdf: albedo must be a matching 1-channel image");

  const std::size_t npx = static_cast<std::size_t>(w) * h;
  std::vector<double> acc(npx, 0.0);
  std::vector<ImageGrid> renders(n);
  std::vector<double> vals(n);
  for (const auto& [l, v] : s.pairs) {
    const double c = cosine_weight(l);
    for (int j = 0; j < n; ++j) renders[j] = shade(u.samples[j], k, l, v);
    for (std::size_t p = 0; p < npx; ++p) {
      for (int j = 0; j < n; ++j) vals[j] = renders[j].data[p] * c;
      acc[p] += std::cbrt(population_std(vals.data(), n));
    }
  }

  ImageGrid map(w, h, 1, u.input.ppi);
  const double inv_s = 1.0 / static_cast<double>(s.pairs.size());
  for (std::size_t p = 0; p < npx; ++p) {
    const double inner = inv_s * std::sqrt(acc[p]);
    map.data[p] = std::log(inner > eps ? inner : eps);
  }
  return {pairwise_mean(map.data), std::move(map)};
}

UncertaintyReport build_report(const SampleSet& u, const RenderSet& s, const ImageGrid& k,
                               double eps) {
  PerMapStd stds = per_map_std(u);
  auto [scalar, map] = sigma_brdf(u, s, k, eps);
  UncertaintyReport r;
  r.sigma_normals = std::move(stds.normals);
  r.sigma_spec = std::move(stds.spec);
  r.sigma_rough = std::move(stds.rough);
  r.sigma_brdf_map = std::move(map);
  r.sigma_brdf = scalar;
  return r;
}

}  // namespace weft
