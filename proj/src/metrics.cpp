#include "weft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "weft/numeric.hpp"

namespace weft {

namespace {

constexpr double kRadToDeg = 57.295779513082320877;

// Separable box filter with replicate padding (out-of-range coordinates
// clamp to the edge).
ImageGrid box_filter(const ImageGrid& img, int box) {
  const int r = box / 2;
  const int w = img.width;
  const int h = img.height;
  ImageGrid tmp(w, h, 1, img.ppi);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += img.at(std::clamp(x + k, 0, w - 1), y, 0);
      tmp.at(x, y, 0) = s / box;
    }
  }
  ImageGrid out(w, h, 1, img.ppi);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += tmp.at(x, std::clamp(y + k, 0, h - 1), 0);
      out.at(x, y, 0) = s / box;
    }
  }
  return out;
}

double shift_mad(const ImageGrid& f, int dx, int dy) {
  const int x0 = std::max(0, dx);
  const int x1 = f.width + std::min(0, dx);
  const int y0 = std::max(0, dy);
  const int y1 = f.height + std::min(0, dy);
  double s = 0.0;
  std::size_t n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      s += std::abs(f.at(x, y, 0) - f.at(x - dx, y - dy, 0));
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

}  // namespace

double map_l1(const ImageGrid& a, const ImageGrid& b) {
  check_same_shape(a, b, "map_l1");
  std::vector<double> diff(a.data.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(a.data[i] - b.data[i]);
  return pairwise_mean(diff);
}

double angular_error(const NormalMap& a, const NormalMap& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("angular_error: shape mismatch");
  std::vector<double> ang(a.pixel_count());
  for (std::size_t p = 0; p < ang.size(); ++p) {
    const double d = std::clamp(dot(a.vectors[p], b.vectors[p]), -1.0, 1.0);
    ang[p] = std::acos(d) * kRadToDeg;
  }
  return pairwise_mean(ang);
}

double pearson(const ImageGrid& a, const ImageGrid& b) {
  check_same_shape(a, b, "pearson");
  const std::size_t n = a.data.size();
  if (n < 2) throw std::invalid_argument("pearson: need at least 2 samples");
  const auto [amin, amax] = std::minmax_element(a.data.begin(), a.data.end());
  const auto [bmin, bmax] = std::minmax_element(b.data.begin(), b.data.end());
  if (*amin == *amax || *bmin == *bmax)
    throw std::domain_error("pearson: correlation undefined for constant input");
  const double ma = pairwise_mean(a.data);
  const double mb = pairwise_mean(b.data);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.data[i] - ma;
    const double db = b.data[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0)
    throw std::domain_error("pearson: correlation undefined for constant input");
  return sab / std::sqrt(saa * sbb);
}

std::pair<double, ImageGrid> brdf_distance(const MapStack& gt, const MapStack& est,
                                           const RenderSet& s, const ImageGrid& k) {
  if (gt.width() != est.width() || gt.height() != est.height())
    throw std::invalid_argument("brdf_distance: stack shape mismatch");
  if (k.channels != 1 || k.width != gt.width() || k.height != gt.height())
    throw std::invalid_argument("brdf_distance: albedo must be a matching 1-channel image");
  if (s.pairs.empty()) throw std::invalid_argument("brdf_distance: empty render set");

  const std::size_t npx = k.pixel_count();
  std::vector<double> acc(npx, 0.0);
  for (const auto& [l, v] : s.pairs) {
    const double c2 = cosine_weight(l) * cosine_weight(l);
    const ImageGrid fg = shade(gt, k, l, v);
    const ImageGrid fe = shade(est, k, l, v);
    for (std::size_t p = 0; p < npx; ++p) {
      const double d = fg.data[p] - fe.data[p];
      acc[p] += std::cbrt(c2 * d * d);
    }
  }
  ImageGrid map(k.width, k.height, 1, k.ppi);
  const double inv_s = 1.0 / static_cast<double>(s.pairs.size());
  for (std::size_t p = 0; p < npx; ++p) map.data[p] = std::sqrt(acc[p] * inv_s);
  return {pairwise_mean(map.data), std::move(map)};
}

double homogeneity(const ImageGrid& img, int box) {
  if (img.channels != 1)
    throw std::invalid_argument("homogeneity: expected a 1-channel image");
  if (box < 3 || box % 2 == 0)
    throw std::invalid_argument("homogeneity: box must be odd and >= 3");
  if (img.width <= 3 * box || img.height <= 3 * box)
    throw std::invalid_argument("homogeneity: image too small for box size");
  const ImageGrid f = box_filter(img, box);
  const double s =
      shift_mad(f, box, 0) + shift_mad(f, -box, 0) + shift_mad(f, 0, box) + shift_mad(f, 0, -box);
  return s / 4.0;
}

double mutual_information(const ImageGrid& a, const ImageGrid& b, int bins) {
  check_same_shape(a, b, "mutual_information");
  if (bins < 2) throw std::invalid_argument("mutual_information: bins must be >= 2");
  const std::size_t n = a.data.size();
  auto bin_of = [bins](double v) {
    int i = static_cast<int>(v * bins);
    return std::clamp(i, 0, bins - 1);
  };
  std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
  std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int ia = bin_of(a.data[i]);
    const int ib = bin_of(b.data[i]);
    joint[static_cast<std::size_t>(ia) * bins + ib] += w;
    pa[ia] += w;
    pb[ib] += w;
  }
  double mi = 0.0;
  for (int ia = 0; ia < bins; ++ia) {
    for (int ib = 0; ib < bins; ++ib) {
      const double pj = joint[static_cast<std::size_t>(ia) * bins + ib];
      if (pj > 0.0) mi += pj * std::log(pj / (pa[ia] * pb[ib]));
    }
  }
  return mi < 0.0 ? 0.0 : mi;
}

int box_size_for_ppi(double factor, double ppi) {
  if (factor <= 0.0 || ppi <= 0.0)
    throw std::invalid_argument("box_size_for_ppi: factor and ppi must be positive");
  const int k = 2 * static_cast<int>(std::lround((factor * ppi - 1.0) / 2.0)) + 1;
  return std::max(3, k);
}

ArtifactReport detect_artifacts(const ImageGrid& input, const MapStack& stack,
                                const ArtifactThresholds& th) {
  if (input.width != stack.width() || input.height != stack.height())
    throw std::invalid_argument("detect_artifacts: input dimensions must match the stack");
  if (input.ppi <= 0.0)
    throw std::invalid_argument("detect_artifacts: input needs a positive ppi");
  const int box = box_size_for_ppi(th.box_size_factor, input.ppi);
  const ImageGrid lum = luminance(input);
  const double h_input = homogeneity(lum, box);

  auto eval_map = [&](const ImageGrid& m, const MapThresholds& t) {
    MapArtifact a;
    a.e1 = homogeneity(m, box);
    a.e2 = h_input < 1e-9 ? std::numeric_limits<double>::infinity() : a.e1 / h_input;
    const double mi = mutual_information(lum, m);
    a.e3 = mi < 1e-9 ? std::numeric_limits<double>::infinity() : 1.0 / mi;
    const int votes = (a.e1 > t.t1) + (a.e2 > t.t2) + (a.e3 > t.t3);
    a.flagged = votes >= 2;
    return a;
  };

  ArtifactReport r;
  r.specular = eval_map(stack.specular, th.specular);
  r.roughness = eval_map(stack.roughness, th.roughness);
  r.stack_flagged = r.specular.flagged || r.roughness.flagged;
  return r;
}

}  // namespace weft
