#include "weft/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "weft/render.hpp"
#include "weft/rng.hpp"

namespace weft {

namespace {

constexpr double kTau = 6.28318530717958647692;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

struct FamilyParams {
  double spec_lo, spec_hi, spec_span;
  double rough_lo, rough_hi, rough_span;
  double noise_amp;
  double tilt_lo, tilt_hi;
};

FamilyParams params_for(MaterialFamily f) {
  switch (f) {
    case MaterialFamily::plain_weave:
      return {0.20, 0.40, 0.10, 0.55, 0.80, 0.15, 0.08, 1.5, 3.5};
    case MaterialFamily::twill:
      return {0.25, 0.45, 0.12, 0.45, 0.70, 0.15, 0.08, 1.5, 3.0};
    case MaterialFamily::satin:
      return {0.60, 0.90, 0.10, 0.10, 0.30, 0.10, 0.05, 0.5, 1.5};
    case MaterialFamily::jersey_knit:
      return {0.10, 0.30, 0.08, 0.60, 0.90, 0.12, 0.08, 1.5, 3.0};
    case MaterialFamily::rib_knit:
      return {0.15, 0.35, 0.08, 0.55, 0.85, 0.12, 0.08, 2.0, 4.0};
    case MaterialFamily::leather_grain:
      return {0.30, 0.60, 0.15, 0.30, 0.60, 0.20, 0.10, 1.0, 2.5};
  }
  throw std::invalid_argument("unsupported material family");
}

// Coarse random lattice, bilinearly interpolated; lattice values come from a
// position hash so evaluation order is irrelevant.
ImageGrid value_noise(int size, double cell, std::uint64_t seed) {
  ImageGrid out(size, size, 1);
  const int lat = static_cast<int>(size / cell) + 2;
  auto lattice = [&](int i, int j) {
    return u64_to_unit_double(
        hash_combine(seed, static_cast<std::uint64_t>(j) * 73856093u + i));
  };
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double fx = x / cell;
      const double fy = y / cell;
      int ix = static_cast<int>(fx);
      int iy = static_cast<int>(fy);
      ix = std::min(ix, lat - 2);
      iy = std::min(iy, lat - 2);
      const double tx = fx - ix;
      const double ty = fy - iy;
      const double a = lattice(ix, iy);
      const double b = lattice(ix + 1, iy);
      const double c = lattice(ix, iy + 1);
      const double d = lattice(ix + 1, iy + 1);
      out.at(x, y, 0) = (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
    }
  }
  return out;
}

ImageGrid height_field(MaterialFamily f, int size, Rng& rng, std::uint64_t seed) {
  ImageGrid h(size, size, 1);
  switch (f) {
    case MaterialFamily::plain_weave: {
      const double p = rng.uniform(8.0, 16.0);
      const double p1 = rng.uniform(0.0, kTau);
      const double p2 = rng.uniform(0.0, kTau);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          h.at(x, y, 0) =
              0.5 + 0.5 * std::sin(kTau * x / p + p1) * std::sin(kTau * y / p + p2);
      break;
    }
    case MaterialFamily::twill: {
      const double p = rng.uniform(10.0, 20.0);
      const double p1 = rng.uniform(0.0, kTau);
      const double p2 = rng.uniform(0.0, kTau);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double diag = std::sin(kTau * (x + 2.0 * y) / p + p1);
          const double yarn = std::sin(kTau * 3.0 * x / p + p2);
          h.at(x, y, 0) = 0.5 + 0.5 * (0.8 * diag + 0.2 * yarn);
        }
      break;
    }
    case MaterialFamily::satin: {
      const double p = rng.uniform(12.0, 24.0);
      const double p1 = rng.uniform(0.0, kTau);
      const double wobble = rng.uniform(0.2, 0.5);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          h.at(x, y, 0) =
              0.5 + 0.5 * std::sin(kTau * y / p + p1 + wobble * std::sin(kTau * x / (4.0 * p)));
      break;
    }
    case MaterialFamily::jersey_knit: {
      const double p = rng.uniform(8.0, 14.0);
      const double p1 = rng.uniform(0.0, kTau);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double wale = std::pow(std::abs(std::sin(kTau * 0.5 * x / p)), 0.7);
          const double course = 0.8 + 0.2 * std::sin(kTau * y / (1.6 * p) + p1);
          h.at(x, y, 0) = clamp01((2.0 * wale - 1.0) * course * 0.5 + 0.5);
        }
      break;
    }
    case MaterialFamily::rib_knit: {
      const double p = rng.uniform(10.0, 18.0);
      const double k = rng.uniform(2.0, 4.0);
      const double p1 = rng.uniform(0.0, kTau);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double rib = std::tanh(k * std::sin(kTau * x / p + p1)) / std::tanh(k);
          const double mod = 0.9 + 0.1 * std::sin(kTau * y / (3.0 * p));
          h.at(x, y, 0) = 0.5 + 0.5 * rib * mod;
        }
      break;
    }
    case MaterialFamily::leather_grain: {
      const double cell = rng.uniform(10.0, 20.0);
      const std::uint64_t jseed = hash_combine(seed, 0x6c656174ull);
      auto feature = [&](int gx, int gy) {
        const std::uint64_t hh =
            hash_combine(jseed, static_cast<std::uint64_t>(gy) * 83492791u + gx);
        const double jx = u64_to_unit_double(hh);
        const double jy = u64_to_unit_double(hash_u64(hh));
        return std::pair<double, double>{(gx + jx) * cell, (gy + jy) * cell};
      };
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const int cgx = static_cast<int>(x / cell);
          const int cgy = static_cast<int>(y / cell);
          double d1 = 1e30, d2 = 1e30;
          for (int gy = cgy - 2; gy <= cgy + 2; ++gy)
            for (int gx = cgx - 2; gx <= cgx + 2; ++gx) {
              const auto [fx, fy] = feature(gx, gy);
              const double dx = fx - x;
              const double dy = fy - y;
              const double d = std::sqrt(dx * dx + dy * dy);
              if (d < d1) {
                d2 = d1;
                d1 = d;
              } else if (d < d2) {
                d2 = d;
              }
            }
          h.at(x, y, 0) = clamp01((d2 - d1) / (0.5 * cell));
        }
      break;
    }
  }
  return h;
}

NormalMap normals_from_height(const ImageGrid& h, double tilt) {
  const int w = h.width;
  const int hh = h.height;
  NormalMap n(w, hh);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx =
          (h.at(std::min(x + 1, w - 1), y, 0) - h.at(std::max(x - 1, 0), y, 0)) * 0.5;
      const double gy =
          (h.at(x, std::min(y + 1, hh - 1), 0) - h.at(x, std::max(y - 1, 0), 0)) * 0.5;
      n.at(x, y) = normalized({-tilt * gx, -tilt * gy, 1.0});
    }
  return n;
}

void rgb_from_hsv(double hu, double sa, double va, double& r, double& g, double& b) {
  const double h6 = hu * 6.0;
  const int i = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double p = va * (1.0 - sa);
  const double q = va * (1.0 - f * sa);
  const double t = va * (1.0 - (1.0 - f) * sa);
  switch (i) {
    case 0: r = va; g = t; b = p; break;
    case 1: r = q; g = va; b = p; break;
    case 2: r = p; g = va; b = t; break;
    case 3: r = p; g = q; b = va; break;
    case 4: r = t; g = p; b = va; break;
    default: r = va; g = p; b = q; break;
  }
}

void hsv_from_rgb(double r, double g, double b, double& hu, double& sa, double& va) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  va = mx;
  sa = mx <= 0.0 ? 0.0 : d / mx;
  if (d <= 0.0) {
    hu = 0.0;
    return;
  }
  if (mx == r)
    hu = std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    hu = (b - r) / d + 2.0;
  else
    hu = (r - g) / d + 4.0;
  hu /= 6.0;
  if (hu < 0.0) hu += 1.0;
}

}  // namespace

const std::vector<MaterialFamily>& all_families() {
  static const std::vector<MaterialFamily> fams = {
      MaterialFamily::plain_weave, MaterialFamily::twill,      MaterialFamily::satin,
      MaterialFamily::jersey_knit, MaterialFamily::rib_knit,   MaterialFamily::leather_grain,
  };
  return fams;
}

std::string family_name(MaterialFamily f) {
  switch (f) {
    case MaterialFamily::plain_weave: return "plain_weave";
    case MaterialFamily::twill: return "twill";
    case MaterialFamily::satin: return "satin";
    case MaterialFamily::jersey_knit: return "jersey_knit";
    case MaterialFamily::rib_knit: return "rib_knit";
    case MaterialFamily::leather_grain: return "leather_grain";
  }
  throw std::invalid_argument("unsupported material family");
}

MaterialFamily family_from_name(const std::string& name) {
  for (MaterialFamily f : all_families())
    if (family_name(f) == name) return f;
  throw std::invalid_argument("unknown material family: " + name);
}

MaterialSample generate_material(MaterialFamily family, std::uint64_t seed, int size,
                                 double ppi) {
  if (size < 64) throw std::invalid_argument("generate_material: size must be >= 64");
  if (ppi <= 0.0) throw std::invalid_argument("generate_material: ppi must be positive");
  const FamilyParams fp = params_for(family);
  const std::uint64_t mseed =
      hash_combine(seed, static_cast<std::uint64_t>(family) + 0x51u);
  Rng rng(mseed);

  const ImageGrid h = height_field(family, size, rng, mseed);
  const double tilt = rng.uniform(fp.tilt_lo, fp.tilt_hi);

  MaterialSample s;
  s.family = family;
  s.seed = seed;
  s.ppi = ppi;
  s.gt.normals = normals_from_height(h, tilt);

  const double spec_base = rng.uniform(fp.spec_lo, fp.spec_hi);
  const double rough_base = rng.uniform(fp.rough_lo, fp.rough_hi);
  const double cell = rng.uniform(6.0, 14.0);
  const ImageGrid noise_s = value_noise(size, cell, hash_combine(mseed, 1));
  const ImageGrid noise_r = value_noise(size, cell, hash_combine(mseed, 2));

  s.gt.specular = ImageGrid(size, size, 1, ppi);
  s.gt.roughness = ImageGrid(size, size, 1, ppi);
  for (std::size_t p = 0; p < h.data.size(); ++p) {
    const double hn = h.data[p] - 0.5;
    s.gt.specular.data[p] =
        clamp01(spec_base + fp.spec_span * hn + fp.noise_amp * (noise_s.data[p] - 0.5));
    s.gt.roughness.data[p] =
        clamp01(rough_base - fp.rough_span * hn + fp.noise_amp * (noise_r.data[p] - 0.5));
  }

  double r, g, b;
  rgb_from_hsv(rng.uniform(), rng.uniform(0.05, 0.5), rng.uniform(0.35, 0.8), r, g, b);
  s.base_color = ImageGrid(size, size, 3, ppi);
  for (std::size_t p = 0; p < h.data.size(); ++p) {
    const double shade = 0.9 + 0.25 * (h.data[p] - 0.5);
    s.base_color.data[p * 3 + 0] = clamp01(r * shade);
    s.base_color.data[p * 3 + 1] = clamp01(g * shade);
    s.base_color.data[p * 3 + 2] = clamp01(b * shade);
  }

  s.scan = render_scan(s.gt, s.base_color);
  return s;
}

namespace {

ImageGrid rot90_image(const ImageGrid& in) {
  ImageGrid out(in.height, in.width, in.channels, in.ppi);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < in.channels; ++c)
        out.at(x, y, c) = in.at(y, in.height - 1 - x, c);
  return out;
}

NormalMap rot90_normals(const NormalMap& in) {
  NormalMap out(in.height, in.width);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const Vec3& v = in.at(y, in.height - 1 - x);
      out.at(x, y) = {-v.y, v.x, v.z};
    }
  return out;
}

double bilinear(const ImageGrid& img, double x, double y, int c) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = std::min(static_cast<int>(x), img.width - 2 < 0 ? 0 : img.width - 2);
  const int y0 = std::min(static_cast<int>(y), img.height - 2 < 0 ? 0 : img.height - 2);
  const double tx = x - x0;
  const double ty = y - y0;
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  return (img.at(x0, y0, c) * (1 - tx) + img.at(x1, y0, c) * tx) * (1 - ty) +
         (img.at(x0, y1, c) * (1 - tx) + img.at(x1, y1, c) * tx) * ty;
}

// Inverse-map resample: dst pixel p samples src at R(-theta)*(p-c)/s + c.
void warp_sample(const MaterialSample& in, MaterialSample& out, double theta_deg,
                 double scale) {
  const double th = theta_deg * kTau / 360.0;
  const double ct = std::cos(th);
  const double st = std::sin(th);
  const int w = in.scan.width;
  const int h = in.scan.height;
  const double cx = (w - 1) * 0.5;
  const double cy = (h - 1) * 0.5;

  ImageGrid enc = encode_normals(in.gt.normals);
  ImageGrid enc_out(w, h, 3);
  out.scan = ImageGrid(w, h, in.scan.channels, in.scan.ppi);
  out.base_color = ImageGrid(w, h, in.base_color.channels, in.base_color.ppi);
  out.gt.specular = ImageGrid(w, h, 1, in.gt.specular.ppi);
  out.gt.roughness = ImageGrid(w, h, 1, in.gt.roughness.ppi);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x - cx) / scale;
      const double dy = (y - cy) / scale;
      const double sx = ct * dx + st * dy + cx;
      const double sy = -st * dx + ct * dy + cy;
      for (int c = 0; c < in.scan.channels; ++c)
        out.scan.at(x, y, c) = clamp01(bilinear(in.scan, sx, sy, c));
      for (int c = 0; c < in.base_color.channels; ++c)
        out.base_color.at(x, y, c) = clamp01(bilinear(in.base_color, sx, sy, c));
      out.gt.specular.at(x, y, 0) = clamp01(bilinear(in.gt.specular, sx, sy, 0));
      out.gt.roughness.at(x, y, 0) = clamp01(bilinear(in.gt.roughness, sx, sy, 0));
      for (int c = 0; c < 3; ++c) enc_out.at(x, y, c) = bilinear(enc, sx, sy, c);
    }

  NormalMap n = decode_normals(enc_out);
  for (auto& v : n.vectors) {
    const double vx = ct * v.x - st * v.y;
    const double vy = st * v.x + ct * v.y;
    v = normalized({vx, vy, std::max(v.z, 1e-4)});
  }
  out.gt.normals = std::move(n);
}

}  // namespace

MaterialSample augment(const MaterialSample& s, const AugmentPolicy& policy,
                       std::uint64_t seed) {
  Rng rng(seed);
  MaterialSample out = s;

  if (policy.crop_size > 0) {
    const int cs = policy.crop_size;
    if (cs > out.scan.width || cs > out.scan.height)
      throw std::invalid_argument("augment: crop larger than source");
    const int x0 = static_cast<int>(rng.below(out.scan.width - cs + 1));
    const int y0 = static_cast<int>(rng.below(out.scan.height - cs + 1));
    auto crop_img = [&](const ImageGrid& img) {
      ImageGrid c(cs, cs, img.channels, img.ppi);
      for (int y = 0; y < cs; ++y)
        for (int x = 0; x < cs; ++x)
          for (int ch = 0; ch < img.channels; ++ch) c.at(x, y, ch) = img.at(x0 + x, y0 + y, ch);
      return c;
    };
    NormalMap cn(cs, cs);
    for (int y = 0; y < cs; ++y)
      for (int x = 0; x < cs; ++x) cn.at(x, y) = out.gt.normals.at(x0 + x, y0 + y);
    out.gt.normals = std::move(cn);
    out.gt.specular = crop_img(out.gt.specular);
    out.gt.roughness = crop_img(out.gt.roughness);
    out.scan = crop_img(out.scan);
    out.base_color = crop_img(out.base_color);
  }

  if (policy.rotate90) {
    const int k = static_cast<int>(rng.below(4));
    for (int i = 0; i < k; ++i) {
      out.gt.normals = rot90_normals(out.gt.normals);
      out.gt.specular = rot90_image(out.gt.specular);
      out.gt.roughness = rot90_image(out.gt.roughness);
      out.scan = rot90_image(out.scan);
      out.base_color = rot90_image(out.base_color);
    }
  }

  const bool rotate_small = policy.max_angle_deg > 0.0;
  const bool rescale = policy.rescale_min != 1.0 || policy.rescale_max != 1.0;
  if (rotate_small || rescale) {
    const double angle = rotate_small ? rng.uniform(-policy.max_angle_deg, policy.max_angle_deg)
                                      : 0.0;
    const double scale = rescale ? rng.uniform(policy.rescale_min, policy.rescale_max) : 1.0;
    MaterialSample warped = out;
    warp_sample(out, warped, angle, scale);
    out = std::move(warped);
  }

  if (policy.hsv_jitter) {
    if (out.scan.channels != 3)
      throw std::invalid_argument("augment: hsv jitter expects a 3-channel scan");
    const double dv = 1.0 + 0.10 * rng.uniform(-1.0, 1.0);
    const double ds = 1.0 + 0.05 * rng.uniform(-1.0, 1.0);
    for (std::size_t p = 0; p < out.scan.pixel_count(); ++p) {
      double r = std::pow(out.scan.data[p * 3 + 0], 1.0 / 2.2);
      double g = std::pow(out.scan.data[p * 3 + 1], 1.0 / 2.2);
      double b = std::pow(out.scan.data[p * 3 + 2], 1.0 / 2.2);
      double hu, sa, va;
      hsv_from_rgb(r, g, b, hu, sa, va);
      sa = clamp01(sa * ds);
      va = clamp01(va * dv);
      rgb_from_hsv(hu, sa, va, r, g, b);
      out.scan.data[p * 3 + 0] = clamp01(std::pow(r, 2.2));
      out.scan.data[p * 3 + 1] = clamp01(std::pow(g, 2.2));
      out.scan.data[p * 3 + 2] = clamp01(std::pow(b, 2.2));
    }
  }

  if (policy.noise_std > 0.0) {
    for (auto& v : out.scan.data) v = clamp01(v + rng.normal() * policy.noise_std);
  }

  if (policy.blur_sigma > 0.0) {
    const double sigma = policy.blur_sigma;
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kern(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += kern[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& k : kern) k /= sum;
    const ImageGrid& src = out.scan;
    ImageGrid tmp(src.width, src.height, src.channels, src.ppi);
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x)
        for (int c = 0; c < src.channels; ++c) {
          double acc = 0.0;
          for (int i = -r; i <= r; ++i)
            acc += kern[i + r] * src.at(std::clamp(x + i, 0, src.width - 1), y, c);
          tmp.at(x, y, c) = acc;
        }
    ImageGrid dst(src.width, src.height, src.channels, src.ppi);
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x)
        for (int c = 0; c < src.channels; ++c) {
          double acc = 0.0;
          for (int i = -r; i <= r; ++i)
            acc += kern[i + r] * tmp.at(x, std::clamp(y + i, 0, src.height - 1), c);
          dst.at(x, y, c) = acc;
        }
    out.scan = std::move(dst);
  }

  if (policy.erase_frac > 0.0) {
    const int w = out.scan.width;
    const int h = out.scan.height;
    const double side = std::sqrt(policy.erase_frac);
    const int ew = std::clamp(static_cast<int>(std::lround(side * w * rng.uniform(0.7, 1.3))), 1, w);
    const int eh = std::clamp(static_cast<int>(std::lround(side * h * rng.uniform(0.7, 1.3))), 1, h);
    const int x0 = static_cast<int>(rng.below(w - ew + 1));
    const int y0 = static_cast<int>(rng.below(h - eh + 1));
    const double fill = rng.uniform();
    for (int y = y0; y < y0 + eh; ++y)
      for (int x = x0; x < x0 + ew; ++x)
        for (int c = 0; c < out.scan.channels; ++c) out.scan.at(x, y, c) = fill;
  }

  return out;
}

Dataset make_dataset(int n_per_family, const std::vector<MaterialFamily>& families,
                     std::uint64_t seed, int size, double ppi) {
  if (n_per_family < 10)
    throw std::invalid_argument("make_dataset: n_per_family must be >= 10");
  if (families.empty()) throw std::invalid_argument("make_dataset: no families");

  Dataset ds;
  ds.seed = seed;
  ds.size = size;
  ds.ppi = ppi;
  int id = 0;
  for (MaterialFamily f : families) {
    for (int k = 0; k < n_per_family; ++k, ++id) {
      MaterialSample s =
          generate_material(f, hash_combine(seed, static_cast<std::uint64_t>(id)), size, ppi);
      s.id = id;
      ds.materials.push_back(std::move(s));
    }
  }

  Rng split_rng(hash_combine(seed, 0x73706c6974ull));
  const int test_n = std::max(1, static_cast<int>(std::lround(0.1 * n_per_family)));
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    std::vector<int> ids(n_per_family);
    std::iota(ids.begin(), ids.end(), static_cast<int>(fi) * n_per_family);
    split_rng.shuffle(ids);
    for (int i = 0; i < n_per_family; ++i)
      (i < test_n ? ds.test_ids : ds.train_ids).push_back(ids[i]);
  }
  std::sort(ds.train_ids.begin(), ds.train_ids.end());
  std::sort(ds.test_ids.begin(), ds.test_ids.end());
  return ds;
}

}  // namespace weft
