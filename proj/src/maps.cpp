#include "weft/maps.hpp"

#include <cmath>

namespace weft {

MapStack flat_stack(int w, int h, double spec, double rough) {
  MapStack m;
  m.normals = NormalMap(w, h);
  m.specular = constant_image(w, h, 1, spec);
  m.roughness = constant_image(w, h, 1, rough);
  return m;
}

ImageGrid encode_normals(const NormalMap& n) {
  ImageGrid img(n.width, n.height, 3);
  for (std::size_t p = 0; p < n.pixel_count(); ++p) {
    const Vec3& v = n.vectors[p];
    img.data[p * 3 + 0] = (v.x + 1.0) * 0.5;
    img.data[p * 3 + 1] = (v.y + 1.0) * 0.5;
    img.data[p * 3 + 2] = (v.z + 1.0) * 0.5;
  }
  return img;
}

NormalMap decode_normals(const ImageGrid& img) {
  if (img.channels != 3)
    throw std::invalid_argument("decode_normals: expected 3 channels");
  NormalMap n(img.width, img.height);
  for (std::size_t p = 0; p < n.pixel_count(); ++p) {
    Vec3 v{img.data[p * 3 + 0] * 2.0 - 1.0,
           img.data[p * 3 + 1] * 2.0 - 1.0,
           img.data[p * 3 + 2] * 2.0 - 1.0};
    if (v.z < 1e-4) v.z = 1e-4;
    const double len = norm(v);
    if (len < 1e-6)
      throw std::invalid_argument("decode_normals: degenerate pixel " + std::to_string(p));
    n.vectors[p] = v * (1.0 / len);
  }
  return n;
}

std::vector<Violation> validate_stack(const MapStack& m) {
  std::vector<Violation> out;
  const int w = m.normals.width;
  const int h = m.normals.height;
  if (m.specular.width != w || m.specular.height != h || m.specular.channels != 1)
    out.push_back({"specular", 0, "dimension mismatch"});
  if (m.roughness.width != w || m.roughness.height != h || m.roughness.channels != 1)
    out.push_back({"roughness", 0, "dimension mismatch"});

  for (std::size_t p = 0; p < m.normals.pixel_count(); ++p) {
    const Vec3& v = m.normals.vectors[p];
    if (std::abs(norm(v) - 1.0) > 1e-5)
      out.push_back({"normals", p, "unit norm"});
    if (!(v.z > 0.0))
      out.push_back({"normals", p, "z > 0"});
  }
  auto check_range = [&out](const ImageGrid& img, const char* name) {
    for (std::size_t p = 0; p < img.data.size(); ++p) {
      const double v = img.data[p];
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        out.push_back({name, p, "value in [0,1]"});
    }
  };
  if (m.specular.width == w && m.specular.height == h && m.specular.channels == 1)
    check_range(m.specular, "specular");
  if (m.roughness.width == w && m.roughness.height == h && m.roughness.channels == 1)
    check_range(m.roughness, "roughness");
  return out;
}

}  // namespace weft
