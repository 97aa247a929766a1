#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "weft/image.hpp"
#include "weft/vec3.hpp"

namespace weft {

// Tangent-space normals, z-up. Stored as unit vectors; image encoding only
// happens at the I/O boundary.
struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> vectors;

  NormalMap() = default;
  NormalMap(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0)
      throw std::invalid_argument("normal map dimensions must be positive");
    vectors.assign(static_cast<std::size_t>(w) * h, Vec3{0.0, 0.0, 1.0});
  }

  Vec3& at(int x, int y) { return vectors[static_cast<std::size_t>(y) * width + x]; }
  const Vec3& at(int x, int y) const { return vectors[static_cast<std::size_t>(y) * width + x]; }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

struct MapStack {
  NormalMap normals;
  ImageGrid specular;   // 1 channel, [0,1]
  ImageGrid roughness;  // 1 channel, [0,1]

  int width() const { return normals.width; }
  int height() const { return normals.height; }
};

struct Violation {
  std::string map;
  std::size_t pixel = 0;
  std::string rule;
};

MapStack flat_stack(int w, int h, double spec, double rough);

// [-1,1] components to [0,1] channels.
ImageGrid encode_normals(const NormalMap& n);

// Inverse of encode_normals: v = 2c - 1, z clamped to >= 1e-4, renormalized.
// Throws on pixels whose decoded vector is degenerate (norm < 1e-6).
NormalMap decode_normals(const ImageGrid& img);

// Empty result iff all stack invariants hold. Never throws.
std::vector<Violation> validate_stack(const MapStack& m);

}  // namespace weft
