#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "weft/image.hpp"
#include "weft/maps.hpp"
#include "weft/vec3.hpp"

namespace weft {

// Unit direction in the upper hemisphere (surface plane z-up).
struct Direction {
  Vec3 d{0.0, 0.0, 1.0};

  Direction() = default;
  explicit Direction(const Vec3& v) : d(v) {
    if (std::abs(norm(v) - 1.0) > 1e-6)
      throw std::invalid_argument("direction must be unit length");
    if (!(v.z > 0.0))
      throw std::invalid_argument("direction must have z > 0");
  }
};

// Normalizes before constructing; rejects z <= 0.
Direction direction_from(const Vec3& v);

struct RenderSet {
  std::vector<std::pair<Direction, Direction>> pairs;  // (light, view)

  std::size_t size() const { return pairs.size(); }
};

// cos of the light's angle to the surface normal plane, clamped to [0,1].
inline double cosine_weight(const Direction& l) {
  return l.d.z < 0.0 ? 0.0 : (l.d.z > 1.0 ? 1.0 : l.d.z);
}

// Isotropic GGX lobe, Cook-Torrance D*F*G / (4 (n.l)(n.v)).
// alpha = rough^2, F0 = 0.08 * spec, Smith height-correlated masking.
// Degenerate geometry (n.l <= 0 or n.v <= 0) returns 0.
double ggx_specular(const Vec3& n, double spec, double rough, const Direction& l,
                    const Direction& v);

// Per pixel: albedo/pi + ggx_specular. No cosine foreshortening; callers
// apply cos(theta_l) where the metrics need it.
ImageGrid shade(const MapStack& m, const ImageGrid& albedo, const Direction& l,
                const Direction& v);

// Deterministic low-discrepancy set of (light, view) pairs, cosine-weighted
// toward the zenith, randomized by a per-seed toroidal shift.
RenderSet sample_render_set(int n, std::uint64_t seed = 7);

// Simulated flatbed scan: cos-weighted average of shade() over a fixed
// 32-light set, view at the zenith, scaled back by pi, clamped to [0,1].
ImageGrid render_scan(const MapStack& m, const ImageGrid& base_color);

// The fixed light set render_scan integrates over.
const std::vector<Direction>& scan_light_set();

}  // namespace weft
