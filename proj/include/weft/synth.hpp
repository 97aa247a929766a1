#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weft/image.hpp"
#include "weft/maps.hpp"

namespace weft {

enum class MaterialFamily {
  plain_weave,
  twill,
  satin,
  jersey_knit,
  rib_knit,
  leather_grain,
};

const std::vector<MaterialFamily>& all_families();
std::string family_name(MaterialFamily f);
MaterialFamily family_from_name(const std::string& name);

struct MaterialSample {
  int id = 0;
  MaterialFamily family = MaterialFamily::plain_weave;
  MapStack gt;
  ImageGrid scan;        // simulated flatbed input, 3 channels
  ImageGrid base_color;  // albedo the scan was rendered with
  std::uint64_t seed = 0;
  double ppi = 0.0;
};

// Deterministic per (family, seed): height-field microgeometry, normals from
// its gradients, spec/rough from family bases plus height-correlated noise,
// scan rendered from the result.
MaterialSample generate_material(MaterialFamily family, std::uint64_t seed, int size,
                                 double ppi);

struct AugmentPolicy {
  int crop_size = 0;             // 0 disables
  bool rotate90 = false;         // draws a 0..3 quarter-turn count
  double max_angle_deg = 0.0;    // small-angle resampling rotation, 0 disables
  double rescale_min = 1.0;      // both 1 disables
  double rescale_max = 1.0;
  bool hsv_jitter = false;       // scan only, +-10% value, +-5% saturation
  double noise_std = 0.0;        // scan only, gaussian, 0 disables
  double blur_sigma = 0.0;       // scan only, gaussian, 0 disables
  double erase_frac = 0.0;       // scan only, rectangle area fraction, 0 disables
};

// Geometric transforms hit scan and all maps (normal vectors rotated in
// tangent space); photometric transforms hit the scan only.
MaterialSample augment(const MaterialSample& s, const AugmentPolicy& policy,
                       std::uint64_t seed);

struct Dataset {
  std::vector<MaterialSample> materials;  // indexed by id
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  std::uint64_t seed = 0;
  int size = 0;
  double ppi = 0.0;
};

// Stratified 90-10 split; every family contributes max(1, round(0.1 * n))
// test materials.
Dataset make_dataset(int n_per_family, const std::vector<MaterialFamily>& families,
                     std::uint64_t seed, int size, double ppi);

}  // namespace weft
