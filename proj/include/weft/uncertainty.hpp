#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "weft/image.hpp"
#include "weft/maps.hpp"
#include "weft/predictor.hpp"
#include "weft/render.hpp"

namespace weft {

// Stochastic forward passes of one input, all sharing dimensions.
struct SampleSet {
  std::vector<MapStack> samples;
  ImageGrid input;
  double dropout_rate = 0.0;

  int n() const { return static_cast<int>(samples.size()); }
};

struct UncertaintyReport {
  ImageGrid sigma_normals;
  ImageGrid sigma_spec;
  ImageGrid sigma_rough;
  ImageGrid sigma_brdf_map;
  double sigma_brdf = 0.0;
};

constexpr double kDefaultEps = 1e-12;

// n dropout-sampled predictions with masks derived from (seed, sample index).
SampleSet mc_sample(const PredictorWeights& w, const ImageGrid& input, int n,
                    std::uint64_t seed);

// Pixel-wise population std per map; normal components' stds are L2-combined
// into one scalar per pixel. Returns {normals, spec, rough}.
struct PerMapStd {
  ImageGrid normals;
  ImageGrid spec;
  ImageGrid rough;
};
PerMapStd per_map_std(const SampleSet& u);

// Render-space spread: per pixel log(max(eps, (1/|S|) * sqrt(sum over S of
// cbrt(pixel std over samples of f*cos)))); scalar is the spatial mean.
std::pair<double, ImageGrid> sigma_brdf(const SampleSet& u, const RenderSet& s,
                                        const ImageGrid& k, double eps = kDefaultEps);

UncertaintyReport build_report(const SampleSet& u, const RenderSet& s, const ImageGrid& k,
                               double eps = kDefaultEps);

}  // namespace weft
