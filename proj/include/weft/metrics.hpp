#pragma once

#include <utility>

#include "weft/image.hpp"
#include "weft/maps.hpp"
#include "weft/render.hpp"

namespace weft {

struct MapThresholds {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
};

// Defaults were tuned on real 1000 PPI scans; the CLI accepts a threshold
// file for recalibrated sets.
struct ArtifactThresholds {
  MapThresholds specular{0.01, 1.41, 1.33};
  MapThresholds roughness{0.01, 0.99, 3.12};
  double box_size_factor = 0.1275;
};

struct MapArtifact {
  double e1 = 0.0;  // homogeneity of the map
  double e2 = 0.0;  // homogeneity ratio map/input
  double e3 = 0.0;  // inverse mutual information with the input
  bool flagged = false;
};

struct ArtifactReport {
  MapArtifact specular;
  MapArtifact roughness;
  bool stack_flagged = false;
};

// Mean absolute difference over all samples.
double map_l1(const ImageGrid& a, const ImageGrid& b);

// Mean angle between per-pixel normals, degrees.
double angular_error(const NormalMap& a, const NormalMap& b);

// Pearson correlation over flattened pixels. Throws std::domain_error when
// either input is constant.
double pearson(const ImageGrid& a, const ImageGrid& b);

// Render-space distance between two stacks under a constant grey albedo:
// per pixel sqrt(mean over S of cbrt(cos^2(theta_l) * diff^2)).
// Returns (mean over pixels, spatial map).
std::pair<double, ImageGrid> brdf_distance(const MapStack& gt, const MapStack& est,
                                           const RenderSet& s, const ImageGrid& k);

// Box-filter the image, shift the result by `box` pixels in each of the four
// axis directions, and average the mean absolute differences over the
// overlap regions.
double homogeneity(const ImageGrid& img, int box);

// Histogram mutual information in nats, equal-width bins over [0,1].
double mutual_information(const ImageGrid& a, const ImageGrid& b, int bins = 64);

// Kernel size factor*ppi rounded to the nearest odd integer, at least 3.
int box_size_for_ppi(double factor, double ppi);

// Homogeneity / mutual-information vote over the specular and roughness
// maps; a map is flagged when at least 2 of its 3 metrics exceed their
// thresholds, the stack when any map is.
ArtifactReport detect_artifacts(const ImageGrid& input, const MapStack& stack,
                                const ArtifactThresholds& th);

}  // namespace weft
