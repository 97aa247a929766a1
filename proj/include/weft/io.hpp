#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weft/active.hpp"
#include "weft/image.hpp"
#include "weft/maps.hpp"
#include "weft/metrics.hpp"
#include "weft/predictor.hpp"
#include "weft/render.hpp"
#include "weft/synth.hpp"
#include "weft/uncertainty.hpp"

namespace weft {

// 16-bit PNG, 1 channel gray or 3 channel RGB; values clamped from/to [0,1].
void write_png16(const std::string& path, const ImageGrid& img);
ImageGrid read_png16(const std::string& path);  // accepts 8- or 16-bit gray/RGB

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Material directory: scan.png, normals.png, specular.png, roughness.png,
// meta.json {name, family, ppi, width, height, seed}.
void write_material_dir(const std::string& dir, const MaterialSample& s,
                        const std::string& name);

struct MaterialOnDisk {
  std::string name;
  MaterialFamily family = MaterialFamily::plain_weave;
  double ppi = 0.0;
  std::uint64_t seed = 0;
  MapStack gt;
  ImageGrid scan;
};
MaterialOnDisk read_material_dir(const std::string& dir);

// Reads just the three map images of a material directory.
MapStack read_stack_dir(const std::string& dir, double ppi);

void write_dataset(const std::string& dir, const Dataset& ds);

struct DatasetOnDisk {
  std::vector<MaterialOnDisk> materials;  // indexed by id
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  std::uint64_t seed = 0;
  double ppi = 0.0;
};
DatasetOnDisk read_dataset(const std::string& dir);
std::string material_dir_name(int id);

ArtifactThresholds read_thresholds(const std::string& path);
void write_thresholds(const std::string& path, const ArtifactThresholds& th);

// Plain text, one "lx ly lz vx vy vz" pair per line; reader renormalizes and
// rejects directions with z <= 0.
RenderSet read_render_set(const std::string& path);
void write_render_set(const std::string& path, const RenderSet& s);
std::uint64_t render_set_hash(const RenderSet& s);

void write_weights_file(const std::string& path, const PredictorWeights& w);
PredictorWeights read_weights_file(const std::string& path);

// Spatial maps as PNG16 (affinely normalized, ranges recorded in the JSON)
// plus report.json with the scalars.
void write_uncertainty_report(const std::string& dir, const UncertaintyReport& rep, int n,
                              double eps, double dropout_rate, std::uint64_t rset_hash);

struct MetricsRow {
  std::string material;
  double l1_spec = 0.0;
  double l1_rough = 0.0;
  double angular_deg = 0.0;
  double pearson_spec = 0.0;   // NaN when undefined
  double pearson_rough = 0.0;  // NaN when undefined
  double l_brdf = 0.0;
  bool artifact = false;
};
void write_metrics_report(const std::string& csv_path, const std::string& json_path,
                          const std::vector<MetricsRow>& rows);

// One JSON per run plus a flat CSV (run, round, fraction, strategy, metric,
// value) across runs.
void write_active_logs(const std::string& dir, const std::vector<ActiveLearningState>& runs);

}  // namespace weft
