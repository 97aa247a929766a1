#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weft/image.hpp"
#include "weft/maps.hpp"
#include "weft/mlp.hpp"

namespace weft {

struct PredictorConfig {
  int patch_radius = 2;
  std::vector<int> hidden_widths = {32, 32};
  double dropout_rate = 0.2;
  double lambda_normals = 1.0;
  double lambda_spec = 1.0;
  double lambda_rough = 1.0;
  double learning_rate = 0.05;
  int epochs = 30;
  int batch_pixels = 512;
  std::uint64_t seed = 0;

  int feature_dim() const {
    const int side = 2 * patch_radius + 1;
    return 3 * side * side;
  }
  void validate() const;
};

struct PredictorWeights {
  PredictorConfig config;
  mlp::Net<float> net;
};

// Fresh Xavier-initialized weights (biases zero), deterministic per config seed.
PredictorWeights init_predictor(const PredictorConfig& cfg);

// Per-pixel feature planes for the patch gather: luminance plus central
// difference gradients, replicate padding at the border.
ImageGrid feature_planes(const ImageGrid& input);

MapStack predict_deterministic(const PredictorWeights& w, const ImageGrid& input);
MapStack predict_stochastic(const PredictorWeights& w, const ImageGrid& input,
                            std::uint64_t seed);

// n stochastic passes with masks derived from hash(seed, sample index).
// Identical to n predict_stochastic calls; the shared trunk is evaluated once.
std::vector<MapStack> predict_samples(const PredictorWeights& w, const ImageGrid& input, int n,
                                      std::uint64_t seed);

// Weighted L1 over the stacks: lambda_n * mean |normal component diff|
// + lambda_s * mean |spec diff| + lambda_r * mean |rough diff|.
double loss_pixel(const MapStack& pred, const MapStack& gt, const mlp::LossWeights& lw);

struct TrainingExample {
  const ImageGrid* input = nullptr;
  const MapStack* gt = nullptr;
};

struct TrainResult {
  PredictorWeights weights;
  std::vector<double> loss_curve;  // mean batch loss per epoch
};

// Mini-batch SGD with dropout at the trunk-head boundary; one batch of
// batch_pixels per material per epoch, material order reshuffled each epoch.
TrainResult train(const std::vector<TrainingExample>& dataset, const PredictorConfig& cfg);

std::vector<std::uint8_t> save_weights(const PredictorWeights& w);
PredictorWeights load_weights(const std::vector<std::uint8_t>& bytes);

}  // namespace weft
