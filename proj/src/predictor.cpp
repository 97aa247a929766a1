#include "weft/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "json.hpp"
#include "weft/numeric.hpp"

namespace weft {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696e21ull;

// Per-pixel dropout offsets the mask hash by the mc seed only; the pixel and
// unit coordinates make masks independent of evaluation order. The flat unit
// index spans the three per-head slices, so each head drops independently.
void fill_mask(std::vector<float>& mask, std::uint64_t seed, std::uint64_t pixel, double rate) {
  for (std::size_t u = 0; u < mask.size(); ++u)
    mask[u] = mlp::dropout_keep(seed, pixel, static_cast<int>(u), rate) ? 1.0f : 0.0f;
}

void gather_features(const ImageGrid& planes, int px, int py, int radius, float* out) {
  int idx = 0;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = std::clamp(py + dy, 0, planes.height - 1);
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = std::clamp(px + dx, 0, planes.width - 1);
      for (int c = 0; c < 3; ++c) out[idx++] = static_cast<float>(planes.at(x, y, c));
    }
  }
}

MapStack stack_for(const ImageGrid& input) {
  MapStack m;
  m.normals = NormalMap(input.width, input.height);
  m.specular = ImageGrid(input.width, input.height, 1, input.ppi);
  m.roughness = ImageGrid(input.width, input.height, 1, input.ppi);
  return m;
}

void store_pixel(MapStack& m, std::size_t p, const mlp::HeadOutputs& o) {
  m.normals.vectors[p] = {o.nx, o.ny, o.nz};
  m.specular.data[p] = o.spec;
  m.roughness.data[p] = o.rough;
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

void PredictorConfig::validate() const {
  if (patch_radius < 0) throw std::invalid_argument("predictor: patch_radius must be >= 0");
  if (hidden_widths.empty()) throw std::invalid_argument("predictor: hidden_widths empty");
  for (int w : hidden_widths)
    if (w < 1) throw std::invalid_argument("predictor: hidden width must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("predictor: dropout_rate must be in [0,1)");
  if (lambda_normals <= 0.0 || lambda_spec <= 0.0 || lambda_rough <= 0.0)
    throw std::invalid_argument("predictor: loss weights must be positive");
  if (learning_rate <= 0.0) throw std::invalid_argument("predictor: learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("predictor: epochs must be >= 1");
  if (batch_pixels < 1) throw std::invalid_argument("predictor: batch_pixels must be >= 1");
}

PredictorWeights init_predictor(const PredictorConfig& cfg) {
  cfg.validate();
  PredictorWeights w;
  w.config = cfg;
  w.net.resize(cfg.feature_dim(), cfg.hidden_widths);
  Rng rng(cfg.seed);
  mlp::xavier_init(w.net, rng);
  return w;
}

ImageGrid feature_planes(const ImageGrid& input) {
  const ImageGrid lum = luminance(input);
  ImageGrid planes(lum.width, lum.height, 3, lum.ppi);
  const int w = lum.width;
  const int h = lum.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = lum.at(x, y, 0);
      const double gx = (lum.at(std::min(x + 1, w - 1), y, 0) -
                         lum.at(std::max(x - 1, 0), y, 0)) * 0.5;
      const double gy = (lum.at(x, std::min(y + 1, h - 1), 0) -
                         lum.at(x, std::max(y - 1, 0), 0)) * 0.5;
      planes.at(x, y, 0) = c;
      planes.at(x, y, 1) = gx;
      planes.at(x, y, 2) = gy;
    }
  }
  return planes;
}

namespace {

// Shared by all predict flavors so the trunk math is identical everywhere.
template <typename Masker>
MapStack predict_impl(const PredictorWeights& w, const ImageGrid& input, Masker mask_for_pixel) {
  const ImageGrid planes = feature_planes(input);
  MapStack out = stack_for(input);
  const int r = w.config.patch_radius;
  const std::size_t td = static_cast<std::size_t>(w.net.trunk_dim());
  std::vector<float> x(w.config.feature_dim());
  std::vector<float> trunk;
  std::vector<float> dropped(3 * td);
  std::vector<float> mask(3 * td);
  std::size_t p = 0;
  for (int py = 0; py < input.height; ++py) {
    for (int px = 0; px < input.width; ++px, ++p) {
      gather_features(planes, px, py, r, x.data());
      mlp::trunk_forward(w.net, x.data(), trunk);
      mask_for_pixel(p, mask);
      for (std::size_t u = 0; u < 3 * td; ++u) dropped[u] = trunk[u % td] * mask[u];
      store_pixel(out, p, mlp::heads_forward(w.net, dropped.data()));
    }
  }
  return out;
}

}  // namespace

MapStack predict_deterministic(const PredictorWeights& w, const ImageGrid& input) {
  const float keep = static_cast<float>(1.0 - w.config.dropout_rate);
  return predict_impl(w, input, [keep](std::size_t, std::vector<float>& m) {
    std::fill(m.begin(), m.end(), keep);
  });
}

MapStack predict_stochastic(const PredictorWeights& w, const ImageGrid& input,
                            std::uint64_t seed) {
  const double rate = w.config.dropout_rate;
  return predict_impl(w, input, [seed, rate](std::size_t p, std::vector<float>& m) {
    fill_mask(m, seed, p, rate);
  });
}

std::vector<MapStack> predict_samples(const PredictorWeights& w, const ImageGrid& input, int n,
                                      std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("predict_samples: n must be >= 1");
  const ImageGrid planes = feature_planes(input);
  std::vector<MapStack> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) out.push_back(stack_for(input));
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) seeds[j] = hash_combine(seed, static_cast<std::uint64_t>(j));

  const int r = w.config.patch_radius;
  const double rate = w.config.dropout_rate;
  const std::size_t td = static_cast<std::size_t>(w.net.trunk_dim());
  std::vector<float> x(w.config.feature_dim());
  std::vector<float> trunk;
  std::vector<float> dropped(3 * td);
  std::vector<float> mask(3 * td);
  std::size_t p = 0;
  for (int py = 0; py < input.height; ++py) {
    for (int px = 0; px < input.width; ++px, ++p) {
      gather_features(planes, px, py, r, x.data());
      mlp::trunk_forward(w.net, x.data(), trunk);
      for (int j = 0; j < n; ++j) {
        fill_mask(mask, seeds[j], p, rate);
        for (std::size_t u = 0; u < 3 * td; ++u) dropped[u] = trunk[u % td] * mask[u];
        store_pixel(out[j], p, mlp::heads_forward(w.net, dropped.data()));
      }
    }
  }
  return out;
}

double loss_pixel(const MapStack& pred, const MapStack& gt, const mlp::LossWeights& lw) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw std::invalid_argument("loss_pixel: shape mismatch");
  const std::size_t n = pred.normals.pixel_count();
  std::vector<double> dn(n), ds(n), dr(n);
  for (std::size_t p = 0; p < n; ++p) {
    const Vec3& a = pred.normals.vectors[p];
    const Vec3& b = gt.normals.vectors[p];
    dn[p] = (std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z)) / 3.0;
    ds[p] = std::abs(pred.specular.data[p] - gt.specular.data[p]);
    dr[p] = std::abs(pred.roughness.data[p] - gt.roughness.data[p]);
  }
  return lw.normals * pairwise_mean(dn) + lw.spec * pairwise_mean(ds) +
         lw.rough * pairwise_mean(dr);
}

TrainResult train(const std::vector<TrainingExample>& dataset, const PredictorConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& ex : dataset) {
    if (!ex.input || !ex.gt) throw std::invalid_argument("train: null example");
    if (ex.input->width != ex.gt->width() || ex.input->height != ex.gt->height())
      throw std::invalid_argument("train: input and ground truth disagree in size");
  }

  TrainResult res;
  res.weights = init_predictor(cfg);
  mlp::Net<float>& net = res.weights.net;
  mlp::Net<float> grad;
  grad.resize(cfg.feature_dim(), cfg.hidden_widths);

  Rng rng(hash_combine(cfg.seed, kTrainStream));
  const mlp::LossWeights lw{cfg.lambda_normals, cfg.lambda_spec, cfg.lambda_rough};
  const int td = net.trunk_dim();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_pixels);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<float>> xs(batch, std::vector<float>(cfg.feature_dim()));
  std::vector<mlp::PixelTarget> targets(batch);
  std::vector<std::vector<float>> masks(batch, std::vector<float>(3 * td));

  const auto params = mlp::parameters(net);
  const auto gparams = mlp::parameters(grad);
  const float lr = static_cast<float>(cfg.learning_rate);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t mi : order) {
      const TrainingExample& ex = dataset[mi];
      const ImageGrid planes = feature_planes(*ex.input);
      const std::size_t npx = planes.pixel_count();
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t p = rng.below(npx);
        const int px = static_cast<int>(p % planes.width);
        const int py = static_cast<int>(p / planes.width);
        gather_features(planes, px, py, cfg.patch_radius, xs[b].data());
        const Vec3& nv = ex.gt->normals.vectors[p];
        targets[b] = {nv.x, nv.y, nv.z, ex.gt->specular.data[p], ex.gt->roughness.data[p]};
        for (int u = 0; u < 3 * td; ++u)
          masks[b][u] = rng.uniform() >= cfg.dropout_rate ? 1.0f : 0.0f;
      }
      const double loss = mlp::batch_loss(net, xs, targets, masks, lw, &grad);
      if (!std::isfinite(loss)) throw std::runtime_error("train: loss diverged (non-finite)");
      for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= lr * *gparams[i];
      epoch_loss += loss;
    }
    res.loss_curve.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  return res;
}

std::vector<std::uint8_t> save_weights(const PredictorWeights& w) {
  nlohmann::json j{{"patch_radius", w.config.patch_radius},
                   {"hidden_widths", w.config.hidden_widths},
                   {"dropout_rate", w.config.dropout_rate},
                   {"lambda_normals", w.config.lambda_normals},
                   {"lambda_spec", w.config.lambda_spec},
                   {"lambda_rough", w.config.lambda_rough},
                   {"learning_rate", w.config.learning_rate},
                   {"epochs", w.config.epochs},
                   {"batch_pixels", w.config.batch_pixels},
                   {"seed", w.config.seed}};
  const std::string cfg = j.dump();

  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'U', 'M', 'T', 'K'});
  append_u32(out, 1);
  append_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.insert(out.end(), cfg.begin(), cfg.end());

  for (const float* p : mlp::parameters(w.net)) {
    std::uint32_t bits;
    std::memcpy(&bits, p, 4);
    append_u32(out, bits);
  }
  return out;
}

PredictorWeights load_weights(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || bytes[0] != 'U' || bytes[1] != 'M' || bytes[2] != 'T' ||
      bytes[3] != 'K')
    throw std::runtime_error("weights: corrupt payload (bad magic)");
  const std::uint32_t version = read_u32(bytes, 4);
  if (version != 1)
    throw std::runtime_error("weights: unsupported format version " + std::to_string(version));
  const std::uint32_t jlen = read_u32(bytes, 8);
  if (bytes.size() < 12 + static_cast<std::size_t>(jlen))
    throw std::runtime_error("weights: corrupt payload (truncated config)");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + jlen);
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("weights: corrupt payload (bad config blob)");
  }
  PredictorConfig cfg;
  try {
    cfg.patch_radius = j.at("patch_radius").get<int>();
    cfg.hidden_widths = j.at("hidden_widths").get<std::vector<int>>();
    cfg.dropout_rate = j.at("dropout_rate").get<double>();
    cfg.lambda_normals = j.at("lambda_normals").get<double>();
    cfg.lambda_spec = j.at("lambda_spec").get<double>();
    cfg.lambda_rough = j.at("lambda_rough").get<double>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.batch_pixels = j.at("batch_pixels").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("weights: corrupt payload (missing config field)");
  }
  cfg.validate();

  PredictorWeights w;
  w.config = cfg;
  w.net.resize(cfg.feature_dim(), cfg.hidden_widths);
  const auto params = mlp::parameters(w.net);
  const std::size_t need = 12 + jlen + 4 * params.size();
  if (bytes.size() != need)
    throw std::runtime_error("weights: corrupt payload (tensor size mismatch)");
  std::size_t at = 12 + jlen;
  for (float* p : params) {
    const std::uint32_t bits = read_u32(bytes, at);
    std::memcpy(p, &bits, 4);
    at += 4;
  }
  return w;
}

}  // namespace weft
