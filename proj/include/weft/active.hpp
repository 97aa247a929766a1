#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "weft/predictor.hpp"
#include "weft/render.hpp"
#include "weft/synth.hpp"
#include "weft/uncertainty.hpp"

namespace weft {

enum class Strategy { sigma_brdf, sigma_normals, sigma_spec, sigma_rough, random };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct ScoreContext {
  const RenderSet* rset = nullptr;
  int mc_n = 8;
  double eps = kDefaultEps;
  double grey = 0.5;
  std::uint64_t seed = 0;
};

// Pool materials ranked by acquisition score, descending, ties by id
// ascending. random ignores the model; per-map strategies use the spatial
// mean of that std map; sigma_brdf uses the scalar metric.
std::vector<std::pair<int, double>> score_pool(const PredictorWeights& w, const Dataset& ds,
                                               const std::vector<int>& pool_ids, Strategy st,
                                               const ScoreContext& ctx);

struct RoundRecord {
  int round = 0;
  double fraction = 0.0;
  std::vector<int> selected_ids;               // added this round
  std::vector<int> labeled_ids;                // cumulative, sorted
  std::vector<std::pair<int, double>> scores;  // pool ranking used for the selection
  double l_brdf = 0.0;
  double l1_spec = 0.0;
  double l1_rough = 0.0;
  double angular_deg = 0.0;
  double pearson_spec = 0.0;
  double pearson_rough = 0.0;
  int pearson_skipped = 0;  // test materials with undefined correlation
};

struct ActiveLearningState {
  Strategy strategy = Strategy::random;
  std::uint64_t master_seed = 0;
  std::vector<double> schedule;
  std::vector<RoundRecord> records;
};

struct ActiveConfig {
  std::vector<double> schedule = {0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  Strategy strategy = Strategy::sigma_brdf;
  int mc_n = 8;
  double eps = kDefaultEps;
  double grey = 0.5;
  int render_pairs = 20;
  std::uint64_t render_seed = 7;
};

// One full budget-growth experiment: train on a random 10%, then repeatedly
// score the pool, grow the labeled set to the next fraction, retrain from
// scratch, and evaluate on the test split. Deterministic per master seed.
ActiveLearningState run_loop(const Dataset& ds, const PredictorConfig& cfg,
                             const ActiveConfig& ac, std::uint64_t master_seed);

}  // namespace weft
