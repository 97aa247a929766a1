#include "weft/active.hpp"

#include <algorithm>
#include <cmath>

#include "weft/metrics.hpp"
#include "weft/numeric.hpp"

namespace weft {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ull;
constexpr std::uint64_t kScoreStream = 0x73636f7265ull;
constexpr std::uint64_t kTrainStream = 0x726f756e64ull;

void sort_ranked(std::vector<std::pair<int, double>>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
}

}  // namespace

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::sigma_brdf: return "sigma_brdf";
    case Strategy::sigma_normals: return "sigma_normals";
    case Strategy::sigma_spec: return "sigma_spec";
    case Strategy::sigma_rough: return "sigma_rough";
    case Strategy::random: return "random";
  }
  throw std::invalid_argument("unknown strategy");
}

Strategy strategy_from_name(const std::string& name) {
  for (Strategy s : {Strategy::sigma_brdf, Strategy::sigma_normals, Strategy::sigma_spec,
                     Strategy::sigma_rough, Strategy::random})
    if (strategy_name(s) == name) return s;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::vector<std::pair<int, double>> score_pool(const PredictorWeights& w, const Dataset& ds,
                                               const std::vector<int>& pool_ids, Strategy st,
                                               const ScoreContext& ctx) {
  if (pool_ids.empty()) throw std::invalid_argument("score_pool: empty pool");
  std::vector<std::pair<int, double>> ranked;
  ranked.reserve(pool_ids.size());
  for (int id : pool_ids) {
    double score;
    if (st == Strategy::random) {
      score = u64_to_unit_double(hash_combine(ctx.seed, static_cast<std::uint64_t>(id)));
    } else {
      const MaterialSample& m = ds.materials[static_cast<std::size_t>(id)];
      const SampleSet u =
          mc_sample(w, m.scan, ctx.mc_n, hash_combine(ctx.seed, static_cast<std::uint64_t>(id)));
      if (st == Strategy::sigma_brdf) {
        const ImageGrid k =
            constant_image(m.scan.width, m.scan.height, 1, ctx.grey, m.scan.ppi);
        score = sigma_brdf(u, *ctx.rset, k, ctx.eps).first;
      } else {
        const PerMapStd stds = per_map_std(u);
        const ImageGrid& map = st == Strategy::sigma_normals ? stds.normals
                               : st == Strategy::sigma_spec  ? stds.spec
                                                             : stds.rough;
        score = pairwise_mean(map.data);
      }
    }
    ranked.emplace_back(id, score);
  }
  sort_ranked(ranked);
  return ranked;
}

ActiveLearningState run_loop(const Dataset& ds, const PredictorConfig& cfg,
                             const ActiveConfig& ac, std::uint64_t master_seed) {
  const auto& sched = ac.schedule;
  if (sched.empty() || sched.front() < 0.05 || sched.back() != 1.0)
    throw std::invalid_argument("run_loop: schedule must start >= 0.05 and end at 1.0");
  for (std::size_t i = 1; i < sched.size(); ++i)
    if (sched[i] <= sched[i - 1])
      throw std::invalid_argument("run_loop: schedule must be strictly increasing");
  if (ds.materials.size() < 10)
    throw std::invalid_argument("run_loop: dataset smaller than 10 materials");
  if (ds.train_ids.empty() || ds.test_ids.empty())
    throw std::invalid_argument("run_loop: dataset has an empty split");

  const RenderSet rset = sample_render_set(ac.render_pairs, ac.render_seed);
  const int n_train = static_cast<int>(ds.train_ids.size());
  std::vector<int> counts(sched.size());
  for (std::size_t i = 0; i < sched.size(); ++i)
    counts[i] = std::max(1, static_cast<int>(std::lround(sched[i] * n_train)));
  counts.back() = n_train;

  std::vector<int> pool = ds.train_ids;
  std::vector<int> labeled;

  // Seed-chosen initial labeled set.
  {
    std::vector<int> shuffled = pool;
    Rng rng(hash_combine(master_seed, kInitStream));
    rng.shuffle(shuffled);
    shuffled.resize(static_cast<std::size_t>(counts[0]));
    labeled = shuffled;
  }

  ActiveLearningState state;
  state.strategy = ac.strategy;
  state.master_seed = master_seed;
  state.schedule = sched;

  PredictorWeights weights;
  for (std::size_t r = 0; r < sched.size(); ++r) {
    RoundRecord rec;
    rec.round = static_cast<int>(r);
    rec.fraction = sched[r];

    if (r == 0) {
      rec.selected_ids = labeled;
    } else {
      const int k_add = counts[r] - static_cast<int>(labeled.size());
      if (k_add > 0) {
        const ScoreContext ctx{&rset, ac.mc_n, ac.eps, ac.grey,
                               hash_combine(master_seed, kScoreStream + r)};
        rec.scores = score_pool(weights, ds, pool, ac.strategy, ctx);
        for (int i = 0; i < k_add; ++i) rec.selected_ids.push_back(rec.scores[i].first);
        labeled.insert(labeled.end(), rec.selected_ids.begin(), rec.selected_ids.end());
      }
    }
    std::sort(rec.selected_ids.begin(), rec.selected_ids.end());
    std::sort(labeled.begin(), labeled.end());
    pool.clear();
    std::set_difference(ds.train_ids.begin(), ds.train_ids.end(), labeled.begin(), labeled.end(),
                        std::back_inserter(pool));
    rec.labeled_ids = labeled;

    // Retrain from scratch; the init seed depends only on (master seed, round)
    // so the full-budget round is strategy-independent.
    PredictorConfig round_cfg = cfg;
    round_cfg.seed = hash_combine(master_seed, kTrainStream + r);
    std::vector<TrainingExample> examples;
    examples.reserve(labeled.size());
    for (int id : labeled)
      examples.push_back({&ds.materials[static_cast<std::size_t>(id)].scan,
                          &ds.materials[static_cast<std::size_t>(id)].gt});
    weights = train(examples, round_cfg).weights;

    // Held-out evaluation.
    double lb = 0.0, ls = 0.0, lr = 0.0, ang = 0.0, ps = 0.0, pr = 0.0;
    int pearson_n = 0;
    for (int id : ds.test_ids) {
      const MaterialSample& m = ds.materials[static_cast<std::size_t>(id)];
      const MapStack est = predict_deterministic(weights, m.scan);
      const ImageGrid k = constant_image(m.scan.width, m.scan.height, 1, ac.grey, m.scan.ppi);
      lb += brdf_distance(m.gt, est, rset, k).first;
      ls += map_l1(est.specular, m.gt.specular);
      lr += map_l1(est.roughness, m.gt.roughness);
      ang += angular_error(est.normals, m.gt.normals);
      try {
        const double a = pearson(est.specular, m.gt.specular);
        const double b = pearson(est.roughness, m.gt.roughness);
        ps += a;
        pr += b;
        ++pearson_n;
      } catch (const std::domain_error&) {
        ++rec.pearson_skipped;
      }
    }
    const double nt = static_cast<double>(ds.test_ids.size());
    rec.l_brdf = lb / nt;
    rec.l1_spec = ls / nt;
    rec.l1_rough = lr / nt;
    rec.angular_deg = ang / nt;
    rec.pearson_spec = pearson_n > 0 ? ps / pearson_n : 0.0;
    rec.pearson_rough = pearson_n > 0 ? pr / pearson_n : 0.0;

    state.records.push_back(std::move(rec));
  }
  return state;
}

}  // namespace weft
