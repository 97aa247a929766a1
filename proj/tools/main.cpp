// Command-line workbench: dataset synthesis, training, prediction, metrics,
// uncertainty, artifact screening, active learning, rendering, threshold
// calibration. Every command echoes its resolved options to config.json in
// the output directory; `rerun` replays such a file into a fresh directory.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "weft/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace weft;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json jnum(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

void write_echo(const std::string& dir, const json& echo) {
  write_text_file(dir + "/config.json", echo.dump(2) + "\n");
}

std::vector<std::string> family_names() {
  std::vector<std::string> out;
  for (MaterialFamily f : all_families()) out.push_back(family_name(f));
  return out;
}

std::vector<MaterialFamily> families_from(const std::vector<std::string>& names) {
  std::vector<MaterialFamily> out;
  for (const std::string& n : names) out.push_back(family_from_name(n));
  return out;
}

std::vector<std::string> strategy_names() {
  return {strategy_name(Strategy::sigma_brdf), strategy_name(Strategy::sigma_normals),
          strategy_name(Strategy::sigma_spec), strategy_name(Strategy::sigma_rough),
          strategy_name(Strategy::random)};
}

Dataset to_dataset(DatasetOnDisk&& dd) {
  Dataset ds;
  ds.seed = dd.seed;
  ds.ppi = dd.ppi;
  ds.size = dd.materials.empty() ? 0 : dd.materials.front().scan.width;
  ds.train_ids = std::move(dd.train_ids);
  ds.test_ids = std::move(dd.test_ids);
  for (std::size_t i = 0; i < dd.materials.size(); ++i) {
    MaterialOnDisk& m = dd.materials[i];
    MaterialSample s;
    s.id = static_cast<int>(i);
    s.family = m.family;
    s.gt = std::move(m.gt);
    s.scan = std::move(m.scan);
    s.seed = m.seed;
    s.ppi = m.ppi;
    ds.materials.push_back(std::move(s));
  }
  return ds;
}

// predictor knobs shared by train and active
struct PredictorOpts {
  int patch_radius = 2;
  std::vector<int> hidden = {32, 32};
  double dropout = 0.2;
  double lambda_normals = 1.0;
  double lambda_spec = 1.0;
  double lambda_rough = 1.0;
  double learning_rate = 0.05;
  int epochs = 30;
  int batch_pixels = 512;
};

void add_predictor_flags(CLI::App* c, PredictorOpts& p) {
  c->add_option("--patch-radius", p.patch_radius, "input patch radius in pixels");
  c->add_option("--hidden", p.hidden, "trunk layer widths")->delimiter(',');
  c->add_option("--dropout", p.dropout, "dropout rate on trunk outputs");
  c->add_option("--lambda-normals", p.lambda_normals, "normals loss weight");
  c->add_option("--lambda-spec", p.lambda_spec, "specular loss weight");
  c->add_option("--lambda-rough", p.lambda_rough, "roughness loss weight");
  c->add_option("--learning-rate", p.learning_rate, "SGD step size");
  c->add_option("--epochs", p.epochs, "training epochs");
  c->add_option("--batch-pixels", p.batch_pixels, "pixels per SGD batch");
}

PredictorConfig to_config(const PredictorOpts& p, std::uint64_t seed) {
  PredictorConfig cfg;
  cfg.patch_radius = p.patch_radius;
  cfg.hidden_widths = p.hidden;
  cfg.dropout_rate = p.dropout;
  cfg.lambda_normals = p.lambda_normals;
  cfg.lambda_spec = p.lambda_spec;
  cfg.lambda_rough = p.lambda_rough;
  cfg.learning_rate = p.learning_rate;
  cfg.epochs = p.epochs;
  cfg.batch_pixels = p.batch_pixels;
  cfg.seed = seed;
  return cfg;
}

json predictor_echo(const PredictorOpts& p) {
  return {{"patch_radius", p.patch_radius},
          {"hidden", p.hidden},
          {"dropout", p.dropout},
          {"lambda_normals", p.lambda_normals},
          {"lambda_spec", p.lambda_spec},
          {"lambda_rough", p.lambda_rough},
          {"learning_rate", p.learning_rate},
          {"epochs", p.epochs},
          {"batch_pixels", p.batch_pixels}};
}

PredictorOpts predictor_parse(const json& j) {
  PredictorOpts p;
  p.patch_radius = j.at("patch_radius").get<int>();
  p.hidden = j.at("hidden").get<std::vector<int>>();
  p.dropout = j.at("dropout").get<double>();
  p.lambda_normals = j.at("lambda_normals").get<double>();
  p.lambda_spec = j.at("lambda_spec").get<double>();
  p.lambda_rough = j.at("lambda_rough").get<double>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.epochs = j.at("epochs").get<int>();
  p.batch_pixels = j.at("batch_pixels").get<int>();
  return p;
}

// evaluation render set: either a pair file or sampled on the fly
struct RenderSetOpts {
  std::string file;
  int pairs = 20;
  std::uint64_t seed = 7;
};

void add_render_set_flags(CLI::App* c, RenderSetOpts& r) {
  c->add_option("--render-set", r.file, "light/view pair file, overrides sampling");
  c->add_option("--render-pairs", r.pairs, "sampled light/view pair count");
  c->add_option("--render-seed", r.seed, "render set sampling seed");
}

RenderSet resolve_render_set(const RenderSetOpts& r) {
  return r.file.empty() ? sample_render_set(r.pairs, r.seed) : read_render_set(r.file);
}

json render_set_echo(const RenderSetOpts& r) {
  return {{"file", r.file}, {"pairs", r.pairs}, {"seed", r.seed}};
}

RenderSetOpts render_set_parse(const json& j) {
  RenderSetOpts r;
  r.file = j.at("file").get<std::string>();
  r.pairs = j.at("pairs").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

// ---- synth ----

struct SynthOpts {
  int per_family = 0;
  std::vector<std::string> families = family_names();
  int size = 128;
  double ppi = 200.0;
  std::uint64_t seed = 0;
};

json synth_echo(const SynthOpts& o) {
  return {{"command", "synth"},     {"per_family", o.per_family}, {"families", o.families},
          {"size", o.size},         {"ppi", o.ppi},               {"seed", o.seed}};
}

SynthOpts synth_parse(const json& j) {
  SynthOpts o;
  o.per_family = j.at("per_family").get<int>();
  o.families = j.at("families").get<std::vector<std::string>>();
  o.size = j.at("size").get<int>();
  o.ppi = j.at("ppi").get<double>();
  o.seed = j.at("seed").get<std::uint64_t>();
  return o;
}

int run_synth(const SynthOpts& o, const std::string& out) {
  const Dataset ds = make_dataset(o.per_family, families_from(o.families), o.seed, o.size, o.ppi);
  write_dataset(out, ds);
  write_echo(out, synth_echo(o));
  std::printf("wrote %zu materials (%zu train / %zu test) to %s\n", ds.materials.size(),
              ds.train_ids.size(), ds.test_ids.size(), out.c_str());
  return 0;
}

// ---- train ----

struct TrainOpts {
  std::string dataset;
  PredictorOpts p;
  std::uint64_t seed = 0;
};

json train_echo(const TrainOpts& o) {
  json j = {{"command", "train"}, {"input", o.dataset}, {"seed", o.seed}};
  j["predictor"] = predictor_echo(o.p);
  return j;
}

TrainOpts train_parse(const json& j) {
  TrainOpts o;
  o.dataset = j.at("input").get<std::string>();
  o.p = predictor_parse(j.at("predictor"));
  o.seed = j.at("seed").get<std::uint64_t>();
  return o;
}

int run_train(const TrainOpts& o, const std::string& out) {
  const DatasetOnDisk dd = read_dataset(o.dataset);
  std::vector<TrainingExample> examples;
  for (int id : dd.train_ids)
    examples.push_back({&dd.materials[static_cast<std::size_t>(id)].scan,
                        &dd.materials[static_cast<std::size_t>(id)].gt});
  const TrainResult r = train(examples, to_config(o.p, o.seed));
  fs::create_directories(out);
  write_weights_file(out + "/weights.bin", r.weights);
  std::string csv = "epoch,loss\n";
  for (std::size_t i = 0; i < r.loss_curve.size(); ++i)
    csv += std::to_string(i) + "," + fmt17(r.loss_curve[i]) + "\n";
  write_text_file(out + "/loss_curve.csv", csv);
  write_echo(out, train_echo(o));
  std::printf("trained on %zu materials, final loss %s\n", examples.size(),
              r.loss_curve.empty() ? "n/a" : fmt17(r.loss_curve.back()).c_str());
  return 0;
}

// ---- predict ----

struct PredictOpts {
  std::string input;
  std::string weights;
};

json predict_echo(const PredictOpts& o) {
  return {{"command", "predict"}, {"input", o.input}, {"weights", o.weights}};
}

PredictOpts predict_parse(const json& j) {
  PredictOpts o;
  o.input = j.at("input").get<std::string>();
  o.weights = j.at("weights").get<std::string>();
  return o;
}

int run_predict(const PredictOpts& o, const std::string& out) {
  const ImageGrid scan = read_png16(o.input);
  const PredictorWeights w = read_weights_file(o.weights);
  const MapStack est = predict_deterministic(w, scan);
  fs::create_directories(out);
  write_png16(out + "/normals.png", encode_normals(est.normals));
  write_png16(out + "/specular.png", est.specular);
  write_png16(out + "/roughness.png", est.roughness);
  write_echo(out, predict_echo(o));
  std::printf("predicted %dx%d maps to %s\n", est.width(), est.height(), out.c_str());
  return 0;
}

// ---- metrics ----

struct MetricsOpts {
  std::string est;
  std::string reference;
  RenderSetOpts rset;
  double grey = 0.5;
  std::string thresholds;
};

json metrics_echo(const MetricsOpts& o) {
  json j = {{"command", "metrics"},
            {"input", o.est},
            {"reference", o.reference},
            {"grey", o.grey},
            {"thresholds", o.thresholds}};
  j["render_set"] = render_set_echo(o.rset);
  return j;
}

MetricsOpts metrics_parse(const json& j) {
  MetricsOpts o;
  o.est = j.at("input").get<std::string>();
  o.reference = j.at("reference").get<std::string>();
  o.rset = render_set_parse(j.at("render_set"));
  o.grey = j.at("grey").get<double>();
  o.thresholds = j.at("thresholds").get<std::string>();
  return o;
}

int run_metrics(const MetricsOpts& o, const std::string& out) {
  const MaterialOnDisk ref = read_material_dir(o.reference);
  const MapStack est = read_stack_dir(o.est, ref.ppi);
  const RenderSet rset = resolve_render_set(o.rset);
  const ImageGrid k =
      constant_image(ref.gt.width(), ref.gt.height(), 1, o.grey, ref.ppi);
  const ArtifactThresholds th =
      o.thresholds.empty() ? ArtifactThresholds{} : read_thresholds(o.thresholds);

  MetricsRow row;
  row.material = ref.name;
  row.l1_spec = map_l1(est.specular, ref.gt.specular);
  row.l1_rough = map_l1(est.roughness, ref.gt.roughness);
  row.angular_deg = angular_error(est.normals, ref.gt.normals);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    row.pearson_spec = pearson(est.specular, ref.gt.specular);
  } catch (const std::domain_error&) {
    row.pearson_spec = nan;
  }
  try {
    row.pearson_rough = pearson(est.roughness, ref.gt.roughness);
  } catch (const std::domain_error&) {
    row.pearson_rough = nan;
  }
  row.l_brdf = brdf_distance(ref.gt, est, rset, k).first;
  row.artifact = detect_artifacts(ref.scan, est, th).stack_flagged;

  fs::create_directories(out);
  write_metrics_report(out + "/metrics.csv", out + "/metrics.json", {row});
  write_echo(out, metrics_echo(o));
  std::printf("%s: l_brdf %s, angular %s deg, artifact %s\n", row.material.c_str(),
              fmt17(row.l_brdf).c_str(), fmt17(row.angular_deg).c_str(),
              row.artifact ? "yes" : "no");
  return 0;
}

// ---- uncertainty ----

struct UncertaintyOpts {
  std::string input;
  std::string weights;
  int mc_samples = 16;
  std::uint64_t seed = 0;
  double eps = kDefaultEps;
  double grey = 0.5;
  double dropout = -1.0;  // < 0 keeps the rate stored with the weights
  RenderSetOpts rset;
};

json uncertainty_echo(const UncertaintyOpts& o) {
  json j = {{"command", "uncertainty"},
            {"input", o.input},
            {"weights", o.weights},
            {"mc_samples", o.mc_samples},
            {"seed", o.seed},
            {"eps", o.eps},
            {"grey", o.grey},
            {"dropout", o.dropout}};
  j["render_set"] = render_set_echo(o.rset);
  return j;
}

UncertaintyOpts uncertainty_parse(const json& j) {
  UncertaintyOpts o;
  o.input = j.at("input").get<std::string>();
  o.weights = j.at("weights").get<std::string>();
  o.mc_samples = j.at("mc_samples").get<int>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.eps = j.at("eps").get<double>();
  o.grey = j.at("grey").get<double>();
  o.dropout = j.at("dropout").get<double>();
  o.rset = render_set_parse(j.at("render_set"));
  return o;
}

int run_uncertainty(const UncertaintyOpts& o, const std::string& out) {
  const ImageGrid scan = read_png16(o.input);
  PredictorWeights w = read_weights_file(o.weights);
  if (o.dropout >= 0.0) {
    w.config.dropout_rate = o.dropout;
    w.config.validate();
  }
  const RenderSet rset = resolve_render_set(o.rset);
  const SampleSet u = mc_sample(w, scan, o.mc_samples, o.seed);
  const ImageGrid k = constant_image(scan.width, scan.height, 1, o.grey, scan.ppi);
  const UncertaintyReport rep = build_report(u, rset, k, o.eps);
  const double sigma = rep.sigma_brdf;
  fs::create_directories(out);
  write_uncertainty_report(out, rep, u.n(), o.eps, w.config.dropout_rate,
                           render_set_hash(rset));
  write_echo(out, uncertainty_echo(o));
  std::printf("sigma_brdf %s over %d samples to %s\n", fmt17(sigma).c_str(), u.n(),
              out.c_str());
  return 0;
}

// ---- artifact ----

struct ArtifactOpts {
  std::string input;
  std::string maps;
  double ppi = 0.0;
  std::string thresholds;
};

json artifact_echo(const ArtifactOpts& o) {
  return {{"command", "artifact"},
          {"input", o.input},
          {"maps", o.maps},
          {"ppi", o.ppi},
          {"thresholds", o.thresholds}};
}

ArtifactOpts artifact_parse(const json& j) {
  ArtifactOpts o;
  o.input = j.at("input").get<std::string>();
  o.maps = j.at("maps").get<std::string>();
  o.ppi = j.at("ppi").get<double>();
  o.thresholds = j.at("thresholds").get<std::string>();
  return o;
}

json map_artifact_json(const MapArtifact& a) {
  return {{"e1", jnum(a.e1)}, {"e2", jnum(a.e2)}, {"e3", jnum(a.e3)}, {"flagged", a.flagged}};
}

int run_artifact(const ArtifactOpts& o, const std::string& out) {
  ImageGrid scan = read_png16(o.input);
  scan.ppi = o.ppi;
  const MapStack stack = read_stack_dir(o.maps, o.ppi);
  const ArtifactThresholds th =
      o.thresholds.empty() ? ArtifactThresholds{} : read_thresholds(o.thresholds);
  const ArtifactReport rep = detect_artifacts(scan, stack, th);
  json j = {{"box_size", box_size_for_ppi(th.box_size_factor, o.ppi)},
            {"specular", map_artifact_json(rep.specular)},
            {"roughness", map_artifact_json(rep.roughness)},
            {"stack_flagged", rep.stack_flagged}};
  fs::create_directories(out);
  write_text_file(out + "/artifact.json", j.dump(2) + "\n");
  write_echo(out, artifact_echo(o));
  std::printf("stack %s\n", rep.stack_flagged ? "flagged" : "clean");
  return 0;
}

// ---- active ----

struct ActiveOpts {
  std::string dataset;
  std::string strategy = strategy_name(Strategy::sigma_brdf);
  int runs = 5;
  std::uint64_t seed = 0;
  std::vector<double> schedule = {0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  int mc_samples = 8;
  double eps = kDefaultEps;
  double grey = 0.5;
  int render_pairs = 20;
  std::uint64_t render_seed = 7;
  PredictorOpts p;
};

json active_echo(const ActiveOpts& o) {
  json j = {{"command", "active"},       {"input", o.dataset},
            {"strategy", o.strategy},    {"runs", o.runs},
            {"seed", o.seed},            {"schedule", o.schedule},
            {"mc_samples", o.mc_samples}, {"eps", o.eps},
            {"grey", o.grey},            {"render_pairs", o.render_pairs},
            {"render_seed", o.render_seed}};
  j["predictor"] = predictor_echo(o.p);
  return j;
}

ActiveOpts active_parse(const json& j) {
  ActiveOpts o;
  o.dataset = j.at("input").get<std::string>();
  o.strategy = j.at("strategy").get<std::string>();
  o.runs = j.at("runs").get<int>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.schedule = j.at("schedule").get<std::vector<double>>();
  o.mc_samples = j.at("mc_samples").get<int>();
  o.eps = j.at("eps").get<double>();
  o.grey = j.at("grey").get<double>();
  o.render_pairs = j.at("render_pairs").get<int>();
  o.render_seed = j.at("render_seed").get<std::uint64_t>();
  o.p = predictor_parse(j.at("predictor"));
  return o;
}

int run_active(const ActiveOpts& o, const std::string& out) {
  const Dataset ds = to_dataset(read_dataset(o.dataset));
  ActiveConfig ac;
  ac.schedule = o.schedule;
  ac.strategy = strategy_from_name(o.strategy);
  ac.mc_n = o.mc_samples;
  ac.eps = o.eps;
  ac.grey = o.grey;
  ac.render_pairs = o.render_pairs;
  ac.render_seed = o.render_seed;
  const PredictorConfig cfg = to_config(o.p, 0);
  std::vector<ActiveLearningState> states;
  for (int i = 0; i < o.runs; ++i)
    states.push_back(run_loop(ds, cfg, ac, o.seed + static_cast<std::uint64_t>(i)));
  fs::create_directories(out);
  write_active_logs(out, states);
  write_echo(out, active_echo(o));
  double last = 0.0;
  for (const ActiveLearningState& s : states) last += s.records.back().l_brdf;
  std::printf("%d %s runs, mean full-budget l_brdf %s\n", o.runs, o.strategy.c_str(),
              fmt17(last / o.runs).c_str());
  return 0;
}

// ---- render ----

struct RenderOpts {
  std::string maps;
  std::vector<double> light = {0.0, 0.0, 1.0};
  std::vector<double> view = {0.0, 0.0, 1.0};
  double grey = 0.5;
  std::string albedo;
};

json render_echo(const RenderOpts& o) {
  return {{"command", "render"}, {"maps", o.maps},   {"light", o.light},
          {"view", o.view},      {"grey", o.grey},   {"albedo", o.albedo}};
}

RenderOpts render_parse(const json& j) {
  RenderOpts o;
  o.maps = j.at("maps").get<std::string>();
  o.light = j.at("light").get<std::vector<double>>();
  o.view = j.at("view").get<std::vector<double>>();
  o.grey = j.at("grey").get<double>();
  o.albedo = j.at("albedo").get<std::string>();
  return o;
}

int run_render(const RenderOpts& o, const std::string& out) {
  const MapStack m = read_stack_dir(o.maps, 0.0);
  const Direction l = direction_from({o.light[0], o.light[1], o.light[2]});
  const Direction v = direction_from({o.view[0], o.view[1], o.view[2]});
  const ImageGrid albedo = o.albedo.empty()
                               ? constant_image(m.width(), m.height(), 3, o.grey)
                               : read_png16(o.albedo);
  const ImageGrid img = shade(m, albedo, l, v);
  fs::create_directories(out);
  write_png16(out + "/render.png", img);
  write_echo(out, render_echo(o));
  std::printf("rendered %dx%d to %s\n", img.width, img.height, out.c_str());
  return 0;
}

// ---- calibrate ----

struct CalibrateOpts {
  int n = 50;
  int size = 128;
  double ppi = 200.0;
  double amplitude = 0.3;
  std::vector<std::string> families = family_names();
  std::uint64_t seed = 0;
};

json calibrate_echo(const CalibrateOpts& o) {
  return {{"command", "calibrate"}, {"n", o.n},
          {"size", o.size},         {"ppi", o.ppi},
          {"amplitude", o.amplitude}, {"families", o.families},
          {"seed", o.seed}};
}

CalibrateOpts calibrate_parse(const json& j) {
  CalibrateOpts o;
  o.n = j.at("n").get<int>();
  o.size = j.at("size").get<int>();
  o.ppi = j.at("ppi").get<double>();
  o.amplitude = j.at("amplitude").get<double>();
  o.families = j.at("families").get<std::vector<std::string>>();
  o.seed = j.at("seed").get<std::uint64_t>();
  return o;
}

// zero-mean square wave: +amplitude/2 and -amplitude/2 in period-sized cells
void add_checkerboard(ImageGrid& img, int period, double amplitude) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double s = ((x / period + y / period) % 2 == 0) ? 0.5 : -0.5;
      const double v = img.at(x, y, 0) + amplitude * s;
      img.at(x, y, 0) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
}

struct MetricSpread {
  double clean_max = 0.0;
  double corrupt_min = std::numeric_limits<double>::infinity();
};

MetricSpread spread_of(const std::vector<MapArtifact>& clean,
                       const std::vector<MapArtifact>& corrupt, double MapArtifact::*e) {
  MetricSpread s;
  for (const MapArtifact& a : clean) s.clean_max = std::max(s.clean_max, a.*e);
  for (const MapArtifact& a : corrupt) s.corrupt_min = std::min(s.corrupt_min, a.*e);
  return s;
}

// Threshold roles under the 2-of-3 vote. Absolute homogeneity (e1) separates
// clean from corrupted outright: geometric midpoint of its gap. Relative
// homogeneity (e2) tracks e1 within a material but its range across materials
// overlaps, so it is pinned low enough to co-fire on every corrupted sample
// and supplies the second vote. Inverse mutual information (e3) barely moves
// under periodic injection; setting it above everything clean ever reached
// makes it the veto that keeps e2-heavy clean stacks at a single vote.
MapThresholds tune_map(const MetricSpread& s1, const MetricSpread& s2,
                       const MetricSpread& s3) {
  return {std::sqrt(s1.clean_max * s1.corrupt_min), s2.corrupt_min / 2.0, 2.0 * s3.clean_max};
}

json spread_json(const MetricSpread& s, double t) {
  return {{"clean_max", jnum(s.clean_max)},
          {"corrupt_min", jnum(s.corrupt_min)},
          {"threshold", jnum(t)}};
}

bool vote_flag(const MapArtifact& a, const MapThresholds& t) {
  return (a.e1 > t.t1) + (a.e2 > t.t2) + (a.e3 > t.t3) >= 2;
}

int run_calibrate(const CalibrateOpts& o, const std::string& out) {
  if (o.n < 2) throw std::invalid_argument("calibrate: need at least 2 materials");
  const std::vector<MaterialFamily> fams = families_from(o.families);
  const ArtifactThresholds probe;  // only its box factor matters here
  const int box = box_size_for_ppi(probe.box_size_factor, o.ppi);

  std::vector<MapArtifact> clean_spec, clean_rough, bad_spec, bad_rough;
  for (int i = 0; i < o.n; ++i) {
    const MaterialFamily f = fams[static_cast<std::size_t>(i) % fams.size()];
    const MaterialSample m =
        generate_material(f, o.seed + static_cast<std::uint64_t>(i), o.size, o.ppi);
    const ArtifactReport clean = detect_artifacts(m.scan, m.gt, probe);
    clean_spec.push_back(clean.specular);
    clean_rough.push_back(clean.roughness);
    MapStack corrupt = m.gt;
    add_checkerboard(corrupt.specular, box, o.amplitude);
    bad_spec.push_back(detect_artifacts(m.scan, corrupt, probe).specular);
    corrupt = m.gt;
    add_checkerboard(corrupt.roughness, box, o.amplitude);
    bad_rough.push_back(detect_artifacts(m.scan, corrupt, probe).roughness);
  }

  const MetricSpread s1 = spread_of(clean_spec, bad_spec, &MapArtifact::e1);
  const MetricSpread s2 = spread_of(clean_spec, bad_spec, &MapArtifact::e2);
  const MetricSpread s3 = spread_of(clean_spec, bad_spec, &MapArtifact::e3);
  const MetricSpread r1 = spread_of(clean_rough, bad_rough, &MapArtifact::e1);
  const MetricSpread r2 = spread_of(clean_rough, bad_rough, &MapArtifact::e2);
  const MetricSpread r3 = spread_of(clean_rough, bad_rough, &MapArtifact::e3);

  ArtifactThresholds tuned;
  tuned.specular = tune_map(s1, s2, s3);
  tuned.roughness = tune_map(r1, r2, r3);
  tuned.box_size_factor = probe.box_size_factor;

  int fp = 0, det_s = 0, det_r = 0;
  for (int i = 0; i < o.n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    if (vote_flag(clean_spec[k], tuned.specular) || vote_flag(clean_rough[k], tuned.roughness))
      ++fp;
    if (vote_flag(bad_spec[k], tuned.specular)) ++det_s;
    if (vote_flag(bad_rough[k], tuned.roughness)) ++det_r;
  }

  fs::create_directories(out);
  write_thresholds(out + "/thresholds.json", tuned);
  const json report = {{"n", o.n},
                       {"box_size", box},
                       {"specular",
                        {{"e1", spread_json(s1, tuned.specular.t1)},
                         {"e2", spread_json(s2, tuned.specular.t2)},
                         {"e3", spread_json(s3, tuned.specular.t3)}}},
                       {"roughness",
                        {{"e1", spread_json(r1, tuned.roughness.t1)},
                         {"e2", spread_json(r2, tuned.roughness.t2)},
                         {"e3", spread_json(r3, tuned.roughness.t3)}}},
                       {"clean_stack_false_positives", fp},
                       {"specular_corruption_detected", det_s},
                       {"roughness_corruption_detected", det_r}};
  write_text_file(out + "/calibration.json", report.dump(2) + "\n");
  write_echo(out, calibrate_echo(o));
  std::printf("thresholds written; clean FP %d/%d, detected spec %d/%d rough %d/%d\n", fp,
              o.n, det_s, o.n, det_r, o.n);
  return 0;
}

// ---- rerun ----

int rerun_from(const std::string& config_path, const std::string& out) {
  const json j = json::parse(read_text_file(config_path));
  const std::string cmd = j.at("command").get<std::string>();
  if (cmd == "synth") return run_synth(synth_parse(j), out);
  if (cmd == "train") return run_train(train_parse(j), out);
  if (cmd == "predict") return run_predict(predict_parse(j), out);
  if (cmd == "metrics") return run_metrics(metrics_parse(j), out);
  if (cmd == "uncertainty") return run_uncertainty(uncertainty_parse(j), out);
  if (cmd == "artifact") return run_artifact(artifact_parse(j), out);
  if (cmd == "active") return run_active(active_parse(j), out);
  if (cmd == "render") return run_render(render_parse(j), out);
  if (cmd == "calibrate") return run_calibrate(calibrate_parse(j), out);
  throw std::runtime_error("rerun: unknown command " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic material capture workbench"};
  app.require_subcommand(1);

  SynthOpts so;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a stratified synthetic dataset");
  synth->add_option("--output", synth_out, "dataset directory")->required();
  synth->add_option("--per-family", so.per_family, "materials per family")->required();
  synth->add_option("--families", so.families, "family subset")
      ->delimiter(',')
      ->check(CLI::IsMember(family_names()));
  synth->add_option("--size", so.size, "square material size in pixels")->capture_default_str();
  synth->add_option("--ppi", so.ppi, "pixels per inch")->capture_default_str();
  synth->add_option("--seed", so.seed, "dataset seed")->required();

  TrainOpts to;
  std::string train_out;
  CLI::App* train_cmd = app.add_subcommand("train", "train the map predictor on a dataset");
  train_cmd->add_option("--input", to.dataset, "dataset directory")->required();
  train_cmd->add_option("--output", train_out, "output directory")->required();
  train_cmd->add_option("--seed", to.seed, "training seed")->required();
  add_predictor_flags(train_cmd, to.p);

  PredictOpts po;
  std::string predict_out;
  CLI::App* predict_cmd = app.add_subcommand("predict", "predict maps for a scan");
  predict_cmd->add_option("--input", po.input, "scan png")->required();
  predict_cmd->add_option("--weights", po.weights, "weights file")->required();
  predict_cmd->add_option("--output", predict_out, "output directory")->required();

  MetricsOpts mo;
  std::string metrics_out;
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "compare estimated maps to a reference");
  metrics_cmd->add_option("--input", mo.est, "estimated maps directory")->required();
  metrics_cmd->add_option("--reference", mo.reference, "reference material directory")->required();
  metrics_cmd->add_option("--output", metrics_out, "output directory")->required();
  metrics_cmd->add_option("--grey", mo.grey, "constant albedo for render-space error")
      ->capture_default_str();
  metrics_cmd->add_option("--thresholds", mo.thresholds, "artifact threshold file");
  add_render_set_flags(metrics_cmd, mo.rset);

  UncertaintyOpts uo;
  std::string uncertainty_out;
  CLI::App* uncertainty_cmd =
      app.add_subcommand("uncertainty", "dropout-sampled uncertainty report for a scan");
  uncertainty_cmd->add_option("--input", uo.input, "scan png")->required();
  uncertainty_cmd->add_option("--weights", uo.weights, "weights file")->required();
  uncertainty_cmd->add_option("--output", uncertainty_out, "output directory")->required();
  uncertainty_cmd->add_option("--mc-samples", uo.mc_samples, "dropout sample count")
      ->capture_default_str();
  uncertainty_cmd->add_option("--seed", uo.seed, "sampling seed")->required();
  uncertainty_cmd->add_option("--eps", uo.eps, "log floor")->capture_default_str();
  uncertainty_cmd->add_option("--grey", uo.grey, "constant albedo")->capture_default_str();
  uncertainty_cmd->add_option("--dropout", uo.dropout,
                              "override the dropout rate stored with the weights");
  add_render_set_flags(uncertainty_cmd, uo.rset);

  ArtifactOpts ao;
  std::string artifact_out;
  CLI::App* artifact_cmd = app.add_subcommand("artifact", "screen maps for spatial artifacts");
  artifact_cmd->add_option("--input", ao.input, "scan png the maps were predicted from")
      ->required();
  artifact_cmd->add_option("--maps", ao.maps, "maps directory")->required();
  artifact_cmd->add_option("--output", artifact_out, "output directory")->required();
  artifact_cmd->add_option("--ppi", ao.ppi, "scan resolution in pixels per inch")->required();
  artifact_cmd->add_option("--thresholds", ao.thresholds, "threshold file, defaults otherwise");

  ActiveOpts aco;
  std::string active_out;
  CLI::App* active_cmd = app.add_subcommand("active", "budget-growth labeling experiment");
  active_cmd->add_option("--input", aco.dataset, "dataset directory")->required();
  active_cmd->add_option("--output", active_out, "output directory")->required();
  active_cmd->add_option("--strategy", aco.strategy, "acquisition strategy")
      ->check(CLI::IsMember(strategy_names()))
      ->capture_default_str();
  active_cmd->add_option("--runs", aco.runs, "number of master seeds")->capture_default_str();
  active_cmd->add_option("--seed", aco.seed, "base master seed")->required();
  active_cmd->add_option("--schedule", aco.schedule, "labeled fractions per round")
      ->delimiter(',');
  active_cmd->add_option("--mc-samples", aco.mc_samples, "dropout samples for scoring")
      ->capture_default_str();
  active_cmd->add_option("--eps", aco.eps, "log floor")->capture_default_str();
  active_cmd->add_option("--grey", aco.grey, "constant albedo")->capture_default_str();
  active_cmd->add_option("--render-pairs", aco.render_pairs, "light/view pair count")
      ->capture_default_str();
  active_cmd->add_option("--render-seed", aco.render_seed, "render set sampling seed")
      ->capture_default_str();
  add_predictor_flags(active_cmd, aco.p);

  RenderOpts ro;
  std::string render_out;
  CLI::App* render_cmd = app.add_subcommand("render", "shade maps under a light/view pair");
  render_cmd->add_option("--maps", ro.maps, "maps directory")->required();
  render_cmd->add_option("--output", render_out, "output directory")->required();
  render_cmd->add_option("--light", ro.light, "light direction x,y,z")
      ->delimiter(',')
      ->expected(3);
  render_cmd->add_option("--view", ro.view, "view direction x,y,z")->delimiter(',')->expected(3);
  render_cmd->add_option("--grey", ro.grey, "constant albedo when no image given")
      ->capture_default_str();
  render_cmd->add_option("--albedo", ro.albedo, "albedo png");

  CalibrateOpts co;
  std::string calibrate_out;
  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "tune artifact thresholds on a synthetic sweep");
  calibrate_cmd->add_option("--output", calibrate_out, "output directory")->required();
  calibrate_cmd->add_option("--n", co.n, "materials in the sweep")->capture_default_str();
  calibrate_cmd->add_option("--size", co.size, "material size in pixels")->capture_default_str();
  calibrate_cmd->add_option("--ppi", co.ppi, "pixels per inch")->capture_default_str();
  calibrate_cmd->add_option("--amplitude", co.amplitude, "checkerboard peak-to-peak amplitude")
      ->capture_default_str();
  calibrate_cmd->add_option("--families", co.families, "family subset")
      ->delimiter(',')
      ->check(CLI::IsMember(family_names()));
  calibrate_cmd->add_option("--seed", co.seed, "sweep seed")->required();

  std::string rerun_config, rerun_out;
  CLI::App* rerun_cmd = app.add_subcommand("rerun", "replay an echoed config into a new directory");
  rerun_cmd->add_option("--config", rerun_config, "config.json from a previous run")->required();
  rerun_cmd->add_option("--output", rerun_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }

  try {
    if (*synth) return run_synth(so, synth_out);
    if (*train_cmd) return run_train(to, train_out);
    if (*predict_cmd) return run_predict(po, predict_out);
    if (*metrics_cmd) return run_metrics(mo, metrics_out);
    if (*uncertainty_cmd) return run_uncertainty(uo, uncertainty_out);
    if (*artifact_cmd) return run_artifact(ao, artifact_out);
    if (*active_cmd) return run_active(aco, active_out);
    if (*render_cmd) return run_render(ro, render_out);
    if (*calibrate_cmd) return run_calibrate(co, calibrate_out);
    if (*rerun_cmd) return rerun_from(rerun_config, rerun_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
