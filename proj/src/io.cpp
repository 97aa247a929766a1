#include "weft/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "weft/rng.hpp"

namespace weft {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// JSON has no infinity; reports stringify it.
json num_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_png16(const std::string& path, const ImageGrid& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_png16: image must have 1 or 3 channels");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("write_png16: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("write_png16: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("write_png16: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png16: encode failed for " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 16,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels * 2);
  for (int y = 0; y < img.height; ++y) {
    std::size_t i = 0;
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double v = img.at(x, y, c);
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        row[i++] = static_cast<std::uint8_t>(q >> 8);
        row[i++] = static_cast<std::uint8_t>(q & 0xff);
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageGrid read_png16(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("read_png16: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("read_png16: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("read_png16: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png16: decode failed for " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png16: unsupported channel count in " + path);
  }

  ImageGrid img(width, height, channels);
  const std::size_t stride = static_cast<std::size_t>(width) * channels * (depth / 8);
  std::vector<std::uint8_t> row(stride);
  const double scale = depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        double v;
        if (depth == 16) {
          const std::size_t i = (static_cast<std::size_t>(x) * channels + c) * 2;
          v = static_cast<double>((row[i] << 8) | row[i + 1]);
        } else {
          v = static_cast<double>(row[static_cast<std::size_t>(x) * channels + c]);
        }
        img.at(x, y, c) = v / scale;
      }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

void write_material_dir(const std::string& dir, const MaterialSample& s,
                        const std::string& name) {
  fs::create_directories(dir);
  write_png16(dir + "/scan.png", s.scan);
  write_png16(dir + "/normals.png", encode_normals(s.gt.normals));
  write_png16(dir + "/specular.png", s.gt.specular);
  write_png16(dir + "/roughness.png", s.gt.roughness);
  const json meta{{"name", name},
                  {"family", family_name(s.family)},
                  {"ppi", s.ppi},
                  {"width", s.scan.width},
                  {"height", s.scan.height},
                  {"seed", s.seed}};
  write_text_file(dir + "/meta.json", meta.dump(2) + "\n");
}

MaterialOnDisk read_material_dir(const std::string& dir) {
  MaterialOnDisk m;
  json meta;
  try {
    meta = json::parse(read_text_file(dir + "/meta.json"));
    m.name = meta.at("name").get<std::string>();
    m.family = family_from_name(meta.at("family").get<std::string>());
    m.ppi = meta.at("ppi").get<double>();
    m.seed = meta.value("seed", 0ull);
  } catch (const json::exception& e) {
    throw std::runtime_error("read_material_dir: bad meta.json in " + dir + ": " + e.what());
  }
  m.scan = read_png16(dir + "/scan.png");
  m.scan.ppi = m.ppi;
  m.gt = read_stack_dir(dir, m.ppi);
  const int w = meta.at("width").get<int>();
  const int h = meta.at("height").get<int>();
  if (m.scan.width != w || m.scan.height != h)
    throw std::runtime_error("read_material_dir: meta.json dimensions disagree with scan.png");
  return m;
}

MapStack read_stack_dir(const std::string& dir, double ppi) {
  MapStack gt;
  gt.normals = decode_normals(read_png16(dir + "/normals.png"));
  gt.specular = read_png16(dir + "/specular.png");
  gt.roughness = read_png16(dir + "/roughness.png");
  gt.specular.ppi = ppi;
  gt.roughness.ppi = ppi;
  if (gt.specular.channels != 1 || gt.roughness.channels != 1)
    throw std::runtime_error("read_stack_dir: specular/roughness must be single channel");
  if (gt.specular.width != gt.normals.width || gt.roughness.width != gt.normals.width ||
      gt.specular.height != gt.normals.height || gt.roughness.height != gt.normals.height)
    throw std::runtime_error("read_stack_dir: map dimensions disagree in " + dir);
  return gt;
}

std::string material_dir_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "m%04d", id);
  return buf;
}

void write_dataset(const std::string& dir, const Dataset& ds) {
  fs::create_directories(dir);
  json mats = json::array();
  for (const MaterialSample& m : ds.materials) {
    const std::string name = material_dir_name(m.id);
    write_material_dir(dir + "/" + name, m, name);
    const bool is_test =
        std::binary_search(ds.test_ids.begin(), ds.test_ids.end(), m.id);
    mats.push_back({{"id", m.id},
                    {"name", name},
                    {"family", family_name(m.family)},
                    {"split", is_test ? "test" : "train"}});
  }
  json families = json::array();
  for (MaterialFamily f : all_families()) families.push_back(family_name(f));
  const json manifest{{"seed", ds.seed}, {"size", ds.size},     {"ppi", ds.ppi},
                      {"families", families}, {"materials", mats}};
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

DatasetOnDisk read_dataset(const std::string& dir) {
  DatasetOnDisk out;
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir + "/manifest.json"));
    out.seed = manifest.value("seed", 0ull);
    out.ppi = manifest.at("ppi").get<double>();
    for (const auto& m : manifest.at("materials")) {
      const int id = m.at("id").get<int>();
      if (id != static_cast<int>(out.materials.size()))
        throw std::runtime_error("read_dataset: materials out of order in manifest");
      out.materials.push_back(read_material_dir(dir + "/" + m.at("name").get<std::string>()));
      (m.at("split").get<std::string>() == "test" ? out.test_ids : out.train_ids).push_back(id);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("read_dataset: bad manifest.json in " + dir + ": " + e.what());
  }
  return out;
}

ArtifactThresholds read_thresholds(const std::string& path) {
  ArtifactThresholds th;
  try {
    const json j = json::parse(read_text_file(path));
    auto read_map = [](const json& m, MapThresholds& t) {
      t.t1 = m.at("t1").get<double>();
      t.t2 = m.at("t2").get<double>();
      t.t3 = m.at("t3").get<double>();
    };
    read_map(j.at("specular"), th.specular);
    read_map(j.at("roughness"), th.roughness);
    th.box_size_factor = j.at("box_size_factor").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error("read_thresholds: bad threshold file " + path + ": " + e.what());
  }
  if (th.specular.t1 <= 0 || th.specular.t2 <= 0 || th.specular.t3 <= 0 ||
      th.roughness.t1 <= 0 || th.roughness.t2 <= 0 || th.roughness.t3 <= 0 ||
      th.box_size_factor <= 0)
    throw std::runtime_error("read_thresholds: thresholds must be positive");
  return th;
}

void write_thresholds(const std::string& path, const ArtifactThresholds& th) {
  const json j{{"specular", {{"t1", th.specular.t1}, {"t2", th.specular.t2}, {"t3", th.specular.t3}}},
               {"roughness",
                {{"t1", th.roughness.t1}, {"t2", th.roughness.t2}, {"t3", th.roughness.t3}}},
               {"box_size_factor", th.box_size_factor}};
  write_text_file(path, j.dump(2) + "\n");
}

RenderSet read_render_set(const std::string& path) {
  std::istringstream in(read_text_file(path));
  RenderSet s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double lx, ly, lz, vx, vy, vz;
    if (!(ls >> lx >> ly >> lz >> vx >> vy >> vz))
      throw std::runtime_error("read_render_set: bad line " + std::to_string(lineno) + " in " +
                               path);
    try {
      s.pairs.emplace_back(direction_from({lx, ly, lz}), direction_from({vx, vy, vz}));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("read_render_set: line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  if (s.pairs.empty()) throw std::runtime_error("read_render_set: no pairs in " + path);
  return s;
}

void write_render_set(const std::string& path, const RenderSet& s) {
  std::ostringstream out;
  for (const auto& [l, v] : s.pairs)
    out << fmt_double(l.d.x) << ' ' << fmt_double(l.d.y) << ' ' << fmt_double(l.d.z) << ' '
        << fmt_double(v.d.x) << ' ' << fmt_double(v.d.y) << ' ' << fmt_double(v.d.z) << '\n';
  write_text_file(path, out.str());
}

std::uint64_t render_set_hash(const RenderSet& s) {
  std::uint64_t h = 0x77656674u;
  auto mix = [&h](double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    h = hash_combine(h, bits);
  };
  for (const auto& [l, v] : s.pairs) {
    mix(l.d.x);
    mix(l.d.y);
    mix(l.d.z);
    mix(v.d.x);
    mix(v.d.y);
    mix(v.d.z);
  }
  return h;
}

void write_weights_file(const std::string& path, const PredictorWeights& w) {
  write_file_bytes(path, save_weights(w));
}

PredictorWeights read_weights_file(const std::string& path) {
  return load_weights(read_file_bytes(path));
}

void write_uncertainty_report(const std::string& dir, const UncertaintyReport& rep, int n,
                              double eps, double dropout_rate, std::uint64_t rset_hash) {
  fs::create_directories(dir);
  json ranges;
  auto write_map = [&](const char* name, const ImageGrid& map) {
    const auto [lo_it, hi_it] = std::minmax_element(map.data.begin(), map.data.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    ImageGrid norm(map.width, map.height, 1);
    if (hi > lo)
      for (std::size_t i = 0; i < map.data.size(); ++i)
        norm.data[i] = (map.data[i] - lo) / (hi - lo);
    write_png16(dir + "/" + name + ".png", norm);
    ranges[name] = {{"min", lo}, {"max", hi}};
  };
  write_map("sigma_normals", rep.sigma_normals);
  write_map("sigma_spec", rep.sigma_spec);
  write_map("sigma_rough", rep.sigma_rough);
  write_map("sigma_brdf", rep.sigma_brdf_map);

  char hashbuf[20];
  std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                static_cast<unsigned long long>(rset_hash));
  const json j{{"sigma_brdf", rep.sigma_brdf}, {"n", n},
               {"eps", eps},                   {"dropout_rate", dropout_rate},
               {"render_set_hash", hashbuf},   {"map_ranges", ranges}};
  write_text_file(dir + "/report.json", j.dump(2) + "\n");
}

void write_metrics_report(const std::string& csv_path, const std::string& json_path,
                          const std::vector<MetricsRow>& rows) {
  std::ostringstream csv;
  csv << "material,l1_spec,l1_rough,angular_deg,pearson_spec,pearson_rough,l_brdf,artifact\n";
  json jrows = json::array();
  for (const MetricsRow& r : rows) {
    csv << r.material << ',' << fmt_double(r.l1_spec) << ',' << fmt_double(r.l1_rough) << ','
        << fmt_double(r.angular_deg) << ',' << fmt_double(r.pearson_spec) << ','
        << fmt_double(r.pearson_rough) << ',' << fmt_double(r.l_brdf) << ','
        << (r.artifact ? 1 : 0) << '\n';
    jrows.push_back({{"material", r.material},
                     {"l1_spec", r.l1_spec},
                     {"l1_rough", r.l1_rough},
                     {"angular_deg", r.angular_deg},
                     {"pearson_spec", num_or_inf(r.pearson_spec)},
                     {"pearson_rough", num_or_inf(r.pearson_rough)},
                     {"l_brdf", r.l_brdf},
                     {"artifact", r.artifact}});
  }
  write_text_file(csv_path, csv.str());
  write_text_file(json_path, json{{"materials", jrows}}.dump(2) + "\n");
}

void write_active_logs(const std::string& dir, const std::vector<ActiveLearningState>& runs) {
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "run,round,fraction,strategy,metric,value\n";
  for (std::size_t run = 0; run < runs.size(); ++run) {
    const ActiveLearningState& st = runs[run];
    json jrounds = json::array();
    for (const RoundRecord& r : st.records) {
      json scores = json::array();
      for (const auto& [id, sc] : r.scores) scores.push_back({{"id", id}, {"score", sc}});
      jrounds.push_back({{"round", r.round},
                         {"fraction", r.fraction},
                         {"selected_ids", r.selected_ids},
                         {"labeled_ids", r.labeled_ids},
                         {"scores", scores},
                         {"l_brdf", r.l_brdf},
                         {"l1_spec", r.l1_spec},
                         {"l1_rough", r.l1_rough},
                         {"angular_deg", r.angular_deg},
                         {"pearson_spec", r.pearson_spec},
                         {"pearson_rough", r.pearson_rough},
                         {"pearson_skipped", r.pearson_skipped}});
      const std::pair<const char*, double> metrics[] = {
          {"l_brdf", r.l_brdf},           {"l1_spec", r.l1_spec},
          {"l1_rough", r.l1_rough},       {"angular_deg", r.angular_deg},
          {"pearson_spec", r.pearson_spec}, {"pearson_rough", r.pearson_rough}};
      for (const auto& [name, value] : metrics)
        csv << run << ',' << r.round << ',' << fmt_double(r.fraction) << ','
            << strategy_name(st.strategy) << ',' << name << ',' << fmt_double(value) << '\n';
    }
    const json jrun{{"strategy", strategy_name(st.strategy)},
                    {"master_seed", st.master_seed},
                    {"schedule", st.schedule},
                    {"rounds", jrounds}};
    write_text_file(dir + "/run_" + std::to_string(run) + ".json", jrun.dump(2) + "\n");
  }
  write_text_file(dir + "/summary.csv", csv.str());
}

}  // namespace weft
