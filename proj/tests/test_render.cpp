#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "weft/render.hpp"
#include "weft/rng.hpp"

using namespace weft;

namespace {

constexpr double kPi = 3.14159265358979323846;

Direction random_dir(Rng& rng, double max_tilt = 1.55) {
  const double t = rng.uniform(0.0, max_tilt);
  const double p = rng.uniform(0.0, 2.0 * kPi);
  return Direction(Vec3{std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)});
}

}  // namespace

TEST_CASE("direction validation") {
  CHECK_NOTHROW(Direction(Vec3{0.0, 0.0, 1.0}));
  CHECK_THROWS_AS(Direction(Vec3{0.0, 0.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(Direction(Vec3{0.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Direction(Vec3{0.6, 0.0, -0.8}), std::invalid_argument);

  const Direction d = direction_from({0.0, 0.0, 5.0});
  CHECK(d.d.z == 1.0);
  CHECK_THROWS_AS(direction_from({1.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(direction_from({0.0, 0.0, -2.0}), std::invalid_argument);
  CHECK_THROWS_AS(direction_from({0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("cosine weight clamps to [0,1]") {
  CHECK(cosine_weight(Direction()) == 1.0);
  const Direction tilted = direction_from({1.0, 0.0, 1.0});
  CHECK(cosine_weight(tilted) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("ggx normal-incidence value") {
  // rough = 1 makes D = 1/pi and the visibility term 1/4 at normal
  // incidence, so the lobe is F0 / (4 pi) = 0.04 * 0.5 / (4 pi).
  const Direction z;
  const Vec3 n{0.0, 0.0, 1.0};
  CHECK(ggx_specular(n, 0.5, 1.0, z, z) ==
        doctest::Approx(0.04 / (4.0 * kPi)).epsilon(1e-12));
  // zero specular kills the Fresnel term entirely at h == v
  CHECK(ggx_specular(n, 0.0, 0.3, z, z) == 0.0);
}

TEST_CASE("ggx agrees with the Lambda-form reference") {
  Rng rng(22);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const Direction nd = random_dir(rng, 1.0);
    const Direction l = random_dir(rng);
    const Direction v = random_dir(rng);
    const double spec = rng.uniform();
    const double rough = rng.uniform(0.05, 1.0);
    const double a = ggx_specular(nd.d, spec, rough, l, v);
    const double b = oracle::ggx(nd.d, spec, rough, l.d, v.d);
    worst = std::max(worst, std::abs(a - b));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("ggx is symmetric in light and view") {
  Rng rng(23);
  for (int i = 0; i < 300; ++i) {
    const Direction nd = random_dir(rng, 1.0);
    const Direction l = random_dir(rng);
    const Direction v = random_dir(rng);
    const double spec = rng.uniform();
    const double rough = rng.uniform(0.05, 1.0);
    CHECK(ggx_specular(nd.d, spec, rough, l, v) ==
          doctest::Approx(ggx_specular(nd.d, spec, rough, v, l)).epsilon(1e-12));
  }
}

TEST_CASE("ggx peak sharpens as roughness falls") {
  const Direction z;
  const Vec3 n{0.0, 0.0, 1.0};
  double prev = 0.0;
  for (double rough : {0.8, 0.5, 0.3, 0.15, 0.08}) {
    const double peak = ggx_specular(n, 0.5, rough, z, z);
    CHECK(peak > prev);
    prev = peak;
  }
}

TEST_CASE("ggx grazing and backfacing geometry returns zero") {
  const Direction nearly_flat = direction_from({1.0, 0.0, 1e-3});
  const Vec3 tilted_away = normalized({-0.9, 0.0, 0.1});
  CHECK(ggx_specular(tilted_away, 0.5, 0.3, nearly_flat, nearly_flat) >= 0.0);
  // normal tilted past the light direction: n.l < 0
  const Vec3 away{0.8, 0.0, 0.6};
  const Direction l = direction_from({-0.8, 0.0, 0.6});
  CHECK(ggx_specular(normalized(away), 0.5, 0.3, l, Direction()) >= 0.0);
}

TEST_CASE("shade is albedo over pi plus the lobe") {
  MapStack m = oracle::random_stack(6, 5, 77);
  ImageGrid albedo = oracle::random_image(6, 5, 3, 78);
  const Direction l = direction_from({0.3, -0.2, 0.9});
  const Direction v = direction_from({-0.1, 0.4, 0.8});
  const ImageGrid out = shade(m, albedo, l, v);
  REQUIRE(out.same_shape(albedo));
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) {
      const double s = ggx_specular(m.normals.at(x, y), m.specular.at(x, y, 0),
                                    m.roughness.at(x, y, 0), l, v);
      for (int c = 0; c < 3; ++c) {
        CHECK(out.at(x, y, c) ==
              doctest::Approx(albedo.at(x, y, c) / kPi + s).epsilon(1e-12));
        CHECK(out.at(x, y, c) >= 0.0);
      }
    }

  SUBCASE("diffuse only at zero specular with aligned directions") {
    // Schlick Fresnel with F0 = 0 still leaks (1 - h.v)^5 for l != v,
    // but vanishes exactly when the half vector matches the view.
    MapStack flat = flat_stack(6, 5, 0.0, 0.5);
    const ImageGrid d = shade(flat, albedo, l, l);
    for (std::size_t i = 0; i < d.data.size(); ++i)
      CHECK(d.data[i] == doctest::Approx(albedo.data[i] / kPi).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(shade(m, ImageGrid(5, 5, 3), l, v), std::invalid_argument);
  }
}

TEST_CASE("sample_render_set determinism and geometry") {
  const RenderSet a = sample_render_set(50, 7);
  const RenderSet b = sample_render_set(50, 7);
  REQUIRE(a.size() == 50);
  bool same = true;
  double mean_cos = 0.0;
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    same = same && a.pairs[i].first.d.x == b.pairs[i].first.d.x &&
           a.pairs[i].second.d.z == b.pairs[i].second.d.z;
    CHECK(a.pairs[i].first.d.z > 0.0);
    CHECK(a.pairs[i].second.d.z > 0.0);
    CHECK(norm(a.pairs[i].first.d) == doctest::Approx(1.0).epsilon(1e-9));
    mean_cos += cosine_weight(a.pairs[i].first);
  }
  CHECK(same);
  mean_cos /= static_cast<double>(a.size());
  // cosine-weighted hemisphere sampling concentrates toward the zenith;
  // regression value measured once and frozen
  CHECK(mean_cos == doctest::Approx(0.66982309444994015).epsilon(1e-12));
  CHECK(mean_cos > 0.5);
  CHECK(mean_cos < 0.85);

  const RenderSet c = sample_render_set(50, 8);
  CHECK(c.pairs[0].first.d.x != a.pairs[0].first.d.x);
  CHECK_THROWS_AS(sample_render_set(0), std::invalid_argument);
}

TEST_CASE("scan light set is fixed") {
  const auto& lights = scan_light_set();
  REQUIRE(lights.size() == 32);
  for (const Direction& l : lights) CHECK(l.d.z > 0.0);
  CHECK(&scan_light_set() == &lights);
}

TEST_CASE("render_scan of flat stacks") {
  const ImageGrid base = constant_image(8, 8, 3, 0.5);

  // diffuse-only: every pixel lands on base * mean cosine of the light set;
  // regression values measured once and frozen
  const ImageGrid d = render_scan(flat_stack(8, 8, 0.0, 0.5), base);
  for (double v : d.data) CHECK(v == doctest::Approx(0.34047506770923219).epsilon(1e-12));

  const ImageGrid s = render_scan(flat_stack(8, 8, 0.6, 0.4), base);
  for (double v : s.data) CHECK(v == doctest::Approx(0.38634907151737841).epsilon(1e-12));
  // the lobe only adds light
  CHECK(s.at(0, 0, 0) > d.at(0, 0, 0));

  SUBCASE("tilted surface catches less light") {
    MapStack tilted = flat_stack(8, 8, 0.0, 0.5);
    for (auto& n : tilted.normals.vectors) n = normalized({0.6, 0.0, 0.8});
    const ImageGrid t = render_scan(tilted, base);
    CHECK(t.at(4, 4, 0) < d.at(4, 4, 0));
  }
  SUBCASE("output clamped to [0,1]") {
    const ImageGrid bright = render_scan(flat_stack(8, 8, 1.0, 0.05), constant_image(8, 8, 3, 1.0));
    for (double v : bright.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(render_scan(flat_stack(4, 4, 0.0, 0.5), base), std::invalid_argument);
  }
}
