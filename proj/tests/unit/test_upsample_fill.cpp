#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "distance_transform.hpp"
#include "error_code.hpp"
#include "floodfill.hpp"
#include "jbu.hpp"
#include "mask.hpp"
#include "oracles.hpp"

using namespace m2n2;
using m2n2::testing::code_of;

namespace {

GuideImage random_guide(Dims d, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GuideImage g(d, 4);
  // piecewise constant so that range weights vary a lot
  const int split = d.width / 2 + static_cast<int>(rng() % 3) - 1;
  const float left[4] = {u(rng), u(rng), u(rng), u(rng)};
  const float right[4] = {u(rng), u(rng), u(rng), u(rng)};
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      for (int c = 0; c < 4; ++c) g(y, x, c) = (x < split ? left[c] : right[c]) + 0.02f * u(rng);
  return g;
}

Grid<float> random_depth(Dims d, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Grid<float> g(d);
  for (auto& v : g.storage()) v = u(rng);
  return g;
}

}  // namespace

TEST_CASE("jbu matches the direct formula on 4x4 to 16x16") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const RealMap src = oracle::random_field(Dims{4, 4}, rng, 20.0, true);
    const GuideImage guide = random_guide(Dims{16, 16}, rng);
    const JbuParams params;
    const auto fast = jbu_upsample(src, guide, params);
    const auto slow = oracle::jbu_direct(src, guide, params);
    REQUIRE(fast.map.dims() == Dims{16, 16});
    for (std::size_t i = 0; i < slow.size(); ++i) REQUIRE(std::abs(fast.map[i] - slow[i]) <= 1e-5);
  }
}

TEST_CASE("jbu single stage and non power of two targets") {
  std::mt19937_64 rng(32);
  const RealMap src = oracle::random_field(Dims{3, 5}, rng);
  const GuideImage guide = random_guide(Dims{13, 22}, rng);
  JbuParams params;
  const auto prog = jbu_upsample(src, guide, params);
  const auto prog_ref = oracle::jbu_direct(src, guide, params);
  for (std::size_t i = 0; i < prog_ref.size(); ++i) CHECK(prog.map[i] == doctest::Approx(prog_ref[i]).epsilon(1e-9));
  params.progressive = false;
  const auto one = jbu_upsample(src, guide, params);
  const auto one_ref = oracle::jbu_direct(src, guide, params);
  for (std::size_t i = 0; i < one_ref.size(); ++i) CHECK(one.map[i] == doctest::Approx(one_ref[i]).epsilon(1e-9));
}

TEST_CASE("jbu preserves constants and stays within the source range") {
  std::mt19937_64 rng(33);
  const GuideImage guide = random_guide(Dims{32, 32}, rng);
  const auto c = jbu_upsample(RealMap(Dims{4, 4}, 1, 7.0), guide, JbuParams{});
  for (double v : c.map.storage()) CHECK(v == doctest::Approx(7.0));
  const RealMap src = oracle::random_field(Dims{4, 4}, rng);
  const auto up = jbu_upsample(src, guide, JbuParams{});
  const auto [lo, hi] = std::minmax_element(src.storage().begin(), src.storage().end());
  for (double v : up.map.storage()) {
    CHECK(v >= *lo - 1e-9);
    CHECK(v <= *hi + 1e-9);
  }
}

TEST_CASE("jbu keeps a depth edge sharp") {
  // left half near (depth 1), right half far (depth 0); identical colour
  const Dims full{16, 16};
  GuideImage guide(full, 4, 0.5f);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) guide(y, x, 3) = x < 8 ? 1.0f : 0.0f;
  RealMap src(Dims{4, 4});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) src(y, x) = x < 2 ? 0.0 : 10.0;
  const auto up = jbu_upsample(src, guide, JbuParams{});
  for (int y = 0; y < 16; ++y) {
    CHECK(up.map(y, 7) < 0.01);
    CHECK(up.map(y, 8) > 9.99);
  }
  const auto flat = jbu_upsample(src, make_guide(Grid<float>(full, 3, 0.5f), Grid<float>(full), false), JbuParams{});
  CHECK(flat.map(0, 7) > 1.0);
}

TEST_CASE("jbu falls back to spatial weights when range weights underflow") {
  const Dims full{8, 8};
  GuideImage guide(full, 4, 0.0f);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if ((x + y) % 2) guide(y, x, 0) = 1.0f;
  JbuParams params;
  params.sigma_range = 1e-3;
  params.progressive = false;
  RealMap src(Dims{2, 2}, 1, 3.0);
  const auto up = jbu_upsample(src, guide, params);
  CHECK(up.fallback_pixels > 0);
  for (double v : up.map.storage()) CHECK(v == doctest::Approx(3.0));
}

TEST_CASE("jbu argument checks") {
  GuideImage three(Dims{8, 8}, 3);
  CHECK(code_of([&] { jbu_upsample(RealMap(Dims{2, 2}), three, JbuParams{}); }) == ErrorCode::InvalidArgument);
  GuideImage guide(Dims{8, 8}, 4);
  CHECK(code_of([&] { jbu_upsample(RealMap(Dims{16, 16}), guide, JbuParams{}); }) == ErrorCode::DimMismatch);
  JbuParams bad;
  bad.sigma_range = 0;
  CHECK(code_of([&] { jbu_upsample(RealMap(Dims{2, 2}), guide, bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("geodesic fill equals Dijkstra on random fields") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> pos(0, 15);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims d{16, 16};
    const RealMap m = oracle::random_field(d, rng, 30.0, trial % 2 == 0);
    const Grid<float> depth = random_depth(d, rng);
    const Pixel seed{pos(rng), pos(rng)};
    FillParams params;
    params.connectivity = trial % 4 < 2 ? 4 : 8;
    const double wd = resolve_depth_weight(m, params);
    const RealMap fast = geodesic_fill(m, depth, seed, params);
    const RealMap slow = oracle::dijkstra(m, depth, seed, wd, params.connectivity);
    REQUIRE(fast == slow);
  }
}

TEST_CASE("geodesic fill defaults and checks") {
  RealMap m(Dims{1, 4});
  m[0] = 2;
  m[1] = 5;
  m[2] = 3;
  m[3] = 9;
  CHECK(resolve_depth_weight(m, FillParams{}) == 7.0);
  FillParams fixed;
  fixed.depth_weight = 0.5;
  CHECK(resolve_depth_weight(m, fixed) == 0.5);

  Grid<float> depth(Dims{1, 4});
  depth[3] = 1.0f;
  FillParams no_depth;
  no_depth.depth_weight = 0.0;
  const RealMap f = geodesic_fill(m, depth, Pixel{0, 0}, no_depth);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 3.0);
  CHECK(f[2] == 5.0);
  CHECK(f[3] == 11.0);
  const RealMap g = geodesic_fill(m, depth, Pixel{0, 0}, FillParams{});
  CHECK(g[3] == doctest::Approx(5.0 + std::sqrt(36.0 + 49.0)));

  CHECK(code_of([&] { geodesic_fill(m, depth, Pixel{1, 0}, FillParams{}); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { geodesic_fill(m, Grid<float>(Dims{2, 2}), Pixel{0, 0}, FillParams{}); }) ==
        ErrorCode::DimMismatch);
  FillParams six;
  six.connectivity = 6;
  CHECK(code_of([&] { geodesic_fill(m, depth, Pixel{0, 0}, six); }) == ErrorCode::InvalidArgument);
  FillParams negative;
  negative.depth_weight = -1;
  CHECK(code_of([&] { geodesic_fill(m, depth, Pixel{0, 0}, negative); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("squared distance transform matches brute force") {
  std::mt19937_64 rng(51);
  std::bernoulli_distribution on(0.05);
  for (int trial = 0; trial < 10; ++trial) {
    const Dims d{12 + trial, 17};
    Grid<std::uint8_t> f(d);
    for (auto& v : f.storage()) v = on(rng);
    f(trial % d.height, 3) = 1;
    const RealMap dt = squared_distance_transform(f);
    for (int y = 0; y < d.height; ++y)
      for (int x = 0; x < d.width; ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (int yy = 0; yy < d.height; ++yy)
          for (int xx = 0; xx < d.width; ++xx)
            if (f(yy, xx)) best = std::min(best, static_cast<double>((yy - y) * (yy - y) + (xx - x) * (xx - x)));
        REQUIRE(dt(y, x) == best);
      }
  }
  const RealMap none = squared_distance_transform(Grid<std::uint8_t>(Dims{3, 3}));
  CHECK(std::isinf(none[4]));
}

TEST_CASE("mask RLE round trip") {
  std::mt19937_64 rng(61);
  std::bernoulli_distribution on(0.3);
  for (int trial = 0; trial < 20; ++trial) {
    Segmentation s(Dims{7, 9});
    for (std::size_t i = 0; i < 63; ++i) s.set(i, on(rng));
    const auto runs = rle_encode(s);
    std::uint64_t total = 0;
    for (auto r : runs) total += r;
    CHECK(total == 63);
    CHECK(rle_decode(runs, s.dims()) == s);
  }
  Segmentation empty(Dims{2, 3});
  CHECK(rle_encode(empty) == std::vector<std::uint32_t>{6});
  Segmentation full(Dims{2, 3});
  for (std::size_t i = 0; i < 6; ++i) full.set(i, true);
  CHECK(rle_encode(full) == std::vector<std::uint32_t>{0, 6});
  CHECK(full.area() == 6);
  CHECK(code_of([] { rle_decode({3, 4}, Dims{2, 3}); }) == ErrorCode::DimMismatch);
  CHECK(code_of([] { rle_decode({3, 2}, Dims{2, 3}); }) == ErrorCode::DimMismatch);
}

TEST_CASE("nearest resampling of masks") {
  Segmentation s(Dims{2, 2});
  s.set(0, 1, true);
  const auto up = resample_nearest(s, Dims{4, 4});
  CHECK(up.area() == 4);
  CHECK(up.at(0, 3));
  CHECK(up.at(1, 2));
  CHECK_FALSE(up.at(2, 2));
  CHECK(resample_nearest(up, Dims{2, 2}) == s);
}
