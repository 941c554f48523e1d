#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "error.hpp"

namespace m2n2 {
namespace {

// Smoothed random field on a 6×6 lattice, bilinearly interpolated over [-1,1]².
class BlobField {
 public:
  explicit BlobField(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : lattice_) v = u(rng);
  }

  double operator()(double u, double v) const {
    const double fx = std::clamp((u + 1.0) * 0.5 * (kN - 1), 0.0, kN - 1.0);
    const double fy = std::clamp((v + 1.0) * 0.5 * (kN - 1), 0.0, kN - 1.0);
    const int x0 = std::min(static_cast<int>(fx), kN - 2), y0 = std::min(static_cast<int>(fy), kN - 2);
    const double ax = fx - x0, ay = fy - y0;
    auto at = [&](int y, int x) { return lattice_[static_cast<std::size_t>(y * kN + x)]; };
    return (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) + ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
  }

 private:
  static constexpr int kN = 6;
  std::array<double, kN * kN> lattice_{};
};

bool covers(const SceneObject& o, const BlobField* blob, double x, double y) {
  const double u = (x - o.cx) / o.rx;
  const double v = (y - o.cy) / o.ry;
  switch (o.shape) {
    case ShapeKind::Disk: return u * u + v * v <= 1.0;
    case ShapeKind::Rectangle: return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
    case ShapeKind::Blob: {
      const double rho2 = u * u + v * v;
      if (rho2 > 1.0) return false;
      return (1.0 - rho2) + 0.45 * (*blob)(u, v) > 0.35;
    }
  }
  return false;
}

void validate(const SceneSpec& spec) {
  if (spec.objects.empty() || spec.objects.size() > 8) fail(ErrorCode::SpecInvalid, "scenes need 1..8 objects");
  if (spec.coarse.height < 1 || spec.coarse.width < 1 || spec.dims.height % spec.coarse.height != 0 ||
      spec.dims.width % spec.coarse.width != 0)
    fail(ErrorCode::SpecInvalid, "coarse dims must divide the image dims");
  std::vector<double> layers;
  for (const auto& o : spec.objects) {
    if (o.group < 1) fail(ErrorCode::SpecInvalid, "object groups start at 1");
    if (!(o.distance > 0.0) || !(o.distance < spec.background_distance))
      fail(ErrorCode::SpecInvalid, "object distance must lie in (0, background distance)");
    if (!(o.rx > 0.0) || !(o.ry > 0.0)) fail(ErrorCode::SpecInvalid, "object extents must be positive");
    layers.push_back(o.distance);
  }
  std::sort(layers.begin(), layers.end());
  if (std::adjacent_find(layers.begin(), layers.end()) != layers.end())
    fail(ErrorCode::SpecInvalid, "object layers must be distinct");
  if (!(spec.feature_temperature > 0.0)) fail(ErrorCode::SpecInvalid, "feature temperature must be > 0");
}

}  // namespace

SyntheticScene generate_scene(const SceneSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  const Dims d = spec.dims;

  std::vector<BlobField> blobs;
  blobs.reserve(spec.objects.size());
  for (std::size_t i = 0; i < spec.objects.size(); ++i) blobs.emplace_back(rng);

  // Back-to-front visibility.
  std::vector<std::size_t> order(spec.objects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return spec.objects[a].distance > spec.objects[b].distance; });
  Grid<int> visible(d, 1, -1);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      for (std::size_t k : order)
        if (covers(spec.objects[k], &blobs[k], x + 0.5, y + 0.5)) visible(y, x) = static_cast<int>(k);

  SyntheticScene scene;
  ImageBundle& b = scene.bundle;
  b.id = spec.tag;
  b.image = Grid<float>(d, 3);
  b.depth = Grid<float>(d, 1);
  std::normal_distribution<double> pixel_noise(0.0, 0.02 * spec.noise);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      const int k = visible(y, x);
      std::array<float, 3> color = spec.background;
      double distance = spec.background_distance;
      if (k >= 0) {
        const auto& o = spec.objects[static_cast<std::size_t>(k)];
        color = o.color;
        // Mild tilt: the lower part of an object is slightly closer.
        distance = o.distance * (1.0 - 0.03 * std::clamp((y + 0.5 - o.cy) / o.ry, -1.0, 1.0));
      }
      for (int c = 0; c < 3; ++c)
        b.image(y, x, c) = static_cast<float>(std::clamp(color[static_cast<std::size_t>(c)] + pixel_noise(rng), 0.0, 1.0));
      b.depth(y, x) = static_cast<float>(1.0 / distance);
    }
  normalize_unit_range(b.depth);

  // Majority group per coarse cell, then noisy one-hot group features.
  const Dims c = spec.coarse;
  const int cell_h = d.height / c.height, cell_w = d.width / c.width;
  int groups = 1;
  for (const auto& o : spec.objects) groups = std::max(groups, o.group + 1);
  scene.coarse_groups.assign(c.size(), 0);
  std::vector<std::vector<double>> features(c.size(), std::vector<double>(static_cast<std::size_t>(groups), 0.0));
  std::normal_distribution<double> feature_noise(0.0, 0.08 * spec.noise);
  for (int cy = 0; cy < c.height; ++cy)
    for (int cx = 0; cx < c.width; ++cx) {
      std::vector<int> votes(static_cast<std::size_t>(groups), 0);
      for (int y = cy * cell_h; y < (cy + 1) * cell_h; ++y)
        for (int x = cx * cell_w; x < (cx + 1) * cell_w; ++x) {
          const int k = visible(y, x);
          ++votes[static_cast<std::size_t>(k < 0 ? 0 : spec.objects[static_cast<std::size_t>(k)].group)];
        }
      const std::size_t cell = static_cast<std::size_t>(cy) * c.width + cx;
      const int g = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      scene.coarse_groups[cell] = g;
      features[cell][static_cast<std::size_t>(g)] = 1.0;
      for (auto& f : features[cell]) f += feature_noise(rng);
    }

  const std::size_t n = c.size();
  b.attention = AttentionTensor{std::vector<double>(n * n), c, Stochasticity::Row};
  std::vector<double> logits(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t col = 0; col < n; ++col) {
      double dist2 = 0.0;
      for (std::size_t g = 0; g < features[r].size(); ++g) {
        const double diff = features[r][g] - features[col][g];
        dist2 += diff * diff;
      }
      logits[col] = -dist2 / spec.feature_temperature;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t col = 0; col < n; ++col) sum += (logits[col] = std::exp(logits[col] - peak));
    for (std::size_t col = 0; col < n; ++col) b.attention.at(r, col) = static_cast<double>(static_cast<float>(logits[col] / sum));
  }

  b.meta.coarse = c;
  b.meta.original = d;
  b.meta.attention_backbone = "synthetic";
  b.meta.depth_backbone = "synthetic";
  b.meta.tta = false;

  for (std::size_t k = 0; k < spec.objects.size(); ++k) {
    Segmentation gt(d);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (visible[i] == static_cast<int>(k)) gt.set(i, true);
    char id[16];
    std::snprintf(id, sizeof id, "obj_%zu", k);
    if (!gt.empty()) b.ground_truth.emplace(id, gt);
    scene.ground_truth.push_back(std::move(gt));
  }
  return scene;
}

SceneSpec overlap_same_class_spec(std::uint64_t seed, Dims dims, Dims coarse) {
  std::mt19937_64 rng(seed ^ 0x6f7665726c6170ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneSpec spec;
  spec.dims = dims;
  spec.coarse = coarse;
  spec.seed = seed;
  spec.tag = "overlap-same-class";
  const double scale = std::min(dims.height, dims.width);
  const std::array<float, 3> color{static_cast<float>(0.6 + 0.3 * u(rng)), static_cast<float>(0.15 + 0.2 * u(rng)),
                                   static_cast<float>(0.1 + 0.2 * u(rng))};
  spec.background = {0.25f, static_cast<float>(0.35 + 0.2 * u(rng)), 0.55f};

  SceneObject a;
  a.rx = a.ry = scale * (0.17 + 0.05 * u(rng));
  a.cx = dims.width * (0.35 + 0.05 * u(rng));
  a.cy = dims.height * (0.4 + 0.2 * u(rng));
  a.distance = 3.0 + u(rng);
  a.color = color;
  a.group = 1;

  SceneObject b = a;
  b.rx = b.ry = scale * (0.17 + 0.05 * u(rng));
  // Centres closer than the sum of radii so that the disks overlap.
  const double gap = (a.rx + b.rx) * (0.6 + 0.15 * u(rng));
  const double angle = (u(rng) - 0.5) * 0.8;
  b.cx = a.cx + gap * std::cos(angle);
  b.cy = a.cy + gap * std::sin(angle);
  b.distance = a.distance + 3.0 + 2.0 * u(rng);
  spec.objects = {a, b};
  return spec;
}

SceneSpec mixed_scene_spec(std::uint64_t seed, Dims dims, Dims coarse) {
  std::mt19937_64 rng(seed ^ 0x6d69786564ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneSpec spec;
  spec.dims = dims;
  spec.coarse = coarse;
  spec.seed = seed;
  spec.tag = "mixed";
  spec.background = {static_cast<float>(0.3 + 0.3 * u(rng)), static_cast<float>(0.3 + 0.3 * u(rng)),
                     static_cast<float>(0.3 + 0.3 * u(rng))};
  const int count = 1 + static_cast<int>(u(rng) * 4.0);
  const int groups = 1 + static_cast<int>(u(rng) * 3.0);
  const double scale = std::min(dims.height, dims.width);
  for (int i = 0; i < count; ++i) {
    SceneObject o;
    const double pick = u(rng);
    o.shape = pick < 0.4 ? ShapeKind::Disk : (pick < 0.7 ? ShapeKind::Rectangle : ShapeKind::Blob);
    o.rx = scale * (0.1 + 0.12 * u(rng));
    o.ry = o.shape == ShapeKind::Disk ? o.rx : scale * (0.1 + 0.12 * u(rng));
    o.cx = dims.width * (0.2 + 0.6 * u(rng));
    o.cy = dims.height * (0.2 + 0.6 * u(rng));
    o.distance = 2.0 + 1.8 * i + 0.5 * u(rng);
    o.group = 1 + (i % groups);
    o.color = {static_cast<float>(u(rng)), static_cast<float>(u(rng)), static_cast<float>(u(rng))};
    spec.objects.push_back(o);
  }
  return spec;
}

void write_suite(const std::filesystem::path& dir, const std::string& kind, int count, std::uint64_t seed, Dims dims,
                 Dims coarse) {
  if (kind != "overlap" && kind != "mixed") fail(ErrorCode::InvalidArgument, "suite kind must be overlap|mixed");
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = seed * 1000003ULL + static_cast<std::uint64_t>(i);
    const SceneSpec spec = kind == "overlap" ? overlap_same_class_spec(s, dims, coarse) : mixed_scene_spec(s, dims, coarse);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d", i);
    save_bundle(generate_scene(spec).bundle, dir / name);
  }
}

}  // namespace m2n2
