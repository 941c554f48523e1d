#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "attention_ops.hpp"
#include "grid.hpp"
#include "mask.hpp"

namespace m2n2 {

// Float32 little-endian tensor as stored in an NPY v1.0 file.
struct TensorFile {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
};

TensorFile load_tensor(const std::filesystem::path& path);
void save_tensor(const TensorFile& tensor, const std::filesystem::path& path);

// Parse/emit the raw NPY byte image (used by the file functions and tests).
TensorFile parse_npy(const std::string& bytes);
std::string encode_npy(const TensorFile& tensor);

inline constexpr int kMetaSchemaVersion = 1;

struct BundleMeta {
  int schema_version = kMetaSchemaVersion;
  Dims coarse;
  Dims original;
  std::string attention_backbone = "unknown";
  std::string depth_backbone = "unknown";
  bool tta = false;
};

struct ImageBundle {
  std::string id;
  Grid<float> image;  // H×W×3, [0,1]
  Grid<float> depth;  // H×W inverse depth, renormalized to [0,1]
  AttentionTensor attention;
  std::optional<AttentionTensor> attention_flipped;
  BundleMeta meta;
  std::map<std::string, Segmentation> ground_truth;

  Dims dims() const { return image.dims(); }
};

// Loads and cross-validates a bundle directory:
//   image.png, depth.npy, attn.npy, meta.json, optional attn_flip.npy, optional gt/*.png
ImageBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const ImageBundle& bundle, const std::filesystem::path& dir);

// Affine rescale to [0,1]; a constant field maps to all zeros.
void normalize_unit_range(Grid<float>& field);

}  // namespace m2n2
