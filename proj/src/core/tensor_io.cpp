#include "tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "png_io.hpp"

namespace m2n2 {
namespace fs = std::filesystem;
namespace {

static_assert(std::endian::native == std::endian::little, "NPY payload is read in place as little-endian");

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Value text following 'key': in a Python dict literal.
std::string dict_value(const std::string& header, const std::string& key) {
  const std::string needle = "'" + key + "'";
  auto pos = header.find(needle);
  if (pos == std::string::npos) fail(ErrorCode::BadMagic, "NPY header lacks " + needle);
  pos = header.find(':', pos + needle.size());
  if (pos == std::string::npos) fail(ErrorCode::BadMagic, "malformed NPY header");
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  std::size_t end = pos;
  if (header[pos] == '(') {
    end = header.find(')', pos);
    if (end == std::string::npos) fail(ErrorCode::BadMagic, "malformed NPY shape");
    return header.substr(pos, end - pos + 1);
  }
  while (end < header.size() && header[end] != ',' && header[end] != '}') ++end;
  return header.substr(pos, end - pos);
}

std::vector<std::size_t> parse_shape(const std::string& text) {
  std::vector<std::size_t> shape;
  std::size_t i = 1;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == ',')) ++i;
    if (i >= text.size() || text[i] == ')') break;
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) fail(ErrorCode::BadMagic, "malformed NPY shape " + text);
    std::size_t v = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) v = v * 10 + (text[i++] - '0');
    shape.push_back(v);
  }
  return shape;
}

std::string trim_quotes(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\'' || s.back() == '"')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\'' || s[b] == '"')) ++b;
  return s.substr(b);
}

Grid<float> tensor_to_grid(const TensorFile& t, const std::string& what) {
  if (t.shape.size() != 2) fail(ErrorCode::DimMismatch, what + " must be 2-D");
  Dims d{static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1])};
  return Grid<float>(d, 1, t.data);
}

AttentionTensor tensor_to_attention(const TensorFile& t, Dims coarse, const std::string& what) {
  const std::size_t n = coarse.size();
  if (t.shape.size() != 2 || t.shape[0] != n || t.shape[1] != n) {
    std::ostringstream msg;
    msg << what << " shape (";
    for (std::size_t i = 0; i < t.shape.size(); ++i) msg << (i ? "," : "") << t.shape[i];
    msg << ") does not match h*w=" << n;
    fail(ErrorCode::DimMismatch, msg.str());
  }
  AttentionTensor a{std::vector<double>(t.data.begin(), t.data.end()), coarse, Stochasticity::Row};
  if (std::any_of(a.mat.begin(), a.mat.end(), [](double v) { return v < 0.0; }))
    fail(ErrorCode::InvalidArgument, what + " has negative entries");
  return a;
}

TensorFile attention_to_tensor(const AttentionTensor& a) {
  TensorFile t{{a.states(), a.states()}, std::vector<float>(a.mat.begin(), a.mat.end())};
  return t;
}

}  // namespace

std::size_t TensorFile::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

TensorFile parse_npy(const std::string& bytes) {
  if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    fail(ErrorCode::BadMagic, "not an NPY file");
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) fail(ErrorCode::BadMagic, "truncated NPY header");
    for (int i = 0; i < 4; ++i) header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    offset = 12;
  } else {
    fail(ErrorCode::BadMagic, "unsupported NPY version " + std::to_string(major));
  }
  if (bytes.size() < offset + header_len) fail(ErrorCode::BadMagic, "truncated NPY header");
  const std::string header = bytes.substr(offset, header_len);

  const std::string descr = trim_quotes(dict_value(header, "descr"));
  if (descr != "<f4") fail(ErrorCode::DtypeMismatch, "expected '<f4', found '" + descr + "'");
  if (trim_quotes(dict_value(header, "fortran_order")) != "False")
    fail(ErrorCode::DtypeMismatch, "Fortran-ordered arrays are not supported");

  TensorFile t;
  t.shape = parse_shape(dict_value(header, "shape"));
  const std::size_t count = t.element_count();
  const std::size_t payload = offset + header_len;
  if (bytes.size() - payload != count * sizeof(float))
    fail(ErrorCode::DimMismatch, "payload holds " + std::to_string(bytes.size() - payload) + " bytes, shape needs " +
                                     std::to_string(count * sizeof(float)));
  t.data.resize(count);
  std::memcpy(t.data.data(), bytes.data() + payload, count * sizeof(float));
  for (float v : t.data)
    if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "tensor contains NaN or Inf");
  return t;
}

std::string encode_npy(const TensorFile& t) {
  if (t.element_count() != t.data.size()) fail(ErrorCode::DimMismatch, "shape does not match buffer length");
  std::string shape = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    shape += std::to_string(t.shape[i]);
    if (t.shape.size() == 1 || i + 1 < t.shape.size()) shape += ",";
    if (i + 1 < t.shape.size()) shape += " ";
  }
  shape += ")";
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape + ", }";
  // Pad so that magic + version + length + header is a multiple of 64, ending in '\n'.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::string out(kMagic, kMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
  out += header;
  out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  return out;
}

TensorFile load_tensor(const fs::path& path) { return parse_npy(read_file(path)); }

void save_tensor(const TensorFile& tensor, const fs::path& path) {
  const std::string bytes = encode_npy(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

void normalize_unit_range(Grid<float>& field) {
  auto values = field.values();
  if (values.empty()) return;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const float min_v = *lo;
  const float range = *hi - *lo;
  if (!(range > 0.0f)) {
    std::fill(values.begin(), values.end(), 0.0f);
    return;
  }
  for (auto& v : values) v = std::clamp((v - min_v) / range, 0.0f, 1.0f);
}

ImageBundle load_bundle(const fs::path& dir) {
  for (const char* name : {"image.png", "depth.npy", "attn.npy", "meta.json"})
    if (!fs::exists(dir / name)) fail(ErrorCode::MissingFile, (dir / name).string());

  ImageBundle bundle;
  bundle.id = dir.filename().string();
  if (bundle.id.empty()) bundle.id = dir.parent_path().filename().string();

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    bundle.meta.schema_version = meta.value("schema_version", kMetaSchemaVersion);
    bundle.meta.coarse = Dims{meta.at("h").get<int>(), meta.at("w").get<int>()};
    bundle.meta.attention_backbone = meta.value("attention_backbone", std::string("unknown"));
    bundle.meta.depth_backbone = meta.value("depth_backbone", std::string("unknown"));
    bundle.meta.tta = meta.value("tta", false);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, "meta.json: " + std::string(e.what()));
  }
  if (bundle.meta.schema_version != kMetaSchemaVersion)
    fail(ErrorCode::InvalidArgument, "unsupported meta.json schema_version " + std::to_string(bundle.meta.schema_version));
  if (bundle.meta.coarse.height < 1 || bundle.meta.coarse.width < 1)
    fail(ErrorCode::DimMismatch, "meta.json coarse dims must be positive");

  const auto rgb = read_png(dir / "image.png", 3);
  bundle.image = Grid<float>(rgb.dims(), 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) bundle.image[i] = rgb[i] / 255.0f;
  bundle.meta.original = Dims{meta.value("orig_height", rgb.height()), meta.value("orig_width", rgb.width())};

  bundle.depth = tensor_to_grid(load_tensor(dir / "depth.npy"), "depth.npy");
  if (bundle.depth.dims() != bundle.image.dims()) fail(ErrorCode::DimMismatch, "depth dims differ from image dims");
  normalize_unit_range(bundle.depth);

  bundle.attention = tensor_to_attention(load_tensor(dir / "attn.npy"), bundle.meta.coarse, "attn.npy");
  if (fs::exists(dir / "attn_flip.npy"))
    bundle.attention_flipped = tensor_to_attention(load_tensor(dir / "attn_flip.npy"), bundle.meta.coarse, "attn_flip.npy");

  if (fs::is_directory(dir / "gt")) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir / "gt"))
      if (entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      Segmentation gt(read_png(f, 1));
      if (gt.dims() != bundle.image.dims() && gt.dims() != bundle.meta.original)
        fail(ErrorCode::DimMismatch, f.string() + " matches neither image nor original dims");
      bundle.ground_truth.emplace(f.stem().string(), std::move(gt));
    }
  }
  return bundle;
}

void save_bundle(const ImageBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string());

  Grid<std::uint8_t> rgb(bundle.image.dims(), 3);
  for (std::size_t i = 0; i < rgb.size(); ++i)
    rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(bundle.image[i], 0.0f, 1.0f) * 255.0f));
  write_png(dir / "image.png", rgb);

  save_tensor(TensorFile{{static_cast<std::size_t>(bundle.depth.height()), static_cast<std::size_t>(bundle.depth.width())},
                         bundle.depth.storage()},
              dir / "depth.npy");
  save_tensor(attention_to_tensor(bundle.attention), dir / "attn.npy");
  if (bundle.attention_flipped) save_tensor(attention_to_tensor(*bundle.attention_flipped), dir / "attn_flip.npy");

  nlohmann::json meta = {
      {"schema_version", bundle.meta.schema_version},
      {"h", bundle.meta.coarse.height},
      {"w", bundle.meta.coarse.width},
      {"orig_height", bundle.meta.original.height},
      {"orig_width", bundle.meta.original.width},
      {"attention_backbone", bundle.meta.attention_backbone},
      {"depth_backbone", bundle.meta.depth_backbone},
      {"tta", bundle.meta.tta},
  };
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";

  if (!bundle.ground_truth.empty()) {
    fs::create_directories(dir / "gt", ec);
    for (const auto& [id, seg] : bundle.ground_truth) {
      Grid<std::uint8_t> img(seg.dims(), 1);
      for (std::size_t i = 0; i < img.size(); ++i) img[i] = seg.at(i) ? 255 : 0;
      write_png(dir / "gt" / (id + ".png"), img);
    }
  }
}

}  // namespace m2n2
