#include "png_io.hpp"

#include <png.h>

#include <fstream>

#include "error.hpp"

namespace m2n2 {
namespace {

png_uint_32 format_for(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
    default: fail(ErrorCode::InvalidArgument, "unsupported PNG channel count");
  }
}

}  // namespace

Grid<std::uint8_t> read_png(const std::filesystem::path& path, int channels) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFile, path.string());
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail(ErrorCode::IoFailure, path.string() + ": " + image.message);
  image.format = format_for(channels);
  Grid<std::uint8_t> out(Dims{static_cast<int>(image.height), static_cast<int>(image.width)}, channels);
  if (!png_image_finish_read(&image, nullptr, out.storage().data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::IoFailure, path.string() + ": " + image.message);
  }
  return out;
}

std::string encode_png(const Grid<std::uint8_t>& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = format_for(img.channels());
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.storage().data(), 0, nullptr))
    fail(ErrorCode::IoFailure, std::string("PNG size query failed: ") + image.message);
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, img.storage().data(), 0, nullptr))
    fail(ErrorCode::IoFailure, std::string("PNG encode failed: ") + image.message);
  bytes.resize(size);
  return bytes;
}

void write_png(const std::filesystem::path& path, const Grid<std::uint8_t>& image) {
  const std::string bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace m2n2
