#include <png.h>

#include <cstring>

#include "divswap/error.hpp"
#include "divswap/file_util.hpp"
#include "divswap/metrics.hpp"

namespace divswap {

RgbImage read_png(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError("png: " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw FormatError("png: " + path.string() + ": " + message);
  }
  return RgbImage(image.width, image.height, std::move(pixels));
}

void write_png(const RgbImage& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0,
                                 nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  std::string buffer(size, '\0');
  if (!png_image_write_to_memory(&image, buffer.data(), &size, 0, img.pixels.data(),
                                 0, nullptr)) {
    throw IoError(std::string("png encode: ") + image.message);
  }
  buffer.resize(size);
  write_file_atomic(path, buffer);
}

}  // namespace divswap
