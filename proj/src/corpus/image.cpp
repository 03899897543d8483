#include "scenemem/corpus/image.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

namespace scenemem::corpus {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr file(std::fopen(path.c_str(), mode));
  if (!file) throw ImageDecodeError("cannot open image: " + path.string());
  return file;
}

RgbImage decode_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ImageDecodeError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw ImageDecodeError(path.string() + ": " + image.message);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  std::array<char, JMSG_LENGTH_MAX> message{};
};

void on_jpeg_error(j_common_ptr info) {
  auto* manager = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, manager->message.data());
  std::longjmp(manager->jump, 1);
}

RgbImage decode_jpeg(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  jpeg_decompress_struct info;
  JpegErrorManager errors;
  info.err = jpeg_std_error(&errors.base);
  errors.base.error_exit = on_jpeg_error;
  RgbImage out;
  if (setjmp(errors.jump)) {
    jpeg_destroy_decompress(&info);
    throw ImageDecodeError(path.string() + ": " + errors.message.data());
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file.get());
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  out = RgbImage(static_cast<int>(info.output_width), static_cast<int>(info.output_height));
  const std::size_t stride = static_cast<std::size_t>(out.width) * 3;
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = out.pixels.data() + info.output_scanline * stride;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return out;
}

}  // namespace

RgbImage decode_image(const std::filesystem::path& path) {
  std::array<unsigned char, 8> signature{};
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageDecodeError("cannot open image: " + path.string());
    in.read(reinterpret_cast<char*>(signature.data()), signature.size());
    if (in.gcount() < 3) throw ImageDecodeError("truncated image: " + path.string());
  }
  if (png_sig_cmp(signature.data(), 0, signature.size()) == 0) return decode_png(path);
  if (signature[0] == 0xFF && signature[1] == 0xD8 && signature[2] == 0xFF) {
    return decode_jpeg(path);
  }
  throw ImageDecodeError("unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.empty()) throw std::invalid_argument("write_png: empty image");
  png_image header;
  std::memset(&header, 0, sizeof(header));
  header.version = PNG_IMAGE_VERSION;
  header.width = static_cast<png_uint_32>(image.width);
  header.height = static_cast<png_uint_32>(image.height);
  header.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&header, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw std::runtime_error(path.string() + ": " + header.message);
  }
}

}  // namespace scenemem::corpus
