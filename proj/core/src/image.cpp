#include "prefrank/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "prefrank/errors.hpp"

namespace prefrank {

FaceImage::FaceImage(int width, int height, double fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
  if (width < 0 || height < 0) throw InvalidImage("negative dimensions");
}

FaceImage::FaceImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0 ||
      pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw InvalidImage("pixel count does not match dimensions");
}

std::vector<std::uint8_t> to_gray8(const FaceImage& image) {
  std::vector<std::uint8_t> out(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), out.begin(), [](double p) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(p, 0.0, 1.0)));
  });
  return out;
}

FaceImage from_gray8(int width, int height, std::span<const std::uint8_t> gray) {
  std::vector<double> px(gray.size());
  std::transform(gray.begin(), gray.end(), px.begin(), [](std::uint8_t g) { return g / 255.0; });
  return FaceImage(width, height, std::move(px));
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct PngReadSource {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep data, png_size_t length) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->offset + length > src->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, src->bytes.data() + src->offset, length);
  src->offset += length;
}

void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const FaceImage& image) {
  if (image.empty()) throw InvalidImage("cannot encode an empty image");
  auto gray = to_gray8(image);
  std::vector<std::uint8_t> out;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("png: encoder failure");
  }
  {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
                 static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height(); ++y)
      png_write_row(png, gray.data() + static_cast<std::size_t>(y) * image.width());
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

FaceImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw FormatError("not a PNG stream");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  PngReadSource src{bytes, 0};
  std::vector<std::uint8_t> gray;
  volatile int width = 0;
  volatile int height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: malformed stream");
  }
  {
    png_set_read_fn(png, &src, png_read_from_span);
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const auto color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
      png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    gray.resize(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
      png_read_row(png, gray.data() + static_cast<std::size_t>(y) * width, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return from_gray8(width, height, gray);
}

std::vector<std::uint8_t> encode_pgm(const FaceImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  auto gray = to_gray8(image);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), gray.begin(), gray.end());
  return out;
}

FaceImage decode_pgm(std::span<const std::uint8_t> bytes) {
  // Header: magic, width, height, maxval, each separated by whitespace.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P5") throw FormatError("not a binary PGM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw FormatError("malformed PGM header");
  }
  ++pos;  // single whitespace after maxval
  if (maxval != 255) throw FormatError("only 8-bit PGM is supported");
  const auto n = static_cast<std::size_t>(width) * height;
  if (bytes.size() < pos + n) throw FormatError("truncated PGM");
  return from_gray8(width, height, bytes.subspan(pos, n));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void save_image(const std::filesystem::path& path, const FaceImage& image) {
  if (path.extension() == ".pgm")
    write_bytes(path, encode_pgm(image));
  else
    write_bytes(path, encode_png(image));
}

FaceImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (path.extension() == ".pgm") return decode_pgm(bytes);
  return decode_png(bytes);
}

}  // namespace prefrank
