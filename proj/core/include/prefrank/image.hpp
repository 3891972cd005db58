#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace prefrank {

inline constexpr int kImageSize = 224;

// Grayscale raster, row-major, intensities in [0, 1].
class FaceImage {
 public:
  FaceImage() = default;
  FaceImage(int width, int height, double fill = 0.0);
  FaceImage(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  friend bool operator==(const FaceImage&, const FaceImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

// 8-bit quantization used by every on-disk format: round(255 * clamp(p)).
std::vector<std::uint8_t> to_gray8(const FaceImage& image);
FaceImage from_gray8(int width, int height, std::span<const std::uint8_t> gray);

std::vector<std::uint8_t> encode_png(const FaceImage& image);
FaceImage decode_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_pgm(const FaceImage& image);
FaceImage decode_pgm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Dispatches on extension (.png or .pgm).
void save_image(const std::filesystem::path& path, const FaceImage& image);
FaceImage load_image(const std::filesystem::path& path);

}  // namespace prefrank
